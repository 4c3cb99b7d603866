#pragma once

// Shared fixtures plus independent reference implementations. The reference
// code here deliberately avoids the library's data structures and algorithms
// so that agreement between the two is meaningful evidence, not an identity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fieldforge/corpus.hpp"
#include "fieldforge/fusion.hpp"
#include "fieldforge/image.hpp"
#include "fieldforge/mosaic.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() {
  return std::filesystem::path(FIELDFORGE_TEST_DATA_DIR);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Reference IoU: count unit lattice cells. Only valid for integer-coordinate
// boxes, which is all the fixture cases need.
inline double lattice_iou(int ax1, int ay1, int ax2, int ay2, int bx1,
                          int by1, int bx2, int by2) {
  long inter = 0, uni = 0;
  const int x1 = std::min(ax1, bx1), x2 = std::max(ax2, bx2);
  const int y1 = std::min(ay1, by1), y2 = std::max(ay2, by2);
  for (int y = y1; y < y2; ++y) {
    for (int x = x1; x < x2; ++x) {
      const bool in_a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool in_b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      if (in_a && in_b)
        ++inter;
      if (in_a || in_b)
        ++uni;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Closed-form IoU written independently of the library (different
// intersection test structure, long double accumulation).
inline double ref_iou(const fieldforge::fusion::ScoredBox& a,
                      const fieldforge::fusion::ScoredBox& b) {
  if (a.x2 <= b.x1 || b.x2 <= a.x1 || a.y2 <= b.y1 || b.y2 <= a.y1)
    return 0.0;
  const long double iw =
      std::min<long double>(a.x2, b.x2) - std::max<long double>(a.x1, b.x1);
  const long double ih =
      std::min<long double>(a.y2, b.y2) - std::max<long double>(a.y1, b.y1);
  const long double inter = iw * ih;
  const long double area_a =
      (static_cast<long double>(a.x2) - a.x1) *
      (static_cast<long double>(a.y2) - a.y1);
  const long double area_b =
      (static_cast<long double>(b.x2) - b.x1) *
      (static_cast<long double>(b.y2) - b.y1);
  const long double uni = area_a + area_b - inter;
  return uni <= 0.0L ? 0.0 : static_cast<double>(inter / uni);
}

// ---------------------------------------------------------------------------
// Reference NMS, straight from the definition: repeatedly take the
// highest-scoring remaining box, drop every remaining same-label box whose
// IoU with it exceeds the threshold.
inline std::vector<fieldforge::fusion::ScoredBox>
ref_nms(std::vector<fieldforge::fusion::ScoredBox> boxes,
        double iou_threshold) {
  using fieldforge::fusion::ScoredBox;
  std::vector<ScoredBox> kept;
  std::vector<bool> alive(boxes.size(), true);
  for (;;) {
    std::size_t best = boxes.size();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (!alive[i])
        continue;
      if (best == boxes.size() ||
          fieldforge::fusion::detail::score_order(boxes[i], boxes[best]))
        best = i;
    }
    if (best == boxes.size())
      break;
    alive[best] = false;
    kept.push_back(boxes[best]);
    for (std::size_t i = 0; i < boxes.size(); ++i)
      if (alive[i] && boxes[i].label == boxes[best].label &&
          ref_iou(boxes[i], boxes[best]) > iou_threshold)
        alive[i] = false;
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Reference weighted-box fusion. Index-based clustering, recomputing every
// fused box from raw members each time with long double sums.
inline std::vector<fieldforge::fusion::ScoredBox>
ref_wbf(const std::vector<std::vector<fieldforge::fusion::ScoredBox>>& lists,
        double iou_threshold, std::size_t source_count) {
  using fieldforge::fusion::ScoredBox;
  std::vector<ScoredBox> pool;
  for (const auto& l : lists)
    pool.insert(pool.end(), l.begin(), l.end());
  std::stable_sort(pool.begin(), pool.end(),
                   fieldforge::fusion::detail::score_order);

  std::vector<std::vector<ScoredBox>> clusters;
  const auto fit = [](const std::vector<ScoredBox>& members) {
    long double sw = 0, x1 = 0, y1 = 0, x2 = 0, y2 = 0, ssum = 0;
    for (const auto& m : members) {
      sw += m.score;
      x1 += m.score * m.x1;
      y1 += m.score * m.y1;
      x2 += m.score * m.x2;
      y2 += m.score * m.y2;
      ssum += m.score;
    }
    ScoredBox f;
    f.label = members.front().label;
    if (sw > 0) {
      f.x1 = static_cast<double>(x1 / sw);
      f.y1 = static_cast<double>(y1 / sw);
      f.x2 = static_cast<double>(x2 / sw);
      f.y2 = static_cast<double>(y2 / sw);
    } else {
      long double ux1 = 0, uy1 = 0, ux2 = 0, uy2 = 0;
      for (const auto& m : members) {
        ux1 += m.x1;
        uy1 += m.y1;
        ux2 += m.x2;
        uy2 += m.y2;
      }
      const auto n = static_cast<long double>(members.size());
      f.x1 = static_cast<double>(ux1 / n);
      f.y1 = static_cast<double>(uy1 / n);
      f.x2 = static_cast<double>(ux2 / n);
      f.y2 = static_cast<double>(uy2 / n);
    }
    f.score = static_cast<double>(
        ssum / static_cast<long double>(members.size()));
    return f;
  };

  for (const auto& box : pool) {
    double best = 0.0;
    std::size_t hit = clusters.size();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const ScoredBox fused = fit(clusters[c]);
      if (fused.label != box.label)
        continue;
      const double v = ref_iou(fused, box);
      if (v >= iou_threshold && v > best) {
        best = v;
        hit = c;
      }
    }
    if (hit == clusters.size())
      clusters.push_back({box});
    else
      clusters[hit].push_back(box);
  }

  std::vector<ScoredBox> out;
  for (const auto& members : clusters) {
    ScoredBox f = fit(members);
    f.score *= static_cast<double>(std::min(members.size(), source_count)) /
               static_cast<double>(source_count);
    out.push_back(f);
  }
  std::stable_sort(out.begin(), out.end(),
                   fieldforge::fusion::detail::score_order);
  return out;
}

// ---------------------------------------------------------------------------
// Raw CSV flag counter: scans text fields directly, no corpus parser.
inline std::array<long, 4> ref_flag_counts(const std::string& csv_text) {
  std::array<long, 4> counts{0, 0, 0, 0};
  std::istringstream in(csv_text);
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ','); // id
    for (int k = 0; k < 4; ++k) {
      std::getline(row, field, ',');
      if (field == "1")
        ++counts[k];
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Reference greedy matcher over raw arrays (indices, no Matching struct).
struct RefMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

inline RefMatch
ref_match(const std::vector<fieldforge::fusion::ScoredBox>& preds,
          const std::vector<fieldforge::mosaic::MosaicAnnotation>& truth,
          double iou_threshold) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fieldforge::fusion::detail::score_order(preds[a], preds[b]);
  });
  std::vector<bool> used(truth.size(), false);
  RefMatch m;
  for (const std::size_t pi : order) {
    double best = -1.0;
    std::size_t best_t = truth.size();
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
      if (used[ti] || truth[ti].sick != 1)
        continue;
      fieldforge::fusion::ScoredBox t{
          static_cast<double>(truth[ti].bbox.x),
          static_cast<double>(truth[ti].bbox.y),
          static_cast<double>(truth[ti].bbox.x + truth[ti].bbox.w),
          static_cast<double>(truth[ti].bbox.y + truth[ti].bbox.h), 1.0, 1};
      const double v = ref_iou(preds[pi], t);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_t = ti;
      }
    }
    if (best_t < truth.size()) {
      used[best_t] = true;
      m.pairs.emplace_back(pi, best_t);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Small deterministic inputs.

inline fieldforge::Image solid_image(int w, int h, fieldforge::Rgb color) {
  fieldforge::Image img(w, h);
  img.fill(color);
  return img;
}

// Image with distinct per-pixel values so geometric ops are distinguishable.
inline fieldforge::Image gradient_image(int w, int h, std::uint8_t salt = 0) {
  fieldforge::Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.set(x, y,
              {static_cast<std::uint8_t>((x * 7 + salt) & 0xff),
               static_cast<std::uint8_t>((y * 13 + salt) & 0xff),
               static_cast<std::uint8_t>((x + y + salt) & 0xff)});
  return img;
}

// Compact geometry for fast mosaic tests: 4x4 grid of 8x6 tiles.
inline fieldforge::mosaic::MosaicSpec small_spec(std::uint64_t seed = 1,
                                                 int soil_num = 1,
                                                 int soil_den = 5) {
  fieldforge::mosaic::MosaicSpec spec;
  spec.width_px = 32;
  spec.height_px = 24;
  spec.grid_cols = 4;
  spec.grid_rows = 4;
  spec.tile_w = 8;
  spec.tile_h = 6;
  spec.soil_ratio_num = soil_num;
  spec.soil_ratio_den = soil_den;
  spec.rng_seed = seed;
  return spec;
}

// One image per class, visually distinct colors, plus deterministic ids.
inline std::vector<fieldforge::corpus::LabeledImage>
tiny_pool(int w = 16, int h = 12) {
  using fieldforge::corpus::ClassLabel;
  std::vector<fieldforge::corpus::LabeledImage> pool;
  pool.push_back({{"Train_h", ClassLabel::healthy},
                  solid_image(w, h, {40, 200, 40})});
  pool.push_back({{"Train_m", ClassLabel::multiple_diseases},
                  solid_image(w, h, {180, 60, 180})});
  pool.push_back({{"Train_r", ClassLabel::rust},
                  solid_image(w, h, {220, 140, 30})});
  pool.push_back({{"Train_s", ClassLabel::scab},
                  solid_image(w, h, {90, 90, 20})});
  return pool;
}

inline int count_differing_pixels(const fieldforge::Image& a,
                                  const fieldforge::Image& b) {
  int n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (a.at(x, y) != b.at(x, y))
        ++n;
  return n;
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("fieldforge_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

} // namespace testsupport
