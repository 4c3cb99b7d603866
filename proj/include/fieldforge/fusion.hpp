#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fieldforge/image.hpp"

namespace fieldforge::fusion {

// Detection rectangle in corner form, x1 < x2 and y1 < y2, score in [0,1].
struct ScoredBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double score = 0;
  int label = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

inline void validate_box(const ScoredBox& b) {
  if (!(b.x1 < b.x2 && b.y1 < b.y2))
    throw std::invalid_argument("ScoredBox: corners must be ordered");
  if (!(b.score >= 0.0 && b.score <= 1.0))
    throw std::invalid_argument("ScoredBox: score outside [0,1]");
}

inline double iou(const ScoredBox& a, const ScoredBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  if (inter <= 0.0)
    return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline void check_iou_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("iou_threshold must lie in (0,1]");
}

namespace detail {

// Score descending; ties broken by corners then label for determinism.
inline bool score_order(const ScoredBox& a, const ScoredBox& b) {
  if (a.score != b.score)
    return a.score > b.score;
  if (a.x1 != b.x1) return a.x1 < b.x1;
  if (a.y1 != b.y1) return a.y1 < b.y1;
  if (a.x2 != b.x2) return a.x2 < b.x2;
  if (a.y2 != b.y2) return a.y2 < b.y2;
  return a.label < b.label;
}

} // namespace detail

// Greedy NMS: walk boxes by descending score, keep a box iff its IoU with
// every already-kept box of the same label is <= threshold.
inline std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes,
                                  double iou_threshold) {
  check_iou_threshold(iou_threshold);
  std::sort(boxes.begin(), boxes.end(), detail::score_order);
  std::vector<ScoredBox> kept;
  for (const ScoredBox& b : boxes) {
    bool keep = true;
    for (const ScoredBox& k : kept) {
      if (k.label == b.label && iou(k, b) > iou_threshold) {
        keep = false;
        break;
      }
    }
    if (keep)
      kept.push_back(b);
  }
  return kept;
}

namespace detail {

struct Cluster {
  std::vector<ScoredBox> members;
  ScoredBox fused; // score-weighted corner average, score = mean member score

  void refit() {
    double sw = 0, sx1 = 0, sy1 = 0, sx2 = 0, sy2 = 0, ssum = 0;
    for (const ScoredBox& m : members) {
      sw += m.score;
      sx1 += m.score * m.x1;
      sy1 += m.score * m.y1;
      sx2 += m.score * m.x2;
      sy2 += m.score * m.y2;
      ssum += m.score;
    }
    fused.label = members.front().label;
    if (sw > 0) {
      fused.x1 = sx1 / sw;
      fused.y1 = sy1 / sw;
      fused.x2 = sx2 / sw;
      fused.y2 = sy2 / sw;
    } else {
      // All-zero scores: plain average.
      fused.x1 = fused.y1 = fused.x2 = fused.y2 = 0;
      for (const ScoredBox& m : members) {
        fused.x1 += m.x1 / members.size();
        fused.y1 += m.y1 / members.size();
        fused.x2 += m.x2 / members.size();
        fused.y2 += m.y2 / members.size();
      }
    }
    fused.score = ssum / static_cast<double>(members.size());
  }
};

} // namespace detail

// Weighted boxes fusion. Boxes from all lists are pooled, sorted by score
// and greedily assigned to the cluster whose running fused box has the
// highest IoU >= threshold (same label only). Fused corners are the
// score-weighted average of cluster members; the fused score is the mean
// member score scaled by min(cluster size, source_count) / source_count.
inline std::vector<ScoredBox> wbf(std::span<const std::vector<ScoredBox>> box_lists,
                                  double iou_threshold,
                                  std::size_t source_count) {
  check_iou_threshold(iou_threshold);
  if (source_count < box_lists.size())
    throw std::invalid_argument(
        "wbf: source_count must be >= number of box lists");
  if (source_count == 0)
    throw std::invalid_argument("wbf: source_count must be positive");

  std::vector<ScoredBox> pool;
  for (const auto& list : box_lists)
    pool.insert(pool.end(), list.begin(), list.end());
  std::sort(pool.begin(), pool.end(), detail::score_order);

  std::vector<detail::Cluster> clusters;
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  for (const ScoredBox& b : pool) {
    // Best-matching cluster: highest IoU >= threshold, first index on ties.
    std::size_t best = npos;
    double best_iou = -1.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].fused.label != b.label)
        continue;
      const double v = iou(clusters[i].fused, b);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best = i;
      }
    }
    if (best == npos) {
      clusters.push_back({{b}, {}});
      clusters.back().refit();
    } else {
      clusters[best].members.push_back(b);
      clusters[best].refit();
    }
  }

  std::vector<ScoredBox> fused;
  fused.reserve(clusters.size());
  for (detail::Cluster& c : clusters) {
    ScoredBox out = c.fused;
    const double n = static_cast<double>(c.members.size());
    out.score = out.score *
                std::min(n, static_cast<double>(source_count)) /
                static_cast<double>(source_count);
    fused.push_back(out);
  }
  std::sort(fused.begin(), fused.end(), detail::score_order);
  return fused;
}

inline std::vector<ScoredBox> wbf(const std::vector<std::vector<ScoredBox>>& lists,
                                  double iou_threshold, std::size_t source_count) {
  return wbf(std::span<const std::vector<ScoredBox>>(lists), iou_threshold,
             source_count);
}

enum class TtaKind { identity, hflip, vflip, rot180 };

constexpr const char* to_string(TtaKind k) {
  switch (k) {
  case TtaKind::identity: return "identity";
  case TtaKind::hflip: return "hflip";
  case TtaKind::vflip: return "vflip";
  case TtaKind::rot180: return "rot180";
  }
  return "?";
}

// Axis-aligned test-time transform over a fixed image size. All four kinds
// are involutions, so each transform is its own inverse.
struct TtaTransform {
  TtaKind kind = TtaKind::identity;
  int image_w = 0;
  int image_h = 0;

  friend bool operator==(const TtaTransform&, const TtaTransform&) = default;
};

inline std::vector<TtaTransform> standard_transforms(int image_w, int image_h) {
  return {{TtaKind::identity, image_w, image_h},
          {TtaKind::hflip, image_w, image_h},
          {TtaKind::vflip, image_w, image_h},
          {TtaKind::rot180, image_w, image_h}};
}

inline TtaTransform inverse(const TtaTransform& t) { return t; }

inline std::vector<ScoredBox> transform_boxes(std::span<const ScoredBox> boxes,
                                              const TtaTransform& t) {
  const double w = t.image_w;
  const double h = t.image_h;
  std::vector<ScoredBox> out;
  out.reserve(boxes.size());
  for (const ScoredBox& b : boxes) {
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > w || b.y2 > h)
      throw std::out_of_range("transform_boxes: box outside image bounds");
    ScoredBox m = b;
    const bool fx = t.kind == TtaKind::hflip || t.kind == TtaKind::rot180;
    const bool fy = t.kind == TtaKind::vflip || t.kind == TtaKind::rot180;
    if (fx) {
      m.x1 = w - b.x2;
      m.x2 = w - b.x1;
    }
    if (fy) {
      m.y1 = h - b.y2;
      m.y2 = h - b.y1;
    }
    out.push_back(m);
  }
  return out;
}

inline Image transform_image(const Image& img, const TtaTransform& t) {
  switch (t.kind) {
  case TtaKind::identity: return img;
  case TtaKind::hflip: return flip_horizontal(img);
  case TtaKind::vflip: return flip_vertical(img);
  case TtaKind::rot180: return rotate180(img);
  }
  return img;
}

using DetectionFn = std::function<std::vector<ScoredBox>(const Image&)>;

// Runs the model on each transformed copy of the image, maps predictions
// back through the transform's inverse and fuses everything with WBF using
// source_count = number of transforms.
inline std::vector<ScoredBox> tta_fuse(const DetectionFn& model,
                                       const Image& image,
                                       std::span<const TtaTransform> transforms,
                                       double iou_threshold) {
  if (transforms.empty())
    throw std::invalid_argument("tta_fuse: transform list is empty");
  if (std::none_of(transforms.begin(), transforms.end(), [](const auto& t) {
        return t.kind == TtaKind::identity;
      }))
    throw std::invalid_argument("tta_fuse: transforms must include identity");

  std::vector<std::vector<ScoredBox>> lists;
  lists.reserve(transforms.size());
  for (const TtaTransform& t : transforms) {
    try {
      const Image transformed = transform_image(image, t);
      const std::vector<ScoredBox> predicted = model(transformed);
      lists.push_back(transform_boxes(predicted, inverse(t)));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("tta_fuse: model failed under ") +
                               to_string(t.kind) + ": " + e.what());
    }
  }
  return wbf(lists, iou_threshold, transforms.size());
}

} // namespace fieldforge::fusion
