#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldforge/corpus.hpp"
#include "fieldforge/fusion.hpp"
#include "fieldforge/image.hpp"
#include "fieldforge/metrics.hpp"
#include "fieldforge/mosaic.hpp"
#include "fieldforge/rng.hpp"

namespace fieldforge::pipeline {

using ClassProbs = std::array<double, corpus::kClassCount>;

// A detection resolved to its grid tile. The annotation carries the source
// image id, which is how the close-up re-photograph step finds the
// high-fidelity original.
struct Candidate {
  std::size_t mosaic_index = 0;
  int row = 0;
  int col = 0;
  mosaic::MosaicAnnotation annotation;
  double score = 0.0; // best box score that resolved here
};

// Models see the whole MosaicItem (the oracles read its annotations, image
// models read its pixels); mosaic_index keys RNG substreams so results do
// not depend on processing order.
using IdentifierFn = std::function<std::vector<fusion::ScoredBox>(
    const mosaic::MosaicItem&, std::size_t)>;
using ClassifierFn = std::function<ClassProbs(const Candidate&)>;
using LabelLookup = std::function<corpus::ClassLabel(const std::string&)>;

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline LabelLookup
make_label_lookup(std::span<const corpus::HighFidelityRecord> records) {
  auto table = std::make_shared<
      std::unordered_map<std::string, corpus::ClassLabel>>();
  table->reserve(records.size());
  for (const auto& r : records)
    table->emplace(r.image_id, r.label);
  return [table](const std::string& id) {
    const auto it = table->find(id);
    if (it == table->end())
      throw std::out_of_range("label lookup: unknown image id '" + id + "'");
    return it->second;
  };
}

namespace detail {

inline RandomStream tile_stream(std::uint64_t seed, std::size_t mosaic_index,
                                int row, int col) {
  return derive_stream(seed, mosaic_index, row, col);
}

inline fusion::ScoredBox box_for_cell(const mosaic::Bbox& b) {
  return {static_cast<double>(b.x), static_cast<double>(b.y),
          static_cast<double>(b.x + b.w), static_cast<double>(b.y + b.h),
          0.0, 1};
}

} // namespace detail

// Ground-truth-backed test double: emits each sick tile with probability
// 1 - miss_rate (score in [0.5,1)), and every other tile with probability
// false_alarm_rate (score in [0,0.5)). One substream per tile, decision
// drawn before score.
inline IdentifierFn oracle_identifier(double miss_rate,
                                      double false_alarm_rate,
                                      std::uint64_t rng_seed) {
  if (!(miss_rate >= 0.0 && miss_rate <= 1.0) ||
      !(false_alarm_rate >= 0.0 && false_alarm_rate <= 1.0))
    throw std::invalid_argument("oracle_identifier: rates must be in [0,1]");

  return [=](const mosaic::MosaicItem& item, std::size_t mosaic_index) {
    std::vector<fusion::ScoredBox> out;
    for (int row = 0; row < item.spec.grid_rows; ++row) {
      for (int col = 0; col < item.spec.grid_cols; ++col) {
        RandomStream rng =
            detail::tile_stream(rng_seed, mosaic_index, row, col);
        const auto* a = mosaic::annotation_at(item, row, col);
        const double u = rng.uniform01();
        if (a != nullptr && a->sick == 1) {
          if (u >= miss_rate) {
            auto box = detail::box_for_cell(a->bbox);
            box.score = 0.5 + 0.5 * rng.uniform01();
            out.push_back(box);
          }
        } else if (u < false_alarm_rate) {
          auto box = detail::box_for_cell(
              mosaic::cell_bbox(row, col, item.spec));
          box.score = 0.5 * rng.uniform01();
          out.push_back(box);
        }
      }
    }
    return out;
  };
}

// Returns the one-hot truth with probability 1 - error_rate, otherwise a
// uniformly chosen wrong class.
inline ClassifierFn oracle_classifier(double error_rate,
                                      std::uint64_t rng_seed,
                                      LabelLookup truth) {
  if (!(error_rate >= 0.0 && error_rate <= 1.0))
    throw std::invalid_argument("oracle_classifier: rate must be in [0,1]");

  return [=](const Candidate& c) {
    const corpus::ClassLabel actual = truth(c.annotation.id);
    RandomStream rng = derive_stream(rng_seed, std::uint64_t{0x637d},
                                     c.mosaic_index, c.row, c.col);
    corpus::ClassLabel predicted = actual;
    if (rng.uniform01() < error_rate) {
      std::size_t k = rng.below(corpus::kClassCount - 1);
      std::size_t idx = 0;
      for (const auto label : corpus::all_classes) {
        if (label == actual)
          continue;
        if (idx == k) {
          predicted = label;
          break;
        }
        ++idx;
      }
    }
    ClassProbs probs{};
    probs[corpus::class_index(predicted)] = 1.0;
    return probs;
  };
}

// Correlated test double for the best-case coupling: wrong exactly on the
// tiles the identifier (same seed) would have missed, correct on every tile
// it kept. End-to-end accuracy then collapses to the identifier's recall.
inline ClassifierFn nested_error_classifier(double identifier_miss_rate,
                                            std::uint64_t identifier_seed,
                                            LabelLookup truth) {
  if (!(identifier_miss_rate >= 0.0 && identifier_miss_rate <= 1.0))
    throw std::invalid_argument(
        "nested_error_classifier: rate must be in [0,1]");

  return [=](const Candidate& c) {
    const corpus::ClassLabel actual = truth(c.annotation.id);
    corpus::ClassLabel predicted = actual;
    if (c.annotation.sick == 1) {
      RandomStream rng =
          detail::tile_stream(identifier_seed, c.mosaic_index, c.row, c.col);
      if (rng.uniform01() < identifier_miss_rate) {
        const auto idx =
            (corpus::class_index(actual) + 1) % corpus::kClassCount;
        predicted = corpus::all_classes[idx];
      }
    }
    ClassProbs probs{};
    probs[corpus::class_index(predicted)] = 1.0;
    return probs;
  };
}

namespace detail {

// 4x4x4 RGB histogram, L1-normalized.
inline std::array<double, 64> color_histogram(const Image& img) {
  std::array<double, 64> h{};
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  if (n == 0)
    return h;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = img.at(x, y);
      h[static_cast<std::size_t>(p[0] >> 6) * 16 +
        static_cast<std::size_t>(p[1] >> 6) * 4 + (p[2] >> 6)] += 1.0;
    }
  }
  for (auto& v : h)
    v /= static_cast<double>(n);
  return h;
}

inline double distance(const std::array<double, 64>& a,
                       const std::array<double, 64>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline void normalize(std::span<double> weights) {
  double s = 0.0;
  for (const double w : weights)
    s += w;
  for (double& w : weights)
    w /= s;
}

} // namespace detail

// Nearest-centroid over color histograms. Not a serious model, a
// deterministic sanity baseline: it memorizes its own training set and
// scores chance on noise.
class CentroidClassifier {
public:
  static CentroidClassifier
  train(std::span<const corpus::LabeledImage> examples) {
    CentroidClassifier model;
    std::array<std::size_t, corpus::kClassCount> counts{};
    for (const auto& ex : examples) {
      const auto feat = detail::color_histogram(ex.pixels);
      const std::size_t i = corpus::class_index(ex.record.label);
      for (std::size_t b = 0; b < feat.size(); ++b)
        model.centroids_[i][b] += feat[b];
      ++counts[i];
    }
    for (std::size_t i = 0; i < corpus::kClassCount; ++i) {
      if (counts[i] == 0)
        throw TrainingError("CentroidClassifier: no training images for '" +
                            std::string(corpus::to_string(
                                corpus::all_classes[i])) +
                            "'");
      for (auto& v : model.centroids_[i])
        v /= static_cast<double>(counts[i]);
    }
    return model;
  }

  ClassProbs predict(const Image& img) const {
    const auto feat = detail::color_histogram(img);
    ClassProbs probs{};
    for (std::size_t i = 0; i < corpus::kClassCount; ++i)
      probs[i] = 1.0 / (detail::distance(feat, centroids_[i]) + 1e-9);
    detail::normalize(probs);
    return probs;
  }

private:
  std::array<std::array<double, 64>, corpus::kClassCount> centroids_{};
};

// Tile-level sick/healthy/soil nearest-centroid detector over mosaic cells.
class TileIdentifier {
public:
  static TileIdentifier train(std::span<const mosaic::MosaicItem> fields) {
    TileIdentifier model;
    std::array<std::size_t, 3> counts{};
    for (const auto& item : fields) {
      for (int row = 0; row < item.spec.grid_rows; ++row) {
        for (int col = 0; col < item.spec.grid_cols; ++col) {
          const auto cell = mosaic::cell_bbox(row, col, item.spec);
          const auto feat = detail::color_histogram(
              item.image.crop(cell.x, cell.y, cell.w, cell.h));
          const auto* a = mosaic::annotation_at(item, row, col);
          const std::size_t k =
              a == nullptr ? kSoil : (a->sick == 1 ? kSick : kHealthy);
          for (std::size_t b = 0; b < feat.size(); ++b)
            model.centroids_[k][b] += feat[b];
          ++counts[k];
        }
      }
    }
    if (counts[kSick] == 0 || counts[kHealthy] == 0)
      throw TrainingError(
          "TileIdentifier: training fields need both sick and healthy tiles");
    for (std::size_t k = 0; k < 3; ++k) {
      model.has_class_[k] = counts[k] > 0;
      if (counts[k] > 0)
        for (auto& v : model.centroids_[k])
          v /= static_cast<double>(counts[k]);
    }
    return model;
  }

  std::vector<fusion::ScoredBox> detect(const mosaic::MosaicItem& item) const {
    std::vector<fusion::ScoredBox> out;
    for (int row = 0; row < item.spec.grid_rows; ++row) {
      for (int col = 0; col < item.spec.grid_cols; ++col) {
        const auto cell = mosaic::cell_bbox(row, col, item.spec);
        const auto feat = detail::color_histogram(
            item.image.crop(cell.x, cell.y, cell.w, cell.h));
        std::array<double, 3> w{};
        for (std::size_t k = 0; k < 3; ++k)
          w[k] = has_class_[k]
                     ? 1.0 / (detail::distance(feat, centroids_[k]) + 1e-9)
                     : 0.0;
        detail::normalize(w);
        if (w[kSick] >= w[kHealthy] && w[kSick] >= w[kSoil]) {
          auto box = detail::box_for_cell(cell);
          box.score = w[kSick];
          out.push_back(box);
        }
      }
    }
    return out;
  }

private:
  static constexpr std::size_t kHealthy = 0, kSick = 1, kSoil = 2;
  std::array<std::array<double, 64>, 3> centroids_{};
  std::array<bool, 3> has_class_{};
};

struct CropResult {
  std::vector<Candidate> candidates; // unique tiles, (row,col) order
  std::size_t unresolved = 0;        // below threshold or soil
};

// Resolves each box to the grid tile with maximal IoU >= threshold
// (lexicographically first cell on ties). Soil tiles have no source image
// to re-photograph, so they count as unresolved. Duplicate hits on one
// tile collapse, keeping the best score.
inline CropResult crop_candidates(const mosaic::MosaicItem& item,
                                  std::size_t mosaic_index,
                                  std::span<const fusion::ScoredBox> boxes,
                                  double iou_threshold) {
  fusion::check_iou_threshold(iou_threshold);
  const auto& spec = item.spec;

  CropResult result;
  std::map<std::pair<int, int>, Candidate> by_cell;
  for (const auto& box : boxes) {
    fusion::validate_box(box);
    double best_iou = 0.0;
    int best_row = -1, best_col = -1;
    const int r0 = std::max(0, static_cast<int>(box.y1) / spec.tile_h);
    const int c0 = std::max(0, static_cast<int>(box.x1) / spec.tile_w);
    for (int row = r0; row < spec.grid_rows; ++row) {
      if (static_cast<double>(row) * spec.tile_h >= box.y2)
        break;
      for (int col = c0; col < spec.grid_cols; ++col) {
        if (static_cast<double>(col) * spec.tile_w >= box.x2)
          break;
        const double v = fusion::iou(
            box, detail::box_for_cell(mosaic::cell_bbox(row, col, spec)));
        if (v >= iou_threshold && v > best_iou) {
          best_iou = v;
          best_row = row;
          best_col = col;
        }
      }
    }
    if (best_row < 0) {
      ++result.unresolved;
      continue;
    }
    const auto* a = mosaic::annotation_at(item, best_row, best_col);
    if (a == nullptr) {
      ++result.unresolved;
      continue;
    }
    auto [it, inserted] = by_cell.try_emplace(
        {best_row, best_col},
        Candidate{mosaic_index, best_row, best_col, *a, box.score});
    if (!inserted)
      it->second.score = std::max(it->second.score, box.score);
  }
  result.candidates.reserve(by_cell.size());
  for (auto& [cell, cand] : by_cell)
    result.candidates.push_back(std::move(cand));
  return result;
}

// Adapters for models that only look at pixels.
inline IdentifierFn from_image_detector(
    std::function<std::vector<fusion::ScoredBox>(const Image&)> fn) {
  return [fn = std::move(fn)](const mosaic::MosaicItem& item, std::size_t) {
    return fn(item.image);
  };
}

inline IdentifierFn
with_tta(std::function<std::vector<fusion::ScoredBox>(const Image&)> fn,
         double iou_threshold = 0.55) {
  return [fn = std::move(fn),
          iou_threshold](const mosaic::MosaicItem& item, std::size_t) {
    const double w = item.image.width();
    const double h = item.image.height();
    auto boxes = fusion::tta_fuse(fn, item.image,
                                  fusion::standard_transforms(
                                      item.image.width(), item.image.height()),
                                  iou_threshold);
    // The weighted refit can push a border box past the frame by an ulp;
    // clip so downstream bounds checks stay strict.
    for (auto& b : boxes) {
      b.x1 = std::clamp(b.x1, 0.0, w);
      b.y1 = std::clamp(b.y1, 0.0, h);
      b.x2 = std::clamp(b.x2, 0.0, w);
      b.y2 = std::clamp(b.y2, 0.0, h);
    }
    return boxes;
  };
}

using ImageProvider = std::function<Image(const std::string&)>;

inline ClassifierFn make_image_classifier(
    std::function<ClassProbs(const Image&)> fn, ImageProvider provider) {
  return [fn = std::move(fn),
          provider = std::move(provider)](const Candidate& c) {
    return fn(provider(c.annotation.id));
  };
}

// Averages predictions over the image and its mirror, the light test-time
// augmentation used on the classifier side.
inline std::function<ClassProbs(const Image&)>
with_flip_averaging(std::function<ClassProbs(const Image&)> fn) {
  return [fn = std::move(fn)](const Image& img) {
    ClassProbs a = fn(img);
    const ClassProbs b = fn(flip_horizontal(img));
    for (std::size_t i = 0; i < a.size(); ++i)
      a[i] = 0.5 * (a[i] + b[i]);
    return a;
  };
}

struct Diagnosis {
  std::size_t mosaic_index = 0;
  int row = 0;
  int col = 0;
  std::string image_id;
  int sick = 0;
  corpus::ClassLabel truth = corpus::ClassLabel::healthy;
  corpus::ClassLabel predicted = corpus::ClassLabel::healthy;
  double identifier_score = 0.0;
  bool correct = false;
};

struct PipelineReport {
  std::size_t field_count = 0;
  std::size_t tile_count = 0;
  std::size_t plant_tiles = 0;
  std::size_t sick_tiles = 0;
  std::size_t identified_sick = 0;
  std::size_t false_alarms = 0;
  std::size_t unresolved_boxes = 0;
  double identifier_accuracy = 0.0; // recall over sick tiles
  metrics::ConfidenceSummary confidence;
  metrics::ConfusionMatrix classifier_confusion;
  double classifier_accuracy = 0.0;
  double end_to_end_accuracy = 0.0; // correct sick diagnoses / sick tiles
  metrics::PipelineAccuracyBounds bounds;
  std::vector<Diagnosis> diagnoses;
};

struct RunConfig {
  double iou_threshold = 0.5;
  bool collect_diagnoses = false;
  unsigned threads = 1;
  // Raise threads only for models that tolerate concurrent calls; the
  // runner serializes otherwise.
  bool models_thread_safe = false;
};

namespace detail {

struct MosaicOutcome {
  std::size_t tile_count = 0;
  std::size_t plant_tiles = 0;
  std::size_t sick_tiles = 0;
  std::size_t identified_sick = 0;
  std::size_t false_alarms = 0;
  std::size_t unresolved = 0;
  std::size_t correct_sick = 0;
  double positive_sum = 0.0;
  std::size_t positive_count = 0;
  double negative_sum = 0.0;
  std::size_t negative_count = 0;
  std::array<std::array<std::uint64_t, corpus::kClassCount>,
             corpus::kClassCount>
      confusion{};
  std::vector<Diagnosis> diagnoses;
};

inline MosaicOutcome
process_mosaic(const mosaic::MosaicItem& item, std::size_t m,
               const IdentifierFn& identifier, const ClassifierFn& classifier,
               const LabelLookup& truth, const RunConfig& cfg) {
  MosaicOutcome out;
  out.tile_count = static_cast<std::size_t>(item.spec.cell_count());
  out.plant_tiles = item.annotations.size();
  for (const auto& a : item.annotations)
    if (a.sick == 1)
      ++out.sick_tiles;

  std::vector<fusion::ScoredBox> boxes;
  try {
    boxes = identifier(item, m);
  } catch (const std::exception& e) {
    throw std::runtime_error("pipeline: identifier failed on mosaic " +
                             std::to_string(m) + ": " + e.what());
  }
  for (const auto& box : boxes) {
    fusion::validate_box(box);
    if (box.x1 < 0 || box.y1 < 0 || box.x2 > item.spec.width_px ||
        box.y2 > item.spec.height_px)
      throw std::runtime_error("pipeline: identifier box outside mosaic " +
                               std::to_string(m));
  }

  const auto matching =
      metrics::match_detections(boxes, item.annotations, cfg.iou_threshold);
  out.identified_sick = matching.pairs.size();
  out.false_alarms = matching.unmatched_preds.size();
  for (const auto& pair : matching.pairs) {
    out.positive_sum += boxes[pair.pred_index].score;
    ++out.positive_count;
  }
  for (const std::size_t pi : matching.unmatched_preds) {
    out.negative_sum += boxes[pi].score;
    ++out.negative_count;
  }

  const auto crop = crop_candidates(item, m, boxes, cfg.iou_threshold);
  out.unresolved = crop.unresolved;
  for (const auto& cand : crop.candidates) {
    ClassProbs probs;
    try {
      probs = classifier(cand);
    } catch (const std::exception& e) {
      throw std::runtime_error(
          "pipeline: classifier failed on mosaic " + std::to_string(m) +
          " tile (" + std::to_string(cand.row) + "," +
          std::to_string(cand.col) + "): " + e.what());
    }
    double sum = 0.0;
    for (const double p : probs) {
      if (!(p >= 0.0))
        throw std::runtime_error("pipeline: negative class probability on "
                                 "mosaic " +
                                 std::to_string(m));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::runtime_error(
          "pipeline: class probabilities sum to " + std::to_string(sum) +
          " on mosaic " + std::to_string(m));

    const std::size_t arg = static_cast<std::size_t>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    const corpus::ClassLabel predicted = corpus::all_classes[arg];
    const corpus::ClassLabel actual = truth(cand.annotation.id);
    ++out.confusion[corpus::class_index(actual)][arg];
    const bool correct = predicted == actual;
    if (cand.annotation.sick == 1 && correct)
      ++out.correct_sick;
    if (cfg.collect_diagnoses)
      out.diagnoses.push_back({m, cand.row, cand.col, cand.annotation.id,
                               cand.annotation.sick, actual, predicted,
                               cand.score, correct});
  }
  return out;
}

} // namespace detail

inline PipelineReport run_pipeline(const IdentifierFn& identifier,
                                   const ClassifierFn& classifier,
                                   const LabelLookup& truth,
                                   std::span<const mosaic::MosaicItem> fields,
                                   const RunConfig& cfg = {}) {
  if (fields.empty())
    throw std::invalid_argument("run_pipeline: no fields");
  fusion::check_iou_threshold(cfg.iou_threshold);

  std::vector<detail::MosaicOutcome> outcomes(fields.size());
  const unsigned workers =
      cfg.models_thread_safe
          ? std::max(1u, std::min<unsigned>(
                             cfg.threads,
                             static_cast<unsigned>(fields.size())))
          : 1u;
  if (workers <= 1) {
    for (std::size_t m = 0; m < fields.size(); ++m)
      outcomes[m] = detail::process_mosaic(fields[m], m, identifier,
                                           classifier, truth, cfg);
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::string> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (;;) {
          const std::size_t m = next.fetch_add(1);
          if (m >= fields.size() || failed.load())
            return;
          try {
            outcomes[m] = detail::process_mosaic(fields[m], m, identifier,
                                                 classifier, truth, cfg);
          } catch (const std::exception& e) {
            errors[w] = e.what();
            failed.store(true);
            return;
          }
        }
      });
    }
    for (auto& t : pool)
      t.join();
    if (failed.load()) {
      for (const auto& msg : errors)
        if (!msg.empty())
          throw std::runtime_error(msg);
      throw std::runtime_error("run_pipeline: worker failed");
    }
  }

  PipelineReport report;
  report.field_count = fields.size();
  report.classifier_confusion =
      metrics::ConfusionMatrix(corpus::class_names());
  double pos_sum = 0.0, neg_sum = 0.0;
  std::size_t correct_sick = 0;
  for (const auto& o : outcomes) {
    report.tile_count += o.tile_count;
    report.plant_tiles += o.plant_tiles;
    report.sick_tiles += o.sick_tiles;
    report.identified_sick += o.identified_sick;
    report.false_alarms += o.false_alarms;
    report.unresolved_boxes += o.unresolved;
    correct_sick += o.correct_sick;
    pos_sum += o.positive_sum;
    report.confidence.positive_count += o.positive_count;
    neg_sum += o.negative_sum;
    report.confidence.negative_count += o.negative_count;
    for (std::size_t i = 0; i < corpus::kClassCount; ++i)
      for (std::size_t j = 0; j < corpus::kClassCount; ++j)
        if (o.confusion[i][j] > 0)
          report.classifier_confusion.add(i, j, o.confusion[i][j]);
    if (cfg.collect_diagnoses)
      report.diagnoses.insert(report.diagnoses.end(), o.diagnoses.begin(),
                              o.diagnoses.end());
  }

  if (report.confidence.positive_count > 0)
    report.confidence.avg_positive_confidence =
        pos_sum / static_cast<double>(report.confidence.positive_count);
  if (report.confidence.negative_count > 0)
    report.confidence.avg_negative_confidence =
        neg_sum / static_cast<double>(report.confidence.negative_count);
  if (report.sick_tiles > 0) {
    report.identifier_accuracy =
        static_cast<double>(report.identified_sick) /
        static_cast<double>(report.sick_tiles);
    report.end_to_end_accuracy = static_cast<double>(correct_sick) /
                                 static_cast<double>(report.sick_tiles);
  }
  if (report.classifier_confusion.total() > 0)
    report.classifier_accuracy = metrics::accuracy(report.classifier_confusion);
  report.bounds = metrics::pipeline_bounds(report.identifier_accuracy,
                                           report.classifier_accuracy);
  return report;
}

inline nlohmann::json to_json(const PipelineReport& r,
                              bool include_diagnoses = false) {
  nlohmann::json out{
      {"field_count", r.field_count},
      {"tile_count", r.tile_count},
      {"plant_tiles", r.plant_tiles},
      {"sick_tiles", r.sick_tiles},
      {"identified_sick", r.identified_sick},
      {"false_alarms", r.false_alarms},
      {"unresolved_boxes", r.unresolved_boxes},
      {"identifier_accuracy", r.identifier_accuracy},
      {"confidence", metrics::to_json(r.confidence)},
      {"classifier_accuracy", r.classifier_accuracy},
      {"end_to_end_accuracy", r.end_to_end_accuracy},
      {"bounds", metrics::to_json(r.bounds)},
  };
  if (r.classifier_confusion.total() > 0) {
    out["classifier_confusion"] = metrics::to_json(r.classifier_confusion);
    out["classifier_per_class"] =
        metrics::to_json(metrics::per_class_metrics(r.classifier_confusion));
  }
  if (include_diagnoses) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& d : r.diagnoses)
      rows.push_back({{"mosaic", d.mosaic_index},
                      {"row", d.row},
                      {"col", d.col},
                      {"image_id", d.image_id},
                      {"sick", d.sick},
                      {"truth", std::string(corpus::to_string(d.truth))},
                      {"predicted",
                       std::string(corpus::to_string(d.predicted))},
                      {"identifier_score", d.identifier_score},
                      {"correct", d.correct}});
    out["diagnoses"] = std::move(rows);
  }
  return out;
}

} // namespace fieldforge::pipeline
