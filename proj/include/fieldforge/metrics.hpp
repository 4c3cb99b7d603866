#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldforge/fusion.hpp"
#include "fieldforge/mosaic.hpp"

namespace fieldforge::metrics {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row = actual class, column = predicted class.
class ConfusionMatrix {
public:
  ConfusionMatrix() = default;

  explicit ConfusionMatrix(std::vector<std::string> classes)
      : classes_(std::move(classes)),
        counts_(classes_.size(),
                std::vector<std::uint64_t>(classes_.size(), 0)) {
    if (classes_.empty())
      throw InputError("ConfusionMatrix: no classes");
  }

  static ConfusionMatrix
  from_counts(std::vector<std::string> classes,
              std::vector<std::vector<std::uint64_t>> counts) {
    ConfusionMatrix cm(std::move(classes));
    if (counts.size() != cm.size())
      throw InputError("ConfusionMatrix: counts rows != classes");
    for (const auto& row : counts)
      if (row.size() != cm.size())
        throw InputError("ConfusionMatrix: counts matrix is not square");
    cm.counts_ = std::move(counts);
    return cm;
  }

  std::size_t size() const { return classes_.size(); }
  const std::vector<std::string>& class_names() const { return classes_; }

  std::uint64_t at(std::size_t actual, std::size_t predicted) const {
    return counts_.at(actual).at(predicted);
  }

  void add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1) {
    counts_.at(actual).at(predicted) += n;
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts_)
      t = std::accumulate(row.begin(), row.end(), t);
    return t;
  }

  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < size(); ++i)
      t += counts_[i][i];
    return t;
  }

  std::uint64_t row_sum(std::size_t actual) const {
    const auto& row = counts_.at(actual);
    return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  }

  std::uint64_t col_sum(std::size_t predicted) const {
    if (predicted >= size())
      throw std::out_of_range("ConfusionMatrix: column out of range");
    std::uint64_t t = 0;
    for (const auto& row : counts_)
      t += row[predicted];
    return t;
  }

private:
  std::vector<std::string> classes_;
  std::vector<std::vector<std::uint64_t>> counts_;
};

inline ConfusionMatrix confusion(std::span<const std::string> pred,
                                 std::span<const std::string> truth,
                                 std::vector<std::string> classes) {
  if (pred.size() != truth.size())
    throw InputError("confusion: " + std::to_string(pred.size()) +
                     " predictions vs " + std::to_string(truth.size()) +
                     " truth labels");
  if (pred.empty())
    throw InputError("confusion: no samples");

  ConfusionMatrix cm(std::move(classes));
  const auto index_of = [&](const std::string& label) {
    const auto& names = cm.class_names();
    const auto it = std::find(names.begin(), names.end(), label);
    if (it == names.end())
      throw InputError("confusion: unknown label '" + label + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  for (std::size_t k = 0; k < pred.size(); ++k)
    cm.add(index_of(truth[k]), index_of(pred[k]));
  return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0)
    throw InputError("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

// Table-style reports count support as "samples predicted to be that class";
// `actual` switches to the conventional row-sum definition.
enum class SupportMode { predicted, actual };

struct ClassMetrics {
  std::string class_name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

inline std::vector<ClassMetrics>
per_class_metrics(const ConfusionMatrix& cm,
                  SupportMode mode = SupportMode::predicted) {
  if (cm.total() == 0)
    throw InputError("per_class_metrics: empty confusion matrix");

  std::vector<ClassMetrics> out;
  out.reserve(cm.size());
  for (std::size_t i = 0; i < cm.size(); ++i) {
    ClassMetrics m;
    m.class_name = cm.class_names()[i];
    const std::uint64_t col = cm.col_sum(i);
    const std::uint64_t row = cm.row_sum(i);
    const std::uint64_t hit = cm.at(i, i);
    m.precision = col == 0 ? 0.0
                           : static_cast<double>(hit) /
                                 static_cast<double>(col);
    m.recall = row == 0 ? 0.0
                        : static_cast<double>(hit) /
                              static_cast<double>(row);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.support = mode == SupportMode::predicted ? col : row;
    out.push_back(std::move(m));
  }
  return out;
}

struct MatchPair {
  std::size_t pred_index = 0;
  std::size_t truth_index = 0;
  double iou = 0.0;
};

struct Matching {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_truths; // sick tiles only
  std::size_t sick_truth_count = 0;
};

inline fusion::ScoredBox to_scored_box(const mosaic::Bbox& b) {
  return {static_cast<double>(b.x), static_cast<double>(b.y),
          static_cast<double>(b.x + b.w), static_cast<double>(b.y + b.h),
          1.0, 1};
}

// Greedy one-to-one matching: predictions in descending score order each
// claim the unmatched sick truth tile with the highest IoU >= threshold
// (lowest truth index on ties).
inline Matching match_detections(std::span<const fusion::ScoredBox> preds,
                                 std::span<const mosaic::MosaicAnnotation>
                                     truth,
                                 double iou_threshold) {
  fusion::check_iou_threshold(iou_threshold);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fusion::detail::score_order(preds[a], preds[b]);
  });

  Matching m;
  std::vector<bool> truth_taken(truth.size(), false);
  std::vector<bool> pred_taken(preds.size(), false);
  for (const auto& a : truth)
    if (a.sick == 1)
      ++m.sick_truth_count;

  for (const std::size_t pi : order) {
    double best_iou = 0.0;
    std::size_t best_ti = truth.size();
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
      if (truth_taken[ti] || truth[ti].sick != 1)
        continue;
      const double v = fusion::iou(preds[pi], to_scored_box(truth[ti].bbox));
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best_ti = ti;
      }
    }
    if (best_ti < truth.size()) {
      truth_taken[best_ti] = true;
      pred_taken[pi] = true;
      m.pairs.push_back({pi, best_ti, best_iou});
    }
  }

  for (std::size_t pi = 0; pi < preds.size(); ++pi)
    if (!pred_taken[pi])
      m.unmatched_preds.push_back(pi);
  for (std::size_t ti = 0; ti < truth.size(); ++ti)
    if (truth[ti].sick == 1 && !truth_taken[ti])
      m.unmatched_truths.push_back(ti);
  return m;
}

struct ConfidenceSummary {
  double avg_positive_confidence = 0.0;
  double avg_negative_confidence = 0.0;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
};

inline ConfidenceSummary
confidence_summary(const Matching& matching,
                   std::span<const fusion::ScoredBox> preds) {
  ConfidenceSummary s;
  double pos = 0.0, neg = 0.0;
  for (const auto& pair : matching.pairs) {
    pos += preds[pair.pred_index].score;
    ++s.positive_count;
  }
  for (const std::size_t pi : matching.unmatched_preds) {
    neg += preds[pi].score;
    ++s.negative_count;
  }
  if (s.positive_count > 0)
    s.avg_positive_confidence = pos / static_cast<double>(s.positive_count);
  if (s.negative_count > 0)
    s.avg_negative_confidence = neg / static_cast<double>(s.negative_count);
  return s;
}

struct PipelineAccuracyBounds {
  double independent_estimate = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
};

// Two-stage accuracy envelope: stages perfectly correlated from below
// (errors never overlap), independent, and perfectly correlated from above
// (one stage's errors subsume the other's).
inline PipelineAccuracyBounds pipeline_bounds(double identifier_acc,
                                              double classifier_acc) {
  if (!(identifier_acc >= 0.0 && identifier_acc <= 1.0) ||
      !(classifier_acc >= 0.0 && classifier_acc <= 1.0))
    throw InputError("pipeline_bounds: accuracies must be in [0,1]");
  PipelineAccuracyBounds b;
  b.independent_estimate = identifier_acc * classifier_acc;
  b.lower_bound = std::max(0.0, identifier_acc + classifier_acc - 1.0);
  b.upper_bound = std::min(identifier_acc, classifier_acc);
  return b;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.size(); ++j)
      row.push_back(cm.at(i, j));
    counts.push_back(std::move(row));
  }
  return {{"classes", cm.class_names()}, {"counts", std::move(counts)}};
}

inline nlohmann::json to_json(const std::vector<ClassMetrics>& per_class) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : per_class)
    out.push_back({{"class", m.class_name},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support}});
  return out;
}

inline nlohmann::json to_json(const ConfidenceSummary& s) {
  return {{"avg_positive_confidence", s.avg_positive_confidence},
          {"avg_negative_confidence", s.avg_negative_confidence},
          {"positive_count", s.positive_count},
          {"negative_count", s.negative_count}};
}

inline nlohmann::json to_json(const PipelineAccuracyBounds& b) {
  return {{"independent_estimate", b.independent_estimate},
          {"lower_bound", b.lower_bound},
          {"upper_bound", b.upper_bound}};
}

} // namespace fieldforge::metrics
