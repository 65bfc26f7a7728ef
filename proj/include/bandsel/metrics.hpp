#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bandsel/image_io.hpp"

namespace bandsel::metrics {

/// Pixel or sample counts with non-forest (deforestation) as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// A metric that is undefined when its denominator vanishes.
struct Metric {
  std::optional<double> value;
  std::string undefined_reason;

  bool defined() const { return value.has_value(); }
};

/// Pixelwise counts over pixels whose truth is not ignore. Ignore in the
/// prediction is an error.
ConfusionCounts confusion(const raster::LabelMask& pred, const raster::LabelMask& truth);

// The standard forms: precision tp/(tp+fp), recall tp/(tp+fn), f1 the
// harmonic mean of the two, accuracy (tp+tn)/total, iou tp/(tp+fp+fn).
Metric precision(const ConfusionCounts& c);
Metric recall(const ConfusionCounts& c);
Metric f1(const ConfusionCounts& c);
Metric accuracy(const ConfusionCounts& c);
Metric iou(const ConfusionCounts& c);

struct MetricSet {
  Metric precision, recall, f1, accuracy, iou;
};
MetricSet all_metrics(const ConfusionCounts& c);

}  // namespace bandsel::metrics
