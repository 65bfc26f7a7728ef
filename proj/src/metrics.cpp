#include "bandsel/metrics.hpp"

namespace bandsel::metrics {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const raster::LabelMask& pred, const raster::LabelMask& truth) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw InvalidArgument("confusion: prediction is " + std::to_string(pred.width) + "x" +
                          std::to_string(pred.height) + " but truth is " +
                          std::to_string(truth.width) + "x" + std::to_string(truth.height));
  }
  pred.validate();
  truth.validate();
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    const auto t = truth.labels[i];
    const auto p = pred.labels[i];
    if (p == raster::kIgnore) {
      throw InvalidArgument("confusion: prediction contains ignore at pixel " + std::to_string(i));
    }
    if (t == raster::kIgnore) continue;
    const bool pos_t = t == raster::kNonForest, pos_p = p == raster::kNonForest;
    if (pos_t && pos_p) ++c.tp;
    else if (!pos_t && pos_p) ++c.fp;
    else if (!pos_t && !pos_p) ++c.tn;
    else ++c.fn;
  }
  return c;
}

namespace {

Metric ratio(std::uint64_t num, std::uint64_t den, const char* reason) {
  if (den == 0) return {std::nullopt, reason};
  return {static_cast<double>(num) / static_cast<double>(den), {}};
}

}  // namespace

Metric precision(const ConfusionCounts& c) {
  return ratio(c.tp, c.tp + c.fp, "no positive predictions (tp + fp = 0)");
}

Metric recall(const ConfusionCounts& c) {
  return ratio(c.tp, c.tp + c.fn, "no positive ground truth (tp + fn = 0)");
}

Metric f1(const ConfusionCounts& c) {
  const Metric p = precision(c), r = recall(c);
  if (!p.defined()) return {std::nullopt, p.undefined_reason};
  if (!r.defined()) return {std::nullopt, r.undefined_reason};
  if (*p.value + *r.value == 0.0) return {std::nullopt, "precision + recall = 0"};
  return {2.0 * *p.value * *r.value / (*p.value + *r.value), {}};
}

Metric accuracy(const ConfusionCounts& c) {
  return ratio(c.tp + c.tn, c.total(), "no counted pixels");
}

Metric iou(const ConfusionCounts& c) {
  return ratio(c.tp, c.tp + c.fp + c.fn, "empty union (tp + fp + fn = 0)");
}

MetricSet all_metrics(const ConfusionCounts& c) {
  return {precision(c), recall(c), f1(c), accuracy(c), iou(c)};
}

}  // namespace bandsel::metrics
