#include <doctest.h>

#include <random>

#include "bandsel/metrics.hpp"

using namespace bandsel;
using namespace bandsel::metrics;

TEST_CASE("hand example tp=3 fp=1 fn=1 tn=5") {
  const ConfusionCounts c{3, 1, 5, 1};
  const auto m = all_metrics(c);
  CHECK(*m.precision.value == doctest::Approx(0.75));
  CHECK(*m.recall.value == doctest::Approx(0.75));
  CHECK(*m.f1.value == doctest::Approx(0.75));
  CHECK(*m.accuracy.value == doctest::Approx(0.8));
  CHECK(*m.iou.value == doctest::Approx(0.6));
}

TEST_CASE("undefined metrics carry a reason") {
  const ConfusionCounts none{0, 0, 10, 0};
  const auto m = all_metrics(none);
  CHECK_FALSE(m.precision.defined());
  CHECK_FALSE(m.recall.defined());
  CHECK_FALSE(m.f1.defined());
  CHECK_FALSE(m.iou.defined());
  CHECK(!m.precision.undefined_reason.empty());
  CHECK(*m.accuracy.value == 1.0);
  CHECK_FALSE(accuracy(ConfusionCounts{}).defined());
}

TEST_CASE("iou equals f1 / (2 - f1)") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> d(0, 1000);
  for (int i = 0; i < 2000; ++i) {
    const ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    const auto f = f1(c), j = iou(c);
    if (!f.defined() || !j.defined()) continue;
    CHECK(std::abs(*j.value - *f.value / (2.0 - *f.value)) < 1e-12);
  }
}

TEST_CASE("pixel confusion skips ignore in truth") {
  raster::LabelMask truth{2, 2, {1, 0, 255, 1}};
  raster::LabelMask pred{2, 2, {1, 1, 0, 0}};
  const auto c = confusion(pred, truth);
  CHECK(c == ConfusionCounts{1, 1, 0, 1});
  raster::LabelMask bad{2, 2, {255, 1, 0, 0}};
  CHECK_THROWS(confusion(bad, truth));
  raster::LabelMask small{1, 1, {0}};
  CHECK_THROWS(confusion(small, truth));
}
