#include <doctest.h>

#include "bandsel/svm.hpp"
#include "test_util.hpp"

using namespace bandsel;
using namespace bandsel::svm;

namespace {

// Two gaussian clouds in d dimensions, only the first coordinate informative.
void clouds(std::size_t n, std::size_t d, double gap, std::uint64_t seed, Matrix& x, std::vector<int>& y) {
  Rng rng(seed);
  x = Matrix(n, d);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 3 == 0 ? 1 : 0;
    for (std::size_t k = 0; k < d; ++k) x.row(i)[k] = standard_normal(rng);
    x.row(i)[0] += y[i] ? gap : 0.0;
  }
}

texture::FeatureTable table(std::size_t n, int region, std::uint64_t seed) {
  Rng rng(seed);
  texture::FeatureTable t;
  t.channels = {"B1", "B2", "B3"};
  t.block_dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    texture::FeatureRow row;
    row.region_id = region;
    row.segment_id = static_cast<int>(i);
    row.label = i % 2 ? segset::ClassLabel::non_forest : segset::ClassLabel::forest;
    for (int k = 0; k < 6; ++k) row.values.push_back(standard_normal(rng));
    row.values[0] += i % 2 ? 3.0 : 0.0;  // B1 is informative
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST_CASE("balanced accuracy by hand") {
  const std::vector<int> truth = {0, 0, 0, 0, 1, 1};
  const std::vector<int> pred = {0, 0, 0, 1, 1, 0};
  CHECK(balanced_accuracy(truth, pred) == doctest::Approx((0.75 + 0.5) / 2));
  const std::vector<int> one = {1, 1};
  CHECK_THROWS_AS(balanced_accuracy(one, one), SingleClassError);
}

TEST_CASE("standardizer is fitted on its own rows") {
  Matrix x(3, 2);
  x.values = {1, 5, 2, 5, 3, 5};
  const auto s = Standardizer::fit(x);
  CHECK(s.mean[0] == doctest::Approx(2));
  CHECK(s.scale[1] == 1.0);
  s.apply(x);
  CHECK(x.row(0)[0] == doctest::Approx(-1.0 / std::sqrt(2.0 / 3.0)));
  CHECK(x.row(2)[1] == 0.0);
}

TEST_CASE("linear SVM separates two clouds") {
  Matrix x;
  std::vector<int> y;
  clouds(600, 5, 6.0, 1, x, y);
  const auto model = train(x, y, SvmConfig{});
  CHECK(balanced_accuracy(y, predict(model, x)) > 0.98);
  CHECK(model.loss_trace.back() < model.loss_trace.front());
  CHECK(model.class_weights[1] == doctest::Approx(600.0 / (2 * 200)));
  const auto again = train(x, y, SvmConfig{});
  CHECK(again.weights == model.weights);
  std::vector<int> single(y.size(), 0);
  CHECK_THROWS_AS(train(x, single, SvmConfig{}), SingleClassError);
}

TEST_CASE("a zero decision predicts non-forest") {
  SvmModel m;
  m.weights = {0.0, 0.0};
  Matrix x(1, 2);
  CHECK(predict(m, x) == std::vector<int>{1});
}

TEST_CASE("fitness evaluator caches and agrees across execution modes") {
  const auto train_t = table(120, 1, 3), eval_t = table(80, 2, 4);
  FitnessEvaluator ev(train_t, eval_t, SvmConfig{}, {"B1", "B2", "B3"});
  const auto good = ev.evaluate(Genome::parse("100"));
  const auto noise = ev.evaluate(Genome::parse("011"));
  CHECK(good.balanced_accuracy > 0.9);
  CHECK(noise.balanced_accuracy < 0.75);
  CHECK(good.split == "validation");
  CHECK(ev.trainings() == 2);
  CHECK(ev.evaluate(Genome::parse("100")) == good);
  CHECK(ev.cache_hits() == 1);
  CHECK(ev.evaluate(Genome::parse("000")).empty_genome);

  std::vector<Genome> batch;
  for (int g = 1; g < 8; ++g) {
    Genome genome(3);
    for (int b = 0; b < 3; ++b) genome.bits[b] = (g >> b) & 1;
    batch.push_back(genome);
  }
  FitnessEvaluator serial(train_t, eval_t, SvmConfig{}, {"B1", "B2", "B3"});
  FitnessEvaluator parallel(train_t, eval_t, SvmConfig{}, {"B1", "B2", "B3"});
  CHECK(serial.evaluate_batch(batch, Execution::serial) == parallel.evaluate_batch(batch, Execution::parallel));

  testutil::TempDir dir("cache");
  serial.save_cache(dir / "c.json");
  FitnessEvaluator loaded(train_t, eval_t, SvmConfig{}, {"B1", "B2", "B3"});
  loaded.load_cache(dir / "c.json");
  CHECK(loaded.cache_snapshot() == serial.cache_snapshot());
  loaded.evaluate_batch(batch);
  CHECK(loaded.trainings() == 0);
}

TEST_CASE("trained pipelines persist") {
  const auto t = table(100, 1, 9);
  const std::vector<std::string> ch = {"B1", "B3"};
  const auto fitted = fit_channels(t, ch, SvmConfig{});
  testutil::TempDir dir("model");
  save_model(fitted, dir / "m.json");
  const auto back = load_model(dir / "m.json");
  CHECK(back.channels == fitted.channels);
  CHECK(back.model.weights == fitted.model.weights);
  CHECK(back.model.bias == fitted.model.bias);
  CHECK(back.standardizer.mean == fitted.standardizer.mean);
  const std::vector<std::string> unknown = {"B9"};
  CHECK_THROWS(fit_channels(t, unknown, SvmConfig{}));
}
