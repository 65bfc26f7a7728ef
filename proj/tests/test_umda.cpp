#include <doctest.h>

#include <cmath>
#include <map>

#include "bandsel/umda.hpp"

using namespace bandsel;
using namespace bandsel::umda;

namespace {

Individual ind(const char* g, double f) { return {Genome::parse(g), f}; }

std::vector<double> onemax(std::span<const Genome> batch) {
  std::vector<double> out;
  for (const auto& g : batch) out.push_back(static_cast<double>(g.count()) / g.size());
  return out;
}

}  // namespace

TEST_CASE("deterministic marginals reproduce the genome") {
  Rng rng(1);
  MarginalModel m{{1, 0, 1, 1, 0, 0, 1}, false};
  for (int i = 0; i < 50; ++i) CHECK(sample(m, rng).to_string() == "1011001");
  m.p.assign(7, 1.0);
  CHECK(sample(m, rng).to_string() == "1111111");
}

TEST_CASE("per-gene one rates stay within 3 sigma of p") {
  Rng rng(99);
  MarginalModel m{{0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8}, false};
  const int n = 20000;
  std::vector<int> ones(7, 0);
  for (int i = 0; i < n; ++i) {
    const auto g = sample(m, rng);
    for (int b = 0; b < 7; ++b) ones[b] += g.test(b);
  }
  for (int b = 0; b < 7; ++b) {
    const double p = m.p[b];
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(ones[b] / double(n) - p) < 3 * sigma);
  }
}

TEST_CASE("sample_nonempty never yields the empty genome") {
  Rng rng(4);
  MarginalModel zero = MarginalModel::uniform(7, 0.0);
  for (int i = 0; i < 20; ++i) CHECK(sample_nonempty(zero, rng).count() == 1);
  MarginalModel low = MarginalModel::uniform(7, 0.05);
  for (int i = 0; i < 500; ++i) CHECK_FALSE(sample_nonempty(low, rng).empty_selection());
}

TEST_CASE("marginals by column counting") {
  const std::vector<Individual> parents = {ind("1100000", 1), ind("1010000", 1), ind("1001000", 1),
                                           ind("1000100", 1), ind("1000010", 1)};
  const auto m = update_marginals(parents, false);
  const std::vector<double> expect = {1.0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.0};
  for (int i = 0; i < 7; ++i) CHECK(m.p[i] == doctest::Approx(expect[i]));
  const auto clamped = update_marginals(parents, true);
  CHECK(clamped.p[0] == doctest::Approx(6.0 / 7.0));
  CHECK(clamped.p[6] == doctest::Approx(1.0 / 7.0));
  CHECK(clamped.p[1] == doctest::Approx(0.2));
  CHECK_THROWS(update_marginals(std::vector<Individual>{}, false));
}

TEST_CASE("identical parents collapse the marginals") {
  const std::vector<Individual> parents(5, ind("0110010", 0.5));
  const auto m = update_marginals(parents, false);
  CHECK(m.p == std::vector<double>{0, 1, 1, 0, 0, 1, 0});
}

TEST_CASE("selection ties prefer fewer bands, then the smaller genome") {
  const std::vector<Individual> pop = {ind("1110000", 0.8), ind("1100000", 0.8), ind("0000011", 0.8),
                                       ind("1000000", 0.9), ind("0000001", 0.6), ind("0000111", 0.7)};
  const auto top = select_parents(pop, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].genome.to_string() == "1000000");
  CHECK(top[1].genome.to_string() == "0000011");
  CHECK(top[2].genome.to_string() == "1100000");
  CHECK(select_parents(pop, 6).size() == 6);
  std::vector<Individual> unevaluated = pop;
  unevaluated[2].fitness.reset();
  CHECK_THROWS(select_parents(unevaluated, 3));
}

TEST_CASE("run is reproducible and elitist") {
  UmdaConfig cfg;
  cfg.genome_length = 12;
  cfg.population = 10;
  cfg.parents = 5;
  cfg.generations = 15;
  cfg.seed = 17;
  const auto a = run(cfg, onemax);
  const auto b = run(cfg, onemax);
  CHECK(a.best == b.best);
  CHECK(a.best_trace() == b.best_trace());
  CHECK(a.generations.size() == 15);
  for (const auto& g : a.generations) CHECK(g.population.size() == 10);
  const auto trace = a.best_trace();
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
  CHECK(a.evaluations <= static_cast<std::size_t>(cfg.population + (cfg.generations - 1) * cfg.offspring()));
}

TEST_CASE("margins keep every marginal inside the bounds") {
  UmdaConfig cfg;
  cfg.genome_length = 7;
  cfg.margins = true;
  cfg.generations = 20;
  const auto r = run(cfg, onemax);
  for (const auto& g : r.generations) {
    for (double p : g.marginals.p) {
      CHECK(p >= 1.0 / 7 - 1e-15);
      CHECK(p <= 6.0 / 7 + 1e-15);
    }
  }
}

TEST_CASE("constant fitness gives a flat trace") {
  UmdaConfig cfg;
  const auto r = run(cfg, [](std::span<const Genome> b) { return std::vector<double>(b.size(), 0.5); });
  for (double v : r.best_trace()) CHECK(v == 0.5);
}

TEST_CASE("oracle errors carry the generation") {
  UmdaConfig cfg;
  int calls = 0;
  try {
    run(cfg, [&](std::span<const Genome> b) {
      if (++calls == 3) throw std::runtime_error("boom");
      return std::vector<double>(b.size(), 0.1);
    });
    FAIL("expected an exception");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("generation") != std::string::npos);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
}

TEST_CASE("band ranking on small pools") {
  const std::vector<std::string> names = {"B1", "B2", "B3", "B4", "B5", "B6", "B7"};
  const std::vector<PooledIndividual> one = {{1, Genome::parse("1010000"), 0.9}};
  const auto r = rank_bands(one, 22, names);
  CHECK(r.frequency == std::vector<double>{1, 0, 1, 0, 0, 0, 0});
  CHECK(r.rank == std::vector<int>{1, 0, 1, 0, 0, 0, 0});
  CHECK_THROWS(rank_bands(std::vector<PooledIndividual>{}, 22, names));

  const std::vector<PooledIndividual> pool = {{1, Genome::parse("1100000"), 0.9},
                                              {2, Genome::parse("1010000"), 0.8},
                                              {3, Genome::parse("0010001"), 0.7},
                                              {4, Genome::parse("0000001"), 0.7},
                                              {5, Genome::parse("0000011"), 0.6}};
  const auto top = rank_bands(pool, 3, names);
  CHECK(top.pool.size() == 4);  // the tie at the cutoff is kept
  CHECK(top.frequency[0] == doctest::Approx(0.5));
  CHECK(top.frequency[6] == doctest::Approx(0.5));
  CHECK(top.frequency[2] == doctest::Approx(0.5));
  CHECK(top.frequency[1] == doctest::Approx(0.25));
  CHECK(top.rank == std::vector<int>{1, 4, 1, 0, 0, 0, 1});
}

TEST_CASE("pooling keeps distinct individuals per seed") {
  RunResult a, b;
  a.seed = 1;
  b.seed = 2;
  a.final_population = {ind("1000000", 0.5), ind("1000000", 0.5), ind("0100000", 0.7)};
  b.final_population = {ind("1000000", 0.5)};
  const std::vector<RunResult> runs = {a, b};
  const auto pool = pool_final_populations(runs);
  REQUIRE(pool.size() == 3);
  CHECK(pool[0].genome.to_string() == "0100000");
  CHECK(pool[1].seed == 1);
  CHECK(pool[2].seed == 2);
}
