#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandsel/common.hpp"
#include "bandsel/genome.hpp"

namespace bandsel::umda {

struct Individual {
  Genome genome;
  std::optional<double> fitness;

  bool operator==(const Individual&) const = default;
};

/// Per-gene Bernoulli probabilities p(i) of sampling a one.
struct MarginalModel {
  std::vector<double> p;
  bool margins = false;

  static MarginalModel uniform(std::size_t n, double value = 0.5);
  double lower() const { return 1.0 / static_cast<double>(p.size()); }
  double upper() const { return 1.0 - lower(); }
  void validate() const;
};

struct UmdaConfig {
  int genome_length = 7;
  int population = 10;  // lambda
  int parents = 5;      // mu
  int generations = 10;
  bool margins = false;
  std::uint64_t seed = 1;

  int offspring() const { return population - parents; }
  void validate() const;
};

/// Evaluates a batch of nonempty genomes, one fitness per genome.
using FitnessOracle = std::function<std::vector<double>(std::span<const Genome>)>;

struct GenerationTrace {
  std::vector<Individual> population;  // evaluated
  MarginalModel marginals;             // model this generation's new individuals were drawn from
  double best = 0.0;
  double mean = 0.0;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<GenerationTrace> generations;
  std::vector<Individual> final_population;
  Individual best;
  std::size_t evaluations = 0;  // genomes sent to the oracle

  std::vector<double> best_trace() const;
};

/// Gene i ~ Bernoulli(p(i)), independently.
Genome sample(const MarginalModel& model, Rng& rng);

/// Like sample, but rejects the all-zero genome: up to 100 redraws, then a
/// single uniformly chosen gene is forced to one.
Genome sample_nonempty(const MarginalModel& model, Rng& rng);

/// p(i) = share of parents with gene i set, clamped to [1/n, 1 - 1/n] when
/// margins are enabled.
MarginalModel update_marginals(std::span<const Individual> parents, bool margins);

/// Strict weak order used for selection: higher fitness, then fewer
/// selected genes, then lexicographically smaller genome.
bool ranks_before(const Individual& a, const Individual& b);

/// Top mu individuals under ranks_before.
std::vector<Individual> select_parents(std::span<const Individual> population, int mu);

/// Union-elitist UMDA: the next population is the mu parents plus
/// lambda - mu children sampled from the parents' marginals.
RunResult run(const UmdaConfig& cfg, const FitnessOracle& oracle);

struct PooledIndividual {
  std::uint64_t seed = 0;
  Genome genome;
  double fitness = 0.0;
};

/// Distinct final-population individuals of each run, sorted by fitness
/// (descending) with the selection tie rule, then by seed.
std::vector<PooledIndividual> pool_final_populations(std::span<const RunResult> runs);

struct BandRanking {
  std::vector<std::string> band_names;
  std::vector<double> frequency;  // in [0, 1]
  std::vector<int> rank;          // 1-based competition rank; 0 when frequency is 0
  std::vector<PooledIndividual> pool;
};

/// Frequencies over the first top_k pooled individuals, extended to include
/// every individual tied with the top_k-th. The pool must already be sorted.
BandRanking rank_bands(std::span<const PooledIndividual> sorted_pool, std::size_t top_k,
                       std::span<const std::string> band_names);

BandRanking rank_bands(std::span<const RunResult> runs, std::size_t top_k,
                       std::span<const std::string> band_names);

/// Plain-text table laid out as Seed | Individual | bands | Balanced Accuracy
/// followed by Frequency and Ranking rows.
std::string format_ranking_table(const BandRanking& ranking);

}  // namespace bandsel::umda
