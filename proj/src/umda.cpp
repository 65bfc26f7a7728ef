#include "bandsel/umda.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace bandsel::umda {

MarginalModel MarginalModel::uniform(std::size_t n, double value) {
  return MarginalModel{std::vector<double>(n, value), false};
}

void MarginalModel::validate() const {
  if (p.empty()) throw InvalidArgument("marginal model is empty");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("marginal probability outside [0, 1]");
  }
}

void UmdaConfig::validate() const {
  if (genome_length < 1) throw InvalidArgument("umda: genome length must be >= 1");
  if (parents < 1 || parents > population) {
    throw InvalidArgument("umda: need 1 <= parents <= population");
  }
  if (generations < 1) throw InvalidArgument("umda: generations must be >= 1");
}

std::vector<double> RunResult::best_trace() const {
  std::vector<double> out;
  for (const auto& g : generations) out.push_back(g.best);
  return out;
}

Genome sample(const MarginalModel& model, Rng& rng) {
  Genome g(model.p.size());
  for (std::size_t i = 0; i < model.p.size(); ++i) g.bits[i] = uniform01(rng) < model.p[i];
  return g;
}

Genome sample_nonempty(const MarginalModel& model, Rng& rng) {
  for (int attempt = 0; attempt <= 100; ++attempt) {
    Genome g = sample(model, rng);
    if (!g.empty_selection()) return g;
  }
  Genome g(model.p.size());
  g.bits[uniform_index(rng, g.size())] = 1;
  return g;
}

MarginalModel update_marginals(std::span<const Individual> parents, bool margins) {
  if (parents.empty()) throw InvalidArgument("update_marginals: empty parent set");
  const std::size_t n = parents.front().genome.size();
  std::vector<std::size_t> ones(n, 0);
  for (const auto& ind : parents) {
    if (ind.genome.size() != n) throw InvalidArgument("update_marginals: genome lengths differ");
    for (std::size_t i = 0; i < n; ++i) ones[i] += ind.genome.bits[i];
  }
  MarginalModel model;
  model.margins = margins;
  model.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.p[i] = static_cast<double>(ones[i]) / static_cast<double>(parents.size());
    if (margins) model.p[i] = std::clamp(model.p[i], model.lower(), model.upper());
  }
  return model;
}

bool ranks_before(const Individual& a, const Individual& b) {
  if (!a.fitness || !b.fitness) throw InvalidArgument("cannot rank an unevaluated individual");
  if (*a.fitness != *b.fitness) return *a.fitness > *b.fitness;
  const auto ca = a.genome.count(), cb = b.genome.count();
  if (ca != cb) return ca < cb;
  return a.genome < b.genome;
}

std::vector<Individual> select_parents(std::span<const Individual> population, int mu) {
  if (mu < 1 || static_cast<std::size_t>(mu) > population.size()) {
    throw InvalidArgument("select_parents: mu out of range");
  }
  for (const auto& ind : population) {
    if (!ind.fitness) throw InvalidArgument("select_parents: unevaluated individual");
  }
  std::vector<Individual> sorted(population.begin(), population.end());
  std::stable_sort(sorted.begin(), sorted.end(), ranks_before);
  sorted.resize(static_cast<std::size_t>(mu));
  return sorted;
}

RunResult run(const UmdaConfig& cfg, const FitnessOracle& oracle) {
  cfg.validate();
  Rng rng(cfg.seed);
  RunResult result;
  result.seed = cfg.seed;

  MarginalModel model = MarginalModel::uniform(static_cast<std::size_t>(cfg.genome_length));
  model.margins = cfg.margins;
  std::vector<Individual> population;
  for (int i = 0; i < cfg.population; ++i) population.push_back({sample_nonempty(model, rng), {}});

  std::map<Genome, double> memo;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Genome> pending;
    std::set<Genome> queued;
    for (const auto& ind : population) {
      if (!ind.fitness && !memo.count(ind.genome) && queued.insert(ind.genome).second) {
        pending.push_back(ind.genome);
      }
    }
    if (!pending.empty()) {
      std::vector<double> values;
      try {
        values = oracle(pending);
      } catch (const std::exception& e) {
        throw Error("umda generation " + std::to_string(gen + 1) + ": " + e.what());
      }
      if (values.size() != pending.size()) {
        throw Error("umda generation " + std::to_string(gen + 1) +
                    ": oracle returned the wrong number of values");
      }
      for (std::size_t i = 0; i < pending.size(); ++i) memo[pending[i]] = values[i];
      result.evaluations += pending.size();
    }
    for (auto& ind : population) {
      if (!ind.fitness) ind.fitness = memo.at(ind.genome);
    }

    GenerationTrace trace;
    trace.population = population;
    trace.marginals = model;
    trace.best = *select_parents(population, 1).front().fitness;
    double sum = 0.0;
    for (const auto& ind : population) sum += *ind.fitness;
    trace.mean = sum / static_cast<double>(population.size());
    result.generations.push_back(std::move(trace));

    if (gen + 1 == cfg.generations) break;
    auto parents = select_parents(population, cfg.parents);
    model = update_marginals(parents, cfg.margins);
    population = std::move(parents);
    for (int i = 0; i < cfg.offspring(); ++i) population.push_back({sample_nonempty(model, rng), {}});
  }

  result.final_population = population;
  result.best = select_parents(population, 1).front();
  return result;
}

namespace {

bool pooled_before(const PooledIndividual& a, const PooledIndividual& b) {
  const Individual ia{a.genome, a.fitness}, ib{b.genome, b.fitness};
  if (ranks_before(ia, ib)) return true;
  if (ranks_before(ib, ia)) return false;
  return a.seed < b.seed;
}

}  // namespace

std::vector<PooledIndividual> pool_final_populations(std::span<const RunResult> runs) {
  std::vector<PooledIndividual> pool;
  for (const auto& run : runs) {
    std::set<Genome> seen;
    for (const auto& ind : run.final_population) {
      if (!ind.fitness) throw InvalidArgument("pool: unevaluated individual");
      if (seen.insert(ind.genome).second) pool.push_back({run.seed, ind.genome, *ind.fitness});
    }
  }
  std::stable_sort(pool.begin(), pool.end(), pooled_before);
  return pool;
}

BandRanking rank_bands(std::span<const PooledIndividual> sorted_pool, std::size_t top_k,
                       std::span<const std::string> band_names) {
  if (sorted_pool.empty()) throw InvalidArgument("rank_bands: empty pool");
  if (top_k == 0) throw InvalidArgument("rank_bands: top_k must be positive");
  top_k = std::min(top_k, sorted_pool.size());
  const double cutoff = sorted_pool[top_k - 1].fitness;
  std::size_t take = top_k;
  while (take < sorted_pool.size() && sorted_pool[take].fitness >= cutoff) ++take;

  const std::size_t n = band_names.size();
  std::vector<std::size_t> counts(n, 0);
  BandRanking out;
  out.band_names.assign(band_names.begin(), band_names.end());
  for (std::size_t k = 0; k < take; ++k) {
    const auto& ind = sorted_pool[k];
    if (ind.genome.size() != n) throw InvalidArgument("rank_bands: genome length mismatch");
    for (std::size_t b = 0; b < n; ++b) counts[b] += ind.genome.bits[b];
    out.pool.push_back(ind);
  }
  out.frequency.resize(n);
  out.rank.assign(n, 0);
  for (std::size_t b = 0; b < n; ++b) {
    out.frequency[b] = static_cast<double>(counts[b]) / static_cast<double>(take);
    if (counts[b] == 0) continue;
    int above = 0;
    for (std::size_t o = 0; o < n; ++o) above += counts[o] > counts[b];
    out.rank[b] = 1 + above;
  }
  return out;
}

BandRanking rank_bands(std::span<const RunResult> runs, std::size_t top_k,
                       std::span<const std::string> band_names) {
  const auto pool = pool_final_populations(runs);
  return rank_bands(pool, top_k, band_names);
}

std::string format_ranking_table(const BandRanking& ranking) {
  std::ostringstream os;
  const std::size_t n = ranking.band_names.size();
  os << std::setw(10) << "Seed" << " | " << std::setw(10) << "Individual" << " |";
  for (const auto& b : ranking.band_names) os << std::setw(7) << b;
  os << " | Balanced Accuracy\n";
  for (std::size_t k = 0; k < ranking.pool.size(); ++k) {
    const auto& ind = ranking.pool[k];
    os << std::setw(10) << ind.seed << " | " << std::setw(10) << (k + 1) << " |";
    for (std::size_t b = 0; b < n; ++b) os << std::setw(7) << (ind.genome.test(b) ? "x" : "");
    os << " | " << std::fixed << std::setprecision(2) << 100.0 * ind.fitness << '\n';
  }
  os << std::setw(10) << "Frequency" << " | " << std::setw(10) << "-" << " |";
  for (std::size_t b = 0; b < n; ++b) {
    std::ostringstream cell;
    cell << std::fixed << std::setprecision(1) << 100.0 * ranking.frequency[b] << '%';
    os << std::setw(7) << cell.str();
  }
  os << " | -\n";
  os << std::setw(10) << "Ranking" << " | " << std::setw(10) << "-" << " |";
  for (std::size_t b = 0; b < n; ++b) {
    os << std::setw(7) << (ranking.rank[b] ? std::to_string(ranking.rank[b]) : std::string("-"));
  }
  os << " | -\n";
  return os.str();
}

}  // namespace bandsel::umda
