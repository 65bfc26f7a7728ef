#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "bandsel/common.hpp"
#include "bandsel/genome.hpp"
#include "bandsel/texture.hpp"

namespace bandsel::svm {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

/// Per-feature centering and scaling fitted on training rows only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // > 0; zero-variance features get 1

  static Standardizer fit(const Matrix& x);
  void apply(Matrix& x) const;
};

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 0;
  bool class_weighting = true;
};

/// Labels are 0 (forest) and 1 (non-forest, the positive class).
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::array<double, 2> class_weights{1.0, 1.0};
  SvmConfig config;
  std::vector<double> loss_trace;  // weighted objective after each epoch

  double decision(std::span<const double> x) const;
};

class SingleClassError : public Error {
 public:
  using Error::Error;
};

/// Pegasos-style subgradient descent on the class-weighted hinge loss with an
/// L2 penalty. Step size 1/(lambda * t), one reshuffle per epoch from the
/// seed. The bias is an extra constant feature and is regularized with the
/// weights.
SvmModel train(const Matrix& x, std::span<const int> y, const SvmConfig& cfg);

/// sign(w.x + b); an exact 0 predicts non-forest.
std::vector<int> predict(const SvmModel& model, const Matrix& x);

/// Mean of the two class recalls. Throws when y_true holds a single class.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

struct FitnessValue {
  double balanced_accuracy = 0.0;
  double recall_forest = 0.0;
  double recall_non_forest = 0.0;
  std::string split;
  bool empty_genome = false;

  bool operator==(const FitnessValue&) const = default;
};

/// Concatenates the requested channel blocks of every row.
Matrix gather(const texture::FeatureTable& table, std::span<const int> channels);
std::vector<int> labels_of(const texture::FeatureTable& table);

/// Standardize on train, fit on train, score balanced accuracy on eval.
FitnessValue evaluate_channels(const texture::FeatureTable& train,
                               const texture::FeatureTable& eval,
                               std::span<const std::string> channels, const SvmConfig& cfg,
                               const std::string& split_tag);

/// Fits the model that evaluate_channels scores; used for persistence.
struct TrainedPipeline {
  Standardizer standardizer;
  SvmModel model;
  std::vector<std::string> channels;
};
TrainedPipeline fit_channels(const texture::FeatureTable& train,
                             std::span<const std::string> channels, const SvmConfig& cfg);
void save_model(const TrainedPipeline& model, const std::filesystem::path& path);
TrainedPipeline load_model(const std::filesystem::path& path);

/// Memoizing fitness oracle over a train/eval pair. Gene i selects
/// gene_channels[i]. Safe for concurrent evaluation.
class FitnessEvaluator {
 public:
  FitnessEvaluator(texture::FeatureTable train, texture::FeatureTable eval, SvmConfig cfg,
                   std::vector<std::string> gene_channels, std::string split_tag = "validation");

  FitnessValue evaluate(const Genome& genome);

  /// Evaluates the distinct uncached genomes of a batch, concurrently when
  /// exec is parallel. Results are identical for both modes.
  std::vector<FitnessValue> evaluate_batch(std::span<const Genome> genomes,
                                           Execution exec = Execution::parallel);

  /// Number of SVM trainings performed so far (cache misses).
  std::size_t trainings() const;
  std::size_t cache_hits() const;

  std::map<std::string, FitnessValue> cache_snapshot() const;
  void save_cache(const std::filesystem::path& path) const;
  /// Preloads entries; existing entries win.
  void load_cache(const std::filesystem::path& path);

 private:
  FitnessValue compute(const Genome& genome) const;

  texture::FeatureTable train_;
  texture::FeatureTable eval_;
  SvmConfig cfg_;
  std::vector<std::string> gene_channels_;
  std::string split_tag_;
  mutable std::mutex mutex_;
  std::map<std::string, FitnessValue> cache_;
  std::size_t trainings_ = 0;
  std::size_t hits_ = 0;
};

}  // namespace bandsel::svm
