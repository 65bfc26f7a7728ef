#include "bandsel/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

namespace bandsel::svm {

using nlohmann::json;
using texture::FeatureTable;

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 1.0);
  if (x.rows == 0) return s;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += row[c];
  }
  for (auto& m : s.mean) m /= static_cast<double>(x.rows);
  std::vector<double> var(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = row[c] - s.mean[c];
      var[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < x.cols; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(x.rows));
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Matrix& x) const {
  if (x.cols != mean.size()) throw InvalidArgument("standardizer dimension mismatch");
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
}

double SvmModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw InvalidArgument("svm: input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(weights.size()));
  }
  return std::inner_product(x.begin(), x.end(), weights.begin(), bias);
}

namespace {

double objective(const Matrix& x, std::span<const double> sign, std::span<const double> cw,
                 std::span<const double> w, double b, double lambda) {
  double reg = b * b;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    const double f = std::inner_product(row.begin(), row.end(), w.begin(), b);
    loss += cw[i] * std::max(0.0, 1.0 - sign[i] * f);
  }
  return 0.5 * lambda * reg + loss / static_cast<double>(x.rows);
}

}  // namespace

SvmModel train(const Matrix& x, std::span<const int> y, const SvmConfig& cfg) {
  if (x.rows != y.size()) throw InvalidArgument("svm: row count does not match label count");
  if (!(cfg.lambda > 0.0) || cfg.epochs < 1) throw InvalidArgument("svm: bad configuration");
  std::array<std::size_t, 2> n_class{0, 0};
  for (int label : y) {
    if (label != 0 && label != 1) throw InvalidArgument("svm: labels must be 0 or 1");
    ++n_class[static_cast<std::size_t>(label)];
  }
  if (n_class[0] == 0 || n_class[1] == 0) {
    throw SingleClassError("svm: training data contains a single class");
  }

  SvmModel model;
  model.config = cfg;
  if (cfg.class_weighting) {
    const double n = static_cast<double>(x.rows);
    model.class_weights = {n / (2.0 * static_cast<double>(n_class[0])),
                           n / (2.0 * static_cast<double>(n_class[1]))};
  }
  std::vector<double> sign(x.rows), cw(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    sign[i] = y[i] == 1 ? 1.0 : -1.0;
    cw[i] = model.class_weights[static_cast<std::size_t>(y[i])];
  }

  const std::size_t d = x.cols;
  std::vector<double> w(d, 0.0), w_avg(d, 0.0);
  double b = 0.0, b_avg = 0.0;
  std::size_t averaged = 0;
  const int average_from = cfg.epochs / 2;
  const double radius =
      std::sqrt(std::max(model.class_weights[0], model.class_weights[1]) / cfg.lambda);

  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  model.loss_trace.push_back(objective(x, sign, cw, w, b, cfg.lambda));

  std::size_t t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
      const auto row = x.row(idx);
      const double margin = sign[idx] * std::inner_product(row.begin(), row.end(), w.begin(), b);
      const double shrink = 1.0 - eta * cfg.lambda;
      for (auto& v : w) v *= shrink;
      b *= shrink;
      if (margin < 1.0) {
        const double step = eta * cw[idx] * sign[idx];
        for (std::size_t k = 0; k < d; ++k) w[k] += step * row[k];
        b += step;
      }
      double norm2 = b * b;
      for (double v : w) norm2 += v * v;
      if (norm2 > radius * radius) {
        const double s = radius / std::sqrt(norm2);
        for (auto& v : w) v *= s;
        b *= s;
      }
      if (epoch >= average_from) {
        ++averaged;
        const double a = 1.0 / static_cast<double>(averaged);
        for (std::size_t k = 0; k < d; ++k) w_avg[k] += a * (w[k] - w_avg[k]);
        b_avg += a * (b - b_avg);
      }
    }
    if (epoch >= average_from) {
      model.loss_trace.push_back(objective(x, sign, cw, w_avg, b_avg, cfg.lambda));
    } else {
      model.loss_trace.push_back(objective(x, sign, cw, w, b, cfg.lambda));
    }
  }
  model.weights = std::move(w_avg);
  model.bias = b_avg;
  return model;
}

std::vector<int> predict(const SvmModel& model, const Matrix& x) {
  if (x.cols != model.weights.size()) {
    throw InvalidArgument("svm: input has " + std::to_string(x.cols) + " features, model expects " +
                          std::to_string(model.weights.size()));
  }
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = model.decision(x.row(i)) >= 0.0 ? 1 : 0;
  return out;
}

namespace {

std::array<double, 2> recalls(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument("balanced_accuracy: length mismatch");
  }
  std::array<std::size_t, 2> total{0, 0}, hit{0, 0};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = static_cast<std::size_t>(y_true[i] != 0);
    ++total[t];
    if ((y_pred[i] != 0) == (t == 1)) ++hit[t];
  }
  if (total[0] == 0 || total[1] == 0) {
    throw SingleClassError("balanced_accuracy: ground truth contains a single class");
  }
  return {static_cast<double>(hit[0]) / static_cast<double>(total[0]),
          static_cast<double>(hit[1]) / static_cast<double>(total[1])};
}

}  // namespace

double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  const auto r = recalls(y_true, y_pred);
  return 0.5 * (r[0] + r[1]);
}

Matrix gather(const FeatureTable& table, std::span<const int> channels) {
  const auto bd = static_cast<std::size_t>(table.block_dim);
  Matrix m(table.rows.size(), channels.size() * bd);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto out = m.row(r);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const auto blk = table.block(r, channels[c]);
      std::copy(blk.begin(), blk.end(), out.begin() + static_cast<std::ptrdiff_t>(c * bd));
    }
  }
  return m;
}

std::vector<int> labels_of(const FeatureTable& table) {
  std::vector<int> y;
  y.reserve(table.rows.size());
  for (const auto& r : table.rows) y.push_back(r.label == segset::ClassLabel::non_forest ? 1 : 0);
  return y;
}

namespace {

std::vector<int> resolve(const FeatureTable& table, std::span<const std::string> channels) {
  std::vector<int> idx;
  for (const auto& c : channels) idx.push_back(table.channel_index(c));
  return idx;
}

}  // namespace

TrainedPipeline fit_channels(const FeatureTable& train, std::span<const std::string> channels,
                             const SvmConfig& cfg) {
  TrainedPipeline out;
  out.channels.assign(channels.begin(), channels.end());
  const auto idx = resolve(train, channels);
  Matrix x = gather(train, idx);
  out.standardizer = Standardizer::fit(x);
  out.standardizer.apply(x);
  out.model = svm::train(x, labels_of(train), cfg);
  return out;
}

FitnessValue evaluate_channels(const FeatureTable& train, const FeatureTable& eval,
                               std::span<const std::string> channels, const SvmConfig& cfg,
                               const std::string& split_tag) {
  const TrainedPipeline fitted = fit_channels(train, channels, cfg);
  Matrix x = gather(eval, resolve(eval, channels));
  fitted.standardizer.apply(x);
  const auto pred = predict(fitted.model, x);
  const auto r = recalls(labels_of(eval), pred);
  FitnessValue v;
  v.recall_forest = r[0];
  v.recall_non_forest = r[1];
  v.balanced_accuracy = 0.5 * (r[0] + r[1]);
  v.split = split_tag;
  return v;
}

void save_model(const TrainedPipeline& m, const std::filesystem::path& path) {
  json j = {{"channels", m.channels},
            {"weights", m.model.weights},
            {"bias", m.model.bias},
            {"class_weights", m.model.class_weights},
            {"standardizer", {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}}},
            {"config",
             {{"lambda", m.model.config.lambda},
              {"epochs", m.model.config.epochs},
              {"seed", m.model.config.seed},
              {"class_weighting", m.model.config.class_weighting}}}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

TrainedPipeline load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = json::parse(in);
    TrainedPipeline m;
    m.channels = j.at("channels").get<std::vector<std::string>>();
    m.model.weights = j.at("weights").get<std::vector<double>>();
    m.model.bias = j.at("bias").get<double>();
    m.model.class_weights = j.at("class_weights").get<std::array<double, 2>>();
    m.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    m.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    const auto& c = j.at("config");
    m.model.config.lambda = c.at("lambda").get<double>();
    m.model.config.epochs = c.at("epochs").get<int>();
    m.model.config.seed = c.at("seed").get<std::uint64_t>();
    m.model.config.class_weighting = c.at("class_weighting").get<bool>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FitnessEvaluator::FitnessEvaluator(FeatureTable train, FeatureTable eval, SvmConfig cfg,
                                   std::vector<std::string> gene_channels, std::string split_tag)
    : train_(std::move(train)),
      eval_(std::move(eval)),
      cfg_(cfg),
      gene_channels_(std::move(gene_channels)),
      split_tag_(std::move(split_tag)) {
  for (const auto& c : gene_channels_) {
    train_.channel_index(c);
    eval_.channel_index(c);
  }
}

FitnessValue FitnessEvaluator::compute(const Genome& genome) const {
  if (genome.size() != gene_channels_.size()) {
    throw InvalidArgument("genome length " + std::to_string(genome.size()) + " does not match " +
                          std::to_string(gene_channels_.size()) + " genes");
  }
  if (genome.empty_selection()) {
    FitnessValue v;
    v.split = split_tag_;
    v.empty_genome = true;
    return v;
  }
  std::vector<std::string> channels;
  for (int i : genome.selected()) channels.push_back(gene_channels_[static_cast<std::size_t>(i)]);
  return evaluate_channels(train_, eval_, channels, cfg_, split_tag_);
}

FitnessValue FitnessEvaluator::evaluate(const Genome& genome) {
  const Genome one[] = {genome};
  return evaluate_batch(one, Execution::serial).front();
}

std::vector<FitnessValue> FitnessEvaluator::evaluate_batch(std::span<const Genome> genomes,
                                                           Execution exec) {
  std::vector<Genome> todo;
  {
    std::lock_guard lock(mutex_);
    std::set<std::string> seen;
    for (const auto& g : genomes) {
      const auto key = g.to_string();
      if (cache_.count(key)) {
        ++hits_;
      } else if (seen.insert(key).second) {
        todo.push_back(g);
      }
    }
  }
  std::vector<FitnessValue> fresh(todo.size());
  const auto n = static_cast<std::ptrdiff_t>(todo.size());
  if (exec == Execution::parallel) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        fresh[static_cast<std::size_t>(i)] = compute(todo[static_cast<std::size_t>(i)]);
      } catch (...) {
#pragma omp critical(bandsel_fitness_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      fresh[static_cast<std::size_t>(i)] = compute(todo[static_cast<std::size_t>(i)]);
    }
  }
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (cache_.emplace(todo[i].to_string(), fresh[i]).second && !fresh[i].empty_genome) {
      ++trainings_;
    }
  }
  std::vector<FitnessValue> out;
  out.reserve(genomes.size());
  for (const auto& g : genomes) out.push_back(cache_.at(g.to_string()));
  return out;
}

std::size_t FitnessEvaluator::trainings() const {
  std::lock_guard lock(mutex_);
  return trainings_;
}

std::size_t FitnessEvaluator::cache_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::map<std::string, FitnessValue> FitnessEvaluator::cache_snapshot() const {
  std::lock_guard lock(mutex_);
  return cache_;
}

void FitnessEvaluator::save_cache(const std::filesystem::path& path) const {
  json j = json::object();
  for (const auto& [key, v] : cache_snapshot()) {
    j[key] = {{"balanced_accuracy", v.balanced_accuracy},
              {"recall_forest", v.recall_forest},
              {"recall_non_forest", v.recall_non_forest},
              {"split", v.split},
              {"empty_genome", v.empty_genome}};
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void FitnessEvaluator::load_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = json::parse(in);
    std::lock_guard lock(mutex_);
    for (const auto& [key, v] : j.items()) {
      FitnessValue f;
      f.balanced_accuracy = v.at("balanced_accuracy").get<double>();
      f.recall_forest = v.at("recall_forest").get<double>();
      f.recall_non_forest = v.at("recall_non_forest").get<double>();
      f.split = v.at("split").get<std::string>();
      f.empty_genome = v.at("empty_genome").get<bool>();
      if (f.split != split_tag_) continue;
      cache_.emplace(key, f);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace bandsel::svm
