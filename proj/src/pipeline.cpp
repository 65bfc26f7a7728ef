#include "bandsel/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <iterator>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "bandsel/metrics.hpp"
#include "bandsel/segset.hpp"
#include "bandsel/svm.hpp"

namespace bandsel::pipeline {

namespace fs = std::filesystem;
using config::Stage;
using nlohmann::json;

StageError::StageError(Stage stage, const std::string& what)
    : Error(std::string("[") + config::stage_name(stage) + "] " + what), stage_(stage) {}

std::vector<int> discover_regions(const fs::path& corpus) {
  if (!fs::is_directory(corpus)) throw IoError("corpus directory not found: " + corpus.string());
  std::vector<int> ids;
  for (const auto& entry : fs::directory_iterator(corpus)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("region_", 0) != 0) continue;
    try {
      std::size_t used = 0;
      const int id = std::stoi(name.substr(7), &used);
      if (used == name.size() - 7) ids.push_back(id);
    } catch (const std::exception&) {
    }
  }
  if (ids.empty()) throw IoError("no region_<id> directories under " + corpus.string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

fs::path region_dir(const fs::path& root, int region) {
  return root / ("region_" + std::to_string(region));
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> gene_channels(const texture::FeatureTable& table) {
  std::vector<std::string> genes;
  for (const auto& c : table.channels) {
    if (band_index(c) >= 0) genes.push_back(c);
  }
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (genes[i] != band_name(static_cast<int>(i))) {
      throw FormatError("feature table band channels must be B1..Bn in order");
    }
  }
  return genes;
}

texture::FeatureTable load_features(const fs::path& dir) {
  std::ifstream in(dir / "features.jsonl");
  if (!in) throw IoError("cannot open " + (dir / "features.jsonl").string());
  return texture::read_features_jsonl(in);
}

std::vector<segset::SegmentRecord> load_segments(const fs::path& dir) {
  std::ifstream in(dir / "segments.jsonl");
  if (!in) throw IoError("cannot open " + (dir / "segments.jsonl").string());
  return segset::read_segments_jsonl(in);
}

json counts_json(const segset::ClassCounts& c) {
  return {{"forest", c.forest}, {"non_forest", c.non_forest}, {"total", c.forest + c.non_forest}};
}

std::string percent(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v << '%';
  return os.str();
}

}  // namespace

raster::MultibandRaster load_region_raster(const fs::path& corpus, int region) {
  return raster::load_raster(region_dir(corpus, region) / "raster");
}

raster::LabelMask load_region_mask(const fs::path& corpus, int region) {
  return raster::load_mask(region_dir(corpus, region) / "mask.pgm");
}

double relative_gain(double best, double baseline) {
  if (!(baseline > 0.0)) throw InvalidArgument("relative gain needs a positive baseline");
  return (best - baseline) / baseline;
}

std::vector<std::string> feature_channels(int bands, int components) {
  std::vector<std::string> out;
  for (int b = 0; b < bands; ++b) out.push_back(band_name(b));
  for (int c = 0; c < components; ++c) out.push_back("PC" + std::to_string(c + 1));
  out.push_back("NDVI");
  return out;
}

Pipeline::Pipeline(config::RunConfig cfg, Logger log)
    : cfg_(std::move(cfg)), corpus_(cfg_.paths.corpus), out_(cfg_.paths.output), log_(std::move(log)) {
  cfg_.validate();
}

fs::path Pipeline::stage_dir(Stage stage) const { return out_ / config::stage_name(stage); }

bool Pipeline::is_complete(Stage stage) const {
  const fs::path marker = stage_dir(stage) / "stage.json";
  if (!fs::exists(marker)) return false;
  const json j = read_json(marker);
  return j.value("config_hash", "") == config::stage_hash(cfg_, stage);
}

void Pipeline::require(Stage stage) const {
  const fs::path marker = stage_dir(stage) / "stage.json";
  if (!fs::exists(marker)) {
    throw Error(std::string("missing input stage '") + config::stage_name(stage) + "' under " +
                out_.string());
  }
  const json j = read_json(marker);
  const std::string expected = config::stage_hash(cfg_, stage);
  if (j.value("config_hash", "") != expected) {
    throw Error(std::string("stage '") + config::stage_name(stage) + "' was produced with config hash " +
                j.value("config_hash", "?") + ", current config hashes to " + expected);
  }
}

void Pipeline::mark_complete(Stage stage) const {
  write_json(stage_dir(stage) / "stage.json",
             {{"stage", config::stage_name(stage)}, {"config_hash", config::stage_hash(cfg_, stage)}});
}

void Pipeline::run_stage(Stage stage, bool resume) {
  if (resume && is_complete(stage)) {
    if (log_) log_(std::string("skip ") + config::stage_name(stage) + " (up to date)");
    return;
  }
  if (log_) log_(std::string("run ") + config::stage_name(stage));
  try {
    const fs::path dir = stage_dir(stage);
    fs::remove(dir / "stage.json");
    fs::create_directories(dir);
    switch (stage) {
      case Stage::composite: composite(); break;
      case Stage::superpixels: superpixels(); break;
      case Stage::segments: segments(); break;
      case Stage::features: features(); break;
      case Stage::selection: selection(); break;
      case Stage::ranking: ranking(); break;
      case Stage::evaluation: evaluation(); break;
      case Stage::report: report(); break;
    }
    mark_complete(stage);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void Pipeline::run_all() {
  for (Stage s : {Stage::composite, Stage::superpixels, Stage::segments, Stage::features,
                  Stage::selection, Stage::ranking, Stage::evaluation, Stage::report}) {
    run_stage(s, true);
  }
}

void Pipeline::composite() {
  for (int region : discover_regions(corpus_)) {
    const auto source = load_region_raster(corpus_, region);
    const auto pcs = raster::pca_composite(source, cfg_.composite.components);
    raster::save_raster(pcs, region_dir(stage_dir(Stage::composite), region));
    if (log_) log_("  region " + std::to_string(region) + ": " + std::to_string(source.width()) + "x" +
                   std::to_string(source.height()) + ", " + std::to_string(source.bands()) + " bands");
  }
}

void Pipeline::superpixels() {
  require(Stage::composite);
  if (cfg_.composite.components != 3) {
    throw InvalidArgument("superpixels need a 3-component composite for the Lab conversion");
  }
  for (int region : discover_regions(corpus_)) {
    const auto pcs = raster::load_raster(region_dir(stage_dir(Stage::composite), region));
    slic::SlicConfig sc{cfg_.slic.k > 0 ? cfg_.slic.k : slic::default_k(pcs.pixel_count(), cfg_.slic.px_per_segment),
                        cfg_.slic.m, cfg_.slic.max_iter, cfg_.slic.min_region_frac};
    const auto map = slic::slic_segment(slic::to_lab(pcs), sc);
    slic::save_superpixels(map, region_dir(stage_dir(Stage::superpixels), region));
    if (log_) log_("  region " + std::to_string(region) + ": " + std::to_string(map.n_segments) + " superpixels");
  }
}

void Pipeline::segments() {
  require(Stage::superpixels);
  std::vector<segset::SegmentRecord> all;
  json per_region = json::object();
  for (int region : discover_regions(corpus_)) {
    const auto map = slic::load_superpixels(region_dir(stage_dir(Stage::superpixels), region));
    const auto mask = load_region_mask(corpus_, region);
    auto records = segset::build_segments(map, mask, region, cfg_.segments);
    segset::ClassCounts c;
    for (const auto& r : records) (r.majority == segset::ClassLabel::forest ? c.forest : c.non_forest) += 1;
    json entry = counts_json(c);
    entry["superpixels"] = map.n_segments;
    per_region[std::to_string(region)] = entry;
    all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
  }
  std::ofstream out(stage_dir(Stage::segments) / "segments.jsonl");
  if (!out) throw IoError("cannot write segments.jsonl");
  segset::write_segments_jsonl(out, all);
  out.close();
  write_json(stage_dir(Stage::segments) / "summary.json", {{"regions", per_region}});
}

void Pipeline::features() {
  require(Stage::segments);
  const auto records = load_segments(stage_dir(Stage::segments));
  std::map<int, std::vector<segset::SegmentRecord>> by_region;
  for (const auto& r : records) by_region[r.region_id].push_back(r);
  raster::CompositeOptions options{cfg_.composite.nir, cfg_.composite.red, cfg_.composite.components};
  texture::FeatureTable table;
  for (int region : discover_regions(corpus_)) {
    const auto source = load_region_raster(corpus_, region);
    const auto channels = feature_channels(source.bands(), cfg_.composite.components);
    auto stacked = raster::make_composite(source, channels, options);
    const raster::MultibandRaster named(stacked.raster.width(), stacked.raster.height(), channels,
                                        std::vector<float>(stacked.raster.data().begin(), stacked.raster.data().end()));
    const auto& segs = by_region[region];
    table.append(texture::extract_features(named, segs, cfg_.texture));
    if (log_) log_("  region " + std::to_string(region) + ": " + std::to_string(segs.size()) + " segments");
  }
  std::ofstream out(stage_dir(Stage::features) / "features.jsonl");
  if (!out) throw IoError("cannot write features.jsonl");
  texture::write_features_jsonl(out, table);
  out.close();
  texture::write_features_binary(stage_dir(Stage::features) / "features.bin", table);
}

json run_to_json(const umda::RunResult& run) {
  auto ind_json = [](const umda::Individual& ind) {
    return json{{"genome", ind.genome.to_string()}, {"fitness", ind.fitness.value_or(0.0)}};
  };
  json gens = json::array();
  for (const auto& g : run.generations) {
    json pop = json::array();
    for (const auto& ind : g.population) pop.push_back(ind_json(ind));
    gens.push_back({{"population", pop}, {"marginals", g.marginals.p}, {"best", g.best}, {"mean", g.mean}});
  }
  json fin = json::array();
  for (const auto& ind : run.final_population) fin.push_back(ind_json(ind));
  return {{"seed", run.seed},
          {"evaluations", run.evaluations},
          {"best", ind_json(run.best)},
          {"final_population", fin},
          {"generations", gens}};
}

umda::RunResult run_from_json(const json& j) {
  auto ind_from = [](const json& v) {
    return umda::Individual{Genome::parse(v.at("genome").get<std::string>()), v.at("fitness").get<double>()};
  };
  umda::RunResult run;
  run.seed = j.at("seed").get<std::uint64_t>();
  run.evaluations = j.at("evaluations").get<std::size_t>();
  run.best = ind_from(j.at("best"));
  for (const auto& v : j.at("final_population")) run.final_population.push_back(ind_from(v));
  for (const auto& g : j.at("generations")) {
    umda::GenerationTrace t;
    for (const auto& v : g.at("population")) t.population.push_back(ind_from(v));
    t.marginals.p = g.at("marginals").get<std::vector<double>>();
    t.best = g.at("best").get<double>();
    t.mean = g.at("mean").get<double>();
    run.generations.push_back(std::move(t));
  }
  return run;
}

json ranking_to_json(const umda::BandRanking& ranking) {
  json bands = json::array();
  for (std::size_t b = 0; b < ranking.band_names.size(); ++b) {
    bands.push_back({{"band", ranking.band_names[b]},
                     {"frequency", ranking.frequency[b]},
                     {"rank", ranking.rank[b] ? json(ranking.rank[b]) : json(nullptr)}});
  }
  json pool = json::array();
  for (const auto& p : ranking.pool) {
    pool.push_back({{"seed", p.seed}, {"genome", p.genome.to_string()}, {"fitness", p.fitness}});
  }
  return {{"bands", bands}, {"pool_size", ranking.pool.size()}, {"pool", pool}};
}

void Pipeline::selection() {
  require(Stage::features);
  const auto records = load_segments(stage_dir(Stage::segments));
  const auto parts = segset::split_records(records, cfg_.split);
  const auto table = load_features(stage_dir(Stage::features));
  const auto genes = gene_channels(table);
  svm::FitnessEvaluator evaluator(table.subset(cfg_.split.train), table.subset(cfg_.split.validation),
                                  cfg_.svm, genes, "validation");
  json seeds = json::array();
  for (std::uint64_t seed : cfg_.umda.seeds) {
    umda::UmdaConfig uc{static_cast<int>(genes.size()), cfg_.umda.population, cfg_.umda.parents,
                        cfg_.umda.generations, cfg_.umda.margins, seed};
    const auto run = umda::run(uc, [&](std::span<const Genome> batch) {
      std::vector<double> values;
      for (const auto& v : evaluator.evaluate_batch(batch)) values.push_back(v.balanced_accuracy);
      return values;
    });
    write_json(stage_dir(Stage::selection) / ("run_seed_" + std::to_string(seed) + ".json"), run_to_json(run));
    seeds.push_back({{"seed", seed},
                     {"best_genome", run.best.genome.to_string()},
                     {"best_fitness", *run.best.fitness},
                     {"evaluations", run.evaluations}});
    if (log_) log_("  seed " + std::to_string(seed) + ": best " + run.best.genome.to_string() + " " +
                   percent(*run.best.fitness));
  }
  evaluator.save_cache(stage_dir(Stage::selection) / "fitness_cache.json");
  write_json(stage_dir(Stage::selection) / "summary.json",
             {{"genes", genes},
              {"split",
               {{"train", counts_json(parts.counts(parts.train))},
                {"validation", counts_json(parts.counts(parts.validation))},
                {"test", counts_json(parts.counts(parts.test))}}},
              {"runs", seeds},
              {"svm_trainings", evaluator.trainings()}});
}

std::vector<umda::RunResult> Pipeline::load_runs() const {
  std::vector<umda::RunResult> runs;
  for (std::uint64_t seed : cfg_.umda.seeds) {
    runs.push_back(run_from_json(read_json(stage_dir(Stage::selection) / ("run_seed_" + std::to_string(seed) + ".json"))));
  }
  return runs;
}

void Pipeline::ranking() {
  require(Stage::selection);
  const auto runs = load_runs();
  const auto genes = read_json(stage_dir(Stage::selection) / "summary.json").at("genes").get<std::vector<std::string>>();
  const auto ranking = umda::rank_bands(runs, cfg_.umda.top_k, genes);
  write_json(stage_dir(Stage::ranking) / "ranking.json", ranking_to_json(ranking));
  write_text(stage_dir(Stage::ranking) / "ranking.txt", umda::format_ranking_table(ranking));
}

void Pipeline::evaluation() {
  require(Stage::selection);
  const auto runs = load_runs();
  const auto pool = umda::pool_final_populations(runs);
  const auto& best = pool.front();
  const auto table = load_features(stage_dir(Stage::features));
  const auto train = table.subset(cfg_.split.train);
  const auto test = table.subset(cfg_.split.test);

  std::vector<config::CompositionSpec> comps;
  config::CompositionSpec best_spec{"Best UMDA Ind.", {}};
  for (int b : best.genome.selected()) best_spec.channels.push_back(band_name(b));
  comps.push_back(best_spec);
  comps.insert(comps.end(), cfg_.compositions.begin(), cfg_.compositions.end());

  fs::create_directories(stage_dir(Stage::evaluation) / "models");
  std::vector<svm::FitnessValue> scores;
  for (const auto& c : comps) {
    scores.push_back(svm::evaluate_channels(train, test, c.channels, cfg_.svm, "test"));
    std::string file = c.name;
    for (char& ch : file) {
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    }
    svm::save_model(svm::fit_channels(train, c.channels, cfg_.svm),
                    stage_dir(Stage::evaluation) / "models" / (file + ".json"));
  }
  const double best_ba = scores.front().balanced_accuracy;
  json rows = json::array();
  std::ostringstream txt;
  txt << std::left << std::setw(18) << "Composition" << std::setw(20) << "Balanced Accuracy"
      << "Relative Gain\n";
  for (std::size_t i = 0; i < comps.size(); ++i) {
    json row = {{"name", comps[i].name},
                {"channels", comps[i].channels},
                {"balanced_accuracy", scores[i].balanced_accuracy},
                {"recall_forest", scores[i].recall_forest},
                {"recall_non_forest", scores[i].recall_non_forest}};
    std::string gain = "--";
    if (i > 0) {
      const double base = scores[i].balanced_accuracy;
      if (base > 0.0) {
        const double g = relative_gain(best_ba, base);
        row["relative_gain_of_best"] = g;
        gain = percent(g);
      } else {
        row["relative_gain_of_best"] = nullptr;
      }
    }
    rows.push_back(row);
    txt << std::setw(18) << comps[i].name << std::setw(20) << percent(scores[i].balanced_accuracy) << gain << '\n';
  }
  write_json(stage_dir(Stage::evaluation) / "compositions.json",
             {{"split", "test"},
              {"best_individual", {{"genome", best.genome.to_string()}, {"seed", best.seed}, {"validation_balanced_accuracy", best.fitness}}},
              {"compositions", rows}});
  write_text(stage_dir(Stage::evaluation) / "compositions.txt", txt.str());
}

void Pipeline::report() {
  require(Stage::ranking);
  require(Stage::evaluation);
  const json selection = read_json(stage_dir(Stage::selection) / "summary.json");
  const json ranking = read_json(stage_dir(Stage::ranking) / "ranking.json");
  const json evaluation = read_json(stage_dir(Stage::evaluation) / "compositions.json");
  const json segments = read_json(stage_dir(Stage::segments) / "summary.json");
  json ranking_bands = ranking.at("bands");
  const json out = {{"config_hash", config::stage_hash(cfg_, Stage::report)},
                    {"dataset", {{"regions", segments.at("regions")}, {"split", selection.at("split")}}},
                    {"selection", {{"runs", selection.at("runs")}, {"svm_trainings", selection.at("svm_trainings")}}},
                    {"ranking", {{"bands", ranking_bands}, {"pool_size", ranking.at("pool_size")}}},
                    {"best_individual", evaluation.at("best_individual")},
                    {"compositions", evaluation.at("compositions")}};
  write_json(stage_dir(Stage::report) / "report.json", out);

  std::ostringstream txt;
  txt << "Band ranking\n" << std::ifstream(stage_dir(Stage::ranking) / "ranking.txt").rdbuf();
  txt << "\nComposition comparison (test split)\n"
      << std::ifstream(stage_dir(Stage::evaluation) / "compositions.txt").rdbuf();
  write_text(stage_dir(Stage::report) / "report.txt", txt.str());
}

json score_masks(const fs::path& pred_dir, const fs::path& truth_dir, const fs::path& out_dir) {
  auto list = [](const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
  };
  const auto preds = list(pred_dir), truths = list(truth_dir);
  if (preds != truths) {
    std::vector<std::string> unpaired;
    std::set_symmetric_difference(preds.begin(), preds.end(), truths.begin(), truths.end(),
                                  std::back_inserter(unpaired));
    throw Error("score-masks: unpaired files: " + (unpaired.empty() ? std::string("?") : unpaired.front()));
  }
  if (preds.empty()) throw Error("score-masks: no .pgm files in " + pred_dir.string());

  auto metrics_json = [](const metrics::MetricSet& m) {
    json values = json::object(), undefined = json::object();
    const std::pair<const char*, const metrics::Metric*> items[] = {
        {"precision", &m.precision}, {"recall", &m.recall}, {"f1", &m.f1}, {"accuracy", &m.accuracy}, {"iou", &m.iou}};
    for (const auto& [name, metric] : items) {
      values[name] = metric->value ? json(*metric->value) : json(nullptr);
      if (!metric->defined()) undefined[name] = metric->undefined_reason;
    }
    if (!undefined.empty()) values["undefined"] = undefined;
    return values;
  };
  auto counts_of = [](const metrics::ConfusionCounts& c) {
    return json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
  };

  fs::create_directories(out_dir / "vis");
  json images = json::array();
  metrics::ConfusionCounts pooled;
  std::map<std::string, std::pair<double, int>> macro;
  for (const auto& name : preds) {
    const auto pred = raster::load_mask(pred_dir / name);
    const auto truth = raster::load_mask(truth_dir / name);
    const auto c = metrics::confusion(pred, truth);
    pooled += c;
    const auto m = metrics::all_metrics(c);
    const std::pair<const char*, const metrics::Metric*> items[] = {
        {"precision", &m.precision}, {"recall", &m.recall}, {"f1", &m.f1}, {"accuracy", &m.accuracy}, {"iou", &m.iou}};
    for (const auto& [key, metric] : items) {
      auto& [sum, count] = macro[key];
      if (metric->value) {
        sum += *metric->value;
        ++count;
      }
    }
    images.push_back({{"image", name}, {"counts", counts_of(c)}, {"metrics", metrics_json(m)}});

    std::vector<std::array<std::uint8_t, 3>> vis(truth.labels.size());
    for (std::size_t i = 0; i < vis.size(); ++i) {
      const auto t = truth.labels[i];
      const bool p = pred.labels[i] == raster::kNonForest;
      if (t == raster::kIgnore) vis[i] = {128, 128, 128};
      else if (t == raster::kNonForest) vis[i] = p ? std::array<std::uint8_t, 3>{255, 255, 255} : std::array<std::uint8_t, 3>{255, 0, 0};
      else vis[i] = p ? std::array<std::uint8_t, 3>{0, 0, 255} : std::array<std::uint8_t, 3>{0, 0, 0};
    }
    raster::write_ppm(out_dir / "vis" / (fs::path(name).stem().string() + ".ppm"), truth.width, truth.height, vis);
  }
  json macro_json = json::object();
  for (const auto& [key, sc] : macro) {
    macro_json[key] = sc.second > 0 ? json(sc.first / sc.second) : json(nullptr);
    macro_json[std::string(key) + "_images"] = sc.second;
  }
  const json report = {{"images", images},
                       {"micro", {{"counts", counts_of(pooled)}, {"metrics", metrics_json(metrics::all_metrics(pooled))}}},
                       {"macro", macro_json}};
  fs::create_directories(out_dir);
  write_json(out_dir / "score_masks.json", report);
  return report;
}

}  // namespace bandsel::pipeline
