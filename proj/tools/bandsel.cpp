// bandsel: command-line front end for the band selection pipeline.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bandsel/config.hpp"
#include "bandsel/pipeline.hpp"
#include "bandsel/synthetic.hpp"

using namespace bandsel;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string corpus;
  int threads = 0;
  bool verbose = false;
};

config::RunConfig resolve_config(const Globals& g) {
  config::RunConfig cfg = g.config_path.empty() ? config::RunConfig{} : config::load(g.config_path);
  if (!g.out.empty()) cfg.paths.output = g.out;
  if (!g.corpus.empty()) cfg.paths.corpus = g.corpus;
  if (g.seed) cfg.umda.seeds = {*g.seed};
  cfg.validate();
  return cfg;
}

pipeline::Logger logger(const Globals& g) {
  if (!g.verbose) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band selection for forest / non-forest superpixel classification"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Single UMDA seed (or the synthetic corpus seed)");
  app.add_option("--out", g.out, "Output root");
  app.add_option("--corpus", g.corpus, "Corpus root holding region_<id>/ directories");
  app.add_option("--threads", g.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose,-v", g.verbose, "Log progress to stderr");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Write a synthetic corpus");
  std::string spec_path, signal;
  std::optional<int> size, regions, blobs;
  std::optional<double> contrast;
  synth->add_option("--spec", spec_path, "SyntheticSpec JSON")->check(CLI::ExistingFile);
  synth->add_option("--size", size, "Width and height in pixels");
  synth->add_option("--regions", regions, "Number of regions");
  synth->add_option("--signal", signal, "Signal bands, e.g. B1,B3,B4");
  synth->add_option("--contrast", contrast, "Texture contrast of the signal bands");
  synth->add_option("--blobs", blobs, "Non-forest blobs per region");

  // one subcommand per stage
  const std::pair<const char*, config::Stage> stage_cmds[] = {
      {"composite", config::Stage::composite},
      {"superpixels", config::Stage::superpixels},
      {"build-segments", config::Stage::segments},
      {"extract-features", config::Stage::features},
      {"select-bands", config::Stage::selection},
      {"rank-bands", config::Stage::ranking},
      {"evaluate-composition", config::Stage::evaluation},
      {"report", config::Stage::report}};
  std::vector<std::pair<CLI::App*, config::Stage>> stage_apps;
  bool resume = false;
  std::vector<std::string> compositions;
  for (const auto& [name, stage] : stage_cmds) {
    auto* sub = app.add_subcommand(name, std::string("Run the ") + config::stage_name(stage) + " stage");
    sub->add_flag("--resume", resume, "Skip when the stage is already complete for this config");
    if (stage == config::Stage::evaluation) {
      sub->add_option("--composition", compositions, "Replace the baselines: name=B4,B3,B2 (repeatable)");
    }
    stage_apps.emplace_back(sub, stage);
  }
  auto* run_all = app.add_subcommand("pipeline", "Run every stage, resuming completed ones");

  auto* score = app.add_subcommand("score-masks", "Pixelwise metrics of predicted masks");
  std::string pred_dir, truth_dir;
  score->add_option("--pred", pred_dir, "Directory of predicted PGM masks")->required()->check(CLI::ExistingDirectory);
  score->add_option("--truth", truth_dir, "Directory of ground-truth PGM masks")->required()->check(CLI::ExistingDirectory);

  auto* show = app.add_subcommand("show-config", "Print the resolved configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    set_thread_count(g.threads);
    if (*synth) {
      synthetic::SyntheticSpec spec;
      if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        spec = synthetic::spec_from_json(nlohmann::json::parse(in));
      }
      if (size) spec.width = spec.height = *size;
      if (regions) spec.regions = *regions;
      if (contrast) spec.contrast = *contrast;
      if (blobs) spec.blob_count = *blobs;
      if (!signal.empty()) {
        spec.signal_bands.clear();
        for (const auto& b : split_list(signal)) {
          const int idx = band_index(b);
          if (idx < 0) throw InvalidArgument("--signal: not a band name: " + b);
          spec.signal_bands.push_back(idx);
        }
      }
      if (g.seed) spec.seed = *g.seed;
      const std::string root = g.out.empty() ? "corpus" : g.out;
      synthetic::synthesize(spec, root);
      if (g.verbose) std::cerr << "wrote " << spec.regions << " regions to " << root << '\n';
      return 0;
    }
    if (*score) {
      const auto report = pipeline::score_masks(pred_dir, truth_dir, g.out.empty() ? "scores" : g.out);
      std::cout << report.at("micro").dump(2) << '\n';
      return 0;
    }
    auto cfg = resolve_config(g);
    if (!compositions.empty()) {
      cfg.compositions.clear();
      for (const auto& c : compositions) {
        const auto eq = c.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidArgument("--composition expects name=channels");
        cfg.compositions.push_back({c.substr(0, eq), split_list(c.substr(eq + 1))});
      }
    }
    if (*show) {
      std::cout << config::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    pipeline::Pipeline p(cfg, logger(g));
    if (*run_all) {
      p.run_all();
      std::ifstream txt(p.stage_dir(config::Stage::report) / "report.txt");
      std::cout << txt.rdbuf();
      return 0;
    }
    for (const auto& [sub, stage] : stage_apps) {
      if (*sub) p.run_stage(stage, resume);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
