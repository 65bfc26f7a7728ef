#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandsel/config.hpp"
#include "bandsel/image_io.hpp"
#include "bandsel/raster.hpp"
#include "bandsel/slic.hpp"
#include "bandsel/texture.hpp"
#include "bandsel/umda.hpp"

namespace bandsel::pipeline {

/// Error raised by a stage; the message is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(config::Stage stage, const std::string& what);
  config::Stage stage() const { return stage_; }

 private:
  config::Stage stage_;
};

/// Region ids found as region_<id>/ under the corpus root, ascending.
std::vector<int> discover_regions(const std::filesystem::path& corpus);
raster::MultibandRaster load_region_raster(const std::filesystem::path& corpus, int region);
raster::LabelMask load_region_mask(const std::filesystem::path& corpus, int region);

/// Channels whose features are extracted for every segment: the raster
/// bands, the principal components and NDVI.
std::vector<std::string> feature_channels(int bands, int components);

using Logger = std::function<void(const std::string&)>;

/// Stage runner over the output root. Each stage writes its artifacts and
/// then a stage.json carrying the config hash; downstream stages refuse
/// inputs whose hash differs from the current config.
class Pipeline {
 public:
  explicit Pipeline(config::RunConfig cfg, Logger log = {});

  /// Runs one stage. With resume, a stage whose stage.json matches the
  /// current hash is skipped.
  void run_stage(config::Stage stage, bool resume = false);
  /// Every stage in order, resuming completed ones.
  void run_all();

  std::filesystem::path stage_dir(config::Stage stage) const;
  std::filesystem::path report_path() const { return out_ / "report" / "report.json"; }
  const config::RunConfig& config() const { return cfg_; }

 private:
  bool is_complete(config::Stage stage) const;
  void require(config::Stage stage) const;
  void mark_complete(config::Stage stage) const;

  void composite();
  void superpixels();
  void segments();
  void features();
  void selection();
  void ranking();
  void evaluation();
  void report();

  std::vector<umda::RunResult> load_runs() const;

  config::RunConfig cfg_;
  std::filesystem::path corpus_;
  std::filesystem::path out_;
  Logger log_;
};

/// (best - baseline) / baseline.
double relative_gain(double best, double baseline);

nlohmann::json run_to_json(const umda::RunResult& run);
umda::RunResult run_from_json(const nlohmann::json& j);
nlohmann::json ranking_to_json(const umda::BandRanking& ranking);

/// Scores every *.pgm in pred_dir against the same-named file in truth_dir.
/// Writes score_masks.json and per-image error maps (black TN, white TP,
/// red FN, blue FP) as vis/<stem>.ppm under out_dir. Returns the report.
nlohmann::json score_masks(const std::filesystem::path& pred_dir,
                           const std::filesystem::path& truth_dir,
                           const std::filesystem::path& out_dir);

}  // namespace bandsel::pipeline
