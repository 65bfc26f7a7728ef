#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bandsel/segset.hpp"
#include "bandsel/svm.hpp"
#include "bandsel/texture.hpp"

namespace bandsel::config {

inline constexpr int kSchemaVersion = 1;

struct CompositionSpec {
  std::string name;
  std::vector<std::string> channels;
};

struct RunConfig {
  struct Paths {
    std::string corpus = "corpus";
    std::string output = "out";
  } paths;

  struct Composite {
    int components = 3;
    int nir = 4;  // B5
    int red = 3;  // B4
  } composite;

  struct Slic {
    int k = 0;  // 0: derive from px_per_segment per region
    double px_per_segment = 350.0;
    double m = 10.0;
    int max_iter = 10;
    double min_region_frac = 0.25;
  } slic;

  segset::SegmentFilter segments;
  texture::TextureConfig texture;
  svm::SvmConfig svm;

  struct Umda {
    int population = 10;
    int parents = 5;
    int generations = 10;
    bool margins = false;
    std::vector<std::uint64_t> seeds = {1, 10, 20, 30, 42};
    std::size_t top_k = 22;
  } umda;

  segset::DatasetSplit split{{1, 2, 5, 6, 7, 9}, {8}, {3, 4}};

  std::vector<CompositionSpec> compositions = {
      {"PCA", {"PC1", "PC2", "PC3"}},
      {"RGB", {"B4", "B3", "B2"}},
      {"All+NDVI", {"B1", "B2", "B3", "B4", "B5", "B6", "B7", "NDVI"}}};

  void validate() const;
};

/// Strict parse: unknown keys and a wrong schema version are rejected.
/// Missing keys keep their defaults.
RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load(const std::filesystem::path& path);

enum class Stage { composite, superpixels, segments, features, selection, ranking, evaluation, report };

const char* stage_name(Stage s);

/// Hash of every config section that determines the stage's output,
/// including those of upstream stages. Paths are excluded.
std::string stage_hash(const RunConfig& cfg, Stage s);

}  // namespace bandsel::config
