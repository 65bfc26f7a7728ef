#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "bandsel/image_io.hpp"
#include "bandsel/raster.hpp"

namespace bandsel::synthetic {

/// Scene generator where only the signal bands carry class-dependent texture.
///
/// Every band mixes white noise with spatially smoothed noise; the white-noise
/// share drifts slowly across the scene so single-band texture is an
/// ambiguous cue. Inside non-forest blobs the signal bands gain `contrast`
/// extra white-noise share and a brightness offset; other bands are
/// identically distributed in both classes.
struct SyntheticSpec {
  int width = 256;
  int height = 256;
  int regions = 4;
  int bands = 7;
  std::vector<int> signal_bands = {0, 2, 3};  // zero-based
  double contrast = 0.3;
  int blob_count = 6;
  double blob_radius = 28.0;
  int ignore_blobs = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const nlohmann::json& j);

struct Region {
  int id = 0;
  raster::MultibandRaster raster;
  raster::LabelMask mask;
};

/// Deterministic in (spec, region_id).
Region generate_region(const SyntheticSpec& spec, int region_id);

/// Writes region_<id>/raster/, region_<id>/mask.pgm for ids 1..regions and
/// synthetic_spec.json under root.
void synthesize(const SyntheticSpec& spec, const std::filesystem::path& root);

}  // namespace bandsel::synthetic
