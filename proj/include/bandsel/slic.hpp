#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bandsel/common.hpp"
#include "bandsel/raster.hpp"

namespace bandsel::slic {

struct SlicConfig {
  int k = 1;                      // desired superpixel count
  double m = 10.0;                // compactness
  int max_iter = 10;
  double min_region_frac = 0.25;  // of the expected superpixel area N/k

  void validate() const;
};

/// Picks k so that superpixels average px_per_segment pixels.
int default_k(std::size_t pixel_count, double px_per_segment = 350.0);

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  int n_segments = 0;
  std::vector<std::uint32_t> labels;  // row-major

  std::uint32_t at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  std::vector<std::size_t> areas() const;
  bool operator==(const SuperpixelMap&) const = default;
};

/// sRGB (D65) to CIELAB, treating a 3-band composite in [0, 1] as sRGB.
raster::MultibandRaster to_lab(const raster::MultibandRaster& rgb);

/// Local k-means in (L, a, b, x, y) followed by connectivity enforcement.
/// The result is independent of `exec` and of the thread count.
SuperpixelMap slic_segment(const raster::MultibandRaster& lab, const SlicConfig& cfg,
                           Execution exec = Execution::parallel);

/// Raw k-means labelling before connectivity enforcement. Exposed for tests.
SuperpixelMap slic_cluster(const raster::MultibandRaster& lab, const SlicConfig& cfg,
                           Execution exec = Execution::parallel);

/// Splits every label into its 4-connected components, merges components
/// smaller than min_region_frac * N / k into their largest 4-adjacent
/// neighbour and renumbers labels by first occurrence in scan order.
SuperpixelMap enforce_connectivity(const SuperpixelMap& map, const SlicConfig& cfg);

/// labels.u32 (row-major little-endian uint32) + meta.json.
void save_superpixels(const SuperpixelMap& map, const std::filesystem::path& dir);
SuperpixelMap load_superpixels(const std::filesystem::path& dir);

}  // namespace bandsel::slic
