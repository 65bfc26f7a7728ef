#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bandsel/raster.hpp"

namespace bandsel::raster {

inline constexpr std::uint8_t kForest = 0;
inline constexpr std::uint8_t kNonForest = 1;
inline constexpr std::uint8_t kIgnore = 255;

/// Per-pixel ground truth: 0 forest, 1 non-forest, 255 ignore.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
  /// Throws FormatError on a size mismatch or a value outside {0, 1, 255}.
  void validate() const;
  bool operator==(const LabelMask&) const = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Binary PGM (P5), maxval 255. Comments in the header are skipped.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const std::uint8_t> pixels);

/// Binary PPM (P6), maxval 255, interleaved RGB.
void write_ppm(const std::filesystem::path& path, int width, int height,
               std::span<const std::array<std::uint8_t, 3>> pixels);

LabelMask load_mask(const std::filesystem::path& path);
void save_mask(const LabelMask& mask, const std::filesystem::path& path);

/// Min-max stretches one band to 0..255 for visual inspection.
void export_band_pgm(const MultibandRaster& raster, int band,
                     const std::filesystem::path& path);

}  // namespace bandsel::raster
