#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bandsel/common.hpp"
#include "bandsel/raster.hpp"
#include "bandsel/segset.hpp"

namespace bandsel::texture {

enum class Direction { deg0 = 0, deg45 = 1, deg90 = 2, deg135 = 3 };
inline constexpr std::array<Direction, 4> kDirections = {Direction::deg0, Direction::deg45,
                                                         Direction::deg90, Direction::deg135};
inline constexpr int kHaralickCount = 13;

/// Pixel offset (dx, dy) for a direction; y grows downwards.
std::array<int, 2> offset(Direction dir, int distance = 1);

/// Segment levels on its bounding box; -1 marks pixels outside the segment.
struct QuantizedPatch {
  int width = 0;
  int height = 0;
  int levels = 0;
  std::vector<int> data;

  int at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Linear min-max quantization of the segment's own values into [0, levels).
/// A constant segment maps to level 0.
QuantizedPatch quantize(std::span<const float> plane, int plane_width,
                        std::span<const segset::Pixel> pixels, int levels);

/// Normalized symmetric co-occurrence matrix.
struct Glcm {
  int levels = 0;
  Direction direction = Direction::deg0;
  int distance = 1;
  std::vector<double> p;  // levels x levels, row-major

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Counts (i, j) and (j, i) for every pair with both pixels inside the
/// segment. Returns nullopt when no such pair exists.
std::optional<Glcm> glcm(const QuantizedPatch& patch, Direction dir, int distance = 1);

/// ASM, contrast, correlation, sum of squares variance, inverse difference
/// moment, sum average, sum variance, sum entropy, entropy, difference
/// variance, difference entropy, information measures of correlation 1 and 2.
///
/// Gray levels are indexed from 1 and entropies are in bits. Degenerate
/// marginals give correlation 0 and IMC1 0.
using HaralickFeatures = std::array<double, kHaralickCount>;
HaralickFeatures haralick13(const Glcm& g);

extern const std::array<const char*, kHaralickCount> kHaralickNames;

struct TextureConfig {
  int levels = 64;
  bool direction_mean = false;  // 13 direction-averaged values instead of 52

  int block_dim() const { return direction_mean ? kHaralickCount : 4 * kHaralickCount; }
};

/// Features of one segment for every raster band, band-major. Within a band
/// the 52 values are direction-major (0, 45, 90, 135 degrees). Directions
/// without in-segment pairs contribute zeros.
std::vector<double> segment_features(const raster::MultibandRaster& raster,
                                     const segset::SegmentRecord& seg, const TextureConfig& cfg);

struct FeatureRow {
  int region_id = 0;
  int segment_id = 0;
  segset::ClassLabel label = segset::ClassLabel::forest;
  std::vector<double> values;  // channels x block_dim

  bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
  std::vector<std::string> channels;
  int block_dim = 4 * kHaralickCount;
  std::vector<FeatureRow> rows;

  int channel_index(std::string_view name) const;
  std::span<const double> block(std::size_t row, int channel) const;
  FeatureTable subset(const std::set<int>& regions) const;
  void append(const FeatureTable& other);

  bool operator==(const FeatureTable&) const = default;
};

/// One row per segment; channels are the raster's band names.
FeatureTable extract_features(const raster::MultibandRaster& raster,
                              std::span<const segset::SegmentRecord> segments,
                              const TextureConfig& cfg, Execution exec = Execution::parallel);

/// JSON-lines {segment_id, region_id, label, features: {channel: [...]}},
/// channel order preserved.
void write_features_jsonl(std::ostream& out, const FeatureTable& table);
FeatureTable read_features_jsonl(std::istream& in);

/// "BSFT" magic, u32 version, u32 rows, u32 channels, u32 block_dim,
/// channel names (u32 length + bytes), then per row i32 region, i32 segment,
/// u32 label and float32 values. All little-endian.
void write_features_binary(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_features_binary(const std::filesystem::path& path);

}  // namespace bandsel::texture
