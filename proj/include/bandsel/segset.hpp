#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <vector>

#include "bandsel/common.hpp"
#include "bandsel/image_io.hpp"
#include "bandsel/slic.hpp"

namespace bandsel::segset {

enum class ClassLabel : std::uint8_t { forest = 0, non_forest = 1 };

const char* to_string(ClassLabel label);
ClassLabel class_label_from_string(std::string_view s);

struct Pixel {
  int x = 0;
  int y = 0;
  bool operator==(const Pixel&) const = default;
};

struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool operator==(const BBox&) const = default;
};

struct SegmentRecord {
  int region_id = 0;
  int segment_id = 0;
  std::vector<Pixel> pixels;  // scan order
  ClassLabel majority = ClassLabel::forest;
  double hor = 0.0;

  std::size_t area() const { return pixels.size(); }
  BBox bbox() const;
  bool operator==(const SegmentRecord&) const = default;
};

struct HorResult {
  double hor;
  ClassLabel majority;
};

/// HoR = max(NFP, NNP) / (NFP + NNP). A tie maps to forest.
HorResult compute_hor(std::span<const Pixel> pixels, const raster::LabelMask& mask);

struct SegmentFilter {
  double min_hor = 0.70;
  std::size_t min_area = 70;

  /// Both thresholds are inclusive.
  bool accepts(double hor, std::size_t area) const { return hor >= min_hor && area >= min_area; }
};

/// One record per superpixel with no ignore pixels that passes the filter,
/// sorted by segment id.
std::vector<SegmentRecord> build_segments(const slic::SuperpixelMap& map,
                                          const raster::LabelMask& mask, int region_id,
                                          const SegmentFilter& filter = {});

class UnassignedRegionError : public Error {
 public:
  explicit UnassignedRegionError(int region);
  int region() const { return region_; }

 private:
  int region_;
};

struct DatasetSplit {
  std::set<int> train;
  std::set<int> validation;
  std::set<int> test;

  /// Pairwise disjoint and nonempty.
  void validate() const;
};

struct ClassCounts {
  std::size_t forest = 0;
  std::size_t non_forest = 0;
};

struct SplitRecords {
  std::vector<SegmentRecord> train;
  std::vector<SegmentRecord> validation;
  std::vector<SegmentRecord> test;

  ClassCounts counts(std::span<const SegmentRecord> part) const;
};

SplitRecords split_records(std::span<const SegmentRecord> records, const DatasetSplit& split);

/// Run lengths over the bbox in row-major order, alternating outside/inside
/// and starting with an outside run (possibly 0).
std::vector<std::uint32_t> encode_runs(const SegmentRecord& record);
std::vector<Pixel> decode_runs(const BBox& box, std::span<const std::uint32_t> runs);

/// JSON-lines: {region_id, segment_id, area, majority_label, hor, bbox,
/// pixel_run_lengths}.
void write_segments_jsonl(std::ostream& out, std::span<const SegmentRecord> records);
std::vector<SegmentRecord> read_segments_jsonl(std::istream& in);

}  // namespace bandsel::segset
