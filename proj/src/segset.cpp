#include "bandsel/segset.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace bandsel::segset {

using nlohmann::json;
using raster::LabelMask;

const char* to_string(ClassLabel label) {
  return label == ClassLabel::forest ? "forest" : "non-forest";
}

ClassLabel class_label_from_string(std::string_view s) {
  if (s == "forest") return ClassLabel::forest;
  if (s == "non-forest") return ClassLabel::non_forest;
  throw FormatError("unknown class label '" + std::string(s) + "'");
}

BBox SegmentRecord::bbox() const {
  if (pixels.empty()) throw InvalidArgument("empty segment has no bounding box");
  BBox b{pixels[0].x, pixels[0].y, pixels[0].x, pixels[0].y};
  for (const auto& p : pixels) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

HorResult compute_hor(std::span<const Pixel> pixels, const LabelMask& mask) {
  if (pixels.empty()) throw InvalidArgument("compute_hor: empty pixel list");
  std::size_t nfp = 0, nnp = 0;
  for (const auto& p : pixels) {
    if (p.x < 0 || p.y < 0 || p.x >= mask.width || p.y >= mask.height) {
      throw InvalidArgument("compute_hor: pixel out of mask bounds");
    }
    switch (mask.at(p.x, p.y)) {
      case raster::kForest: ++nfp; break;
      case raster::kNonForest: ++nnp; break;
      default: throw InvalidArgument("compute_hor: segment contains an ignore pixel");
    }
  }
  const auto majority = nnp > nfp ? ClassLabel::non_forest : ClassLabel::forest;
  const double hor = static_cast<double>(std::max(nfp, nnp)) / static_cast<double>(nfp + nnp);
  return {hor, majority};
}

std::vector<SegmentRecord> build_segments(const slic::SuperpixelMap& map, const LabelMask& mask,
                                          int region_id, const SegmentFilter& filter) {
  if (map.width != mask.width || map.height != mask.height) {
    throw InvalidArgument("build_segments: superpixel map is " + std::to_string(map.width) + "x" +
                          std::to_string(map.height) + " but mask is " +
                          std::to_string(mask.width) + "x" + std::to_string(mask.height));
  }
  std::vector<std::vector<Pixel>> members(static_cast<std::size_t>(map.n_segments));
  std::vector<bool> touches_ignore(static_cast<std::size_t>(map.n_segments), false);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const auto s = map.at(x, y);
      members[s].push_back({x, y});
      if (mask.at(x, y) == raster::kIgnore) touches_ignore[s] = true;
    }
  }
  std::vector<SegmentRecord> out;
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty() || touches_ignore[s]) continue;
    const auto [hor, majority] = compute_hor(members[s], mask);
    if (!filter.accepts(hor, members[s].size())) continue;
    out.push_back({region_id, static_cast<int>(s), std::move(members[s]), majority, hor});
  }
  return out;
}

UnassignedRegionError::UnassignedRegionError(int region)
    : Error("UnassignedRegion(" + std::to_string(region) + ")"), region_(region) {}

void DatasetSplit::validate() const {
  if (train.empty() || validation.empty() || test.empty()) {
    throw InvalidArgument("dataset split: train, validation and test must all be nonempty");
  }
  for (int r : train) {
    if (validation.count(r) || test.count(r)) {
      throw InvalidArgument("dataset split: region " + std::to_string(r) + " assigned twice");
    }
  }
  for (int r : validation) {
    if (test.count(r)) {
      throw InvalidArgument("dataset split: region " + std::to_string(r) + " assigned twice");
    }
  }
}

ClassCounts SplitRecords::counts(std::span<const SegmentRecord> part) const {
  ClassCounts c;
  for (const auto& r : part) {
    (r.majority == ClassLabel::forest ? c.forest : c.non_forest) += 1;
  }
  return c;
}

SplitRecords split_records(std::span<const SegmentRecord> records, const DatasetSplit& split) {
  split.validate();
  SplitRecords out;
  for (const auto& r : records) {
    if (split.train.count(r.region_id)) {
      out.train.push_back(r);
    } else if (split.validation.count(r.region_id)) {
      out.validation.push_back(r);
    } else if (split.test.count(r.region_id)) {
      out.test.push_back(r);
    } else {
      throw UnassignedRegionError(r.region_id);
    }
  }
  return out;
}

std::vector<std::uint32_t> encode_runs(const SegmentRecord& record) {
  const BBox box = record.bbox();
  std::vector<bool> inside(static_cast<std::size_t>(box.width()) * box.height(), false);
  for (const auto& p : record.pixels) {
    inside[static_cast<std::size_t>(p.y - box.y0) * box.width() + (p.x - box.x0)] = true;
  }
  std::vector<std::uint32_t> runs;
  bool state = false;
  std::uint32_t len = 0;
  for (bool v : inside) {
    if (v != state) {
      runs.push_back(len);
      state = v;
      len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  return runs;
}

std::vector<Pixel> decode_runs(const BBox& box, std::span<const std::uint32_t> runs) {
  const std::size_t total = static_cast<std::size_t>(box.width()) * box.height();
  std::vector<Pixel> pixels;
  std::size_t pos = 0;
  bool state = false;
  for (auto len : runs) {
    if (pos + len > total) throw FormatError("run lengths overflow the bounding box");
    if (state) {
      for (std::size_t i = pos; i < pos + len; ++i) {
        pixels.push_back({box.x0 + static_cast<int>(i % box.width()),
                          box.y0 + static_cast<int>(i / box.width())});
      }
    }
    pos += len;
    state = !state;
  }
  if (pos != total) throw FormatError("run lengths do not cover the bounding box");
  return pixels;
}

void write_segments_jsonl(std::ostream& out, std::span<const SegmentRecord> records) {
  for (const auto& r : records) {
    const BBox b = r.bbox();
    json j = {{"region_id", r.region_id},
              {"segment_id", r.segment_id},
              {"area", r.area()},
              {"majority_label", to_string(r.majority)},
              {"hor", r.hor},
              {"bbox", {b.x0, b.y0, b.x1, b.y1}},
              {"pixel_run_lengths", encode_runs(r)}};
    out << j.dump() << '\n';
  }
}

std::vector<SegmentRecord> read_segments_jsonl(std::istream& in) {
  std::vector<SegmentRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      SegmentRecord r;
      r.region_id = j.at("region_id").get<int>();
      r.segment_id = j.at("segment_id").get<int>();
      r.majority = class_label_from_string(j.at("majority_label").get<std::string>());
      r.hor = j.at("hor").get<double>();
      const auto b = j.at("bbox").get<std::array<int, 4>>();
      const BBox box{b[0], b[1], b[2], b[3]};
      r.pixels = decode_runs(box, j.at("pixel_run_lengths").get<std::vector<std::uint32_t>>());
      if (r.pixels.size() != j.at("area").get<std::size_t>()) {
        throw FormatError("area does not match decoded pixel count");
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError("segments line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace bandsel::segset
