#include "bandsel/texture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace bandsel::texture {

using raster::MultibandRaster;
using segset::SegmentRecord;

const std::array<const char*, kHaralickCount> kHaralickNames = {
    "asm",          "contrast",           "correlation",        "sum_of_squares",
    "idm",          "sum_average",        "sum_variance",       "sum_entropy",
    "entropy",      "difference_variance", "difference_entropy", "imc1",
    "imc2"};

std::array<int, 2> offset(Direction dir, int distance) {
  switch (dir) {
    case Direction::deg0: return {distance, 0};
    case Direction::deg45: return {distance, -distance};
    case Direction::deg90: return {0, -distance};
    case Direction::deg135: return {-distance, -distance};
  }
  throw InvalidArgument("unknown direction");
}

QuantizedPatch quantize(std::span<const float> plane, int plane_width,
                        std::span<const segset::Pixel> pixels, int levels) {
  if (levels < 2) throw InvalidArgument("quantize: need at least 2 levels");
  if (pixels.empty()) throw InvalidArgument("quantize: empty segment");
  int x0 = pixels[0].x, y0 = pixels[0].y, x1 = x0, y1 = y0;
  double lo = plane[static_cast<std::size_t>(y0) * plane_width + x0], hi = lo;
  for (const auto& p : pixels) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
    const double v = plane[static_cast<std::size_t>(p.y) * plane_width + p.x];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  QuantizedPatch q;
  q.width = x1 - x0 + 1;
  q.height = y1 - y0 + 1;
  q.levels = levels;
  q.data.assign(static_cast<std::size_t>(q.width) * q.height, -1);
  const double range = hi - lo;
  const double scale = range > 0.0 ? levels / range : 0.0;
  for (const auto& p : pixels) {
    const double v = plane[static_cast<std::size_t>(p.y) * plane_width + p.x];
    const int level = std::clamp(static_cast<int>(std::floor((v - lo) * scale)), 0, levels - 1);
    q.data[static_cast<std::size_t>(p.y - y0) * q.width + (p.x - x0)] = level;
  }
  return q;
}

std::optional<Glcm> glcm(const QuantizedPatch& patch, Direction dir, int distance) {
  const auto [dx, dy] = offset(dir, distance);
  const int g = patch.levels;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(g) * g, 0);
  std::uint64_t total = 0;
  for (int y = 0; y < patch.height; ++y) {
    const int ny = y + dy;
    if (ny < 0 || ny >= patch.height) continue;
    for (int x = 0; x < patch.width; ++x) {
      const int nx = x + dx;
      if (nx < 0 || nx >= patch.width) continue;
      const int i = patch.at(x, y);
      const int j = patch.at(nx, ny);
      if (i < 0 || j < 0) continue;
      ++counts[static_cast<std::size_t>(i) * g + j];
      ++counts[static_cast<std::size_t>(j) * g + i];
      total += 2;
    }
  }
  if (total == 0) return std::nullopt;
  Glcm out;
  out.levels = g;
  out.direction = dir;
  out.distance = distance;
  out.p.resize(counts.size());
  const double inv = 1.0 / static_cast<double>(total);
  for (std::size_t k = 0; k < counts.size(); ++k) out.p[k] = static_cast<double>(counts[k]) * inv;
  return out;
}

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

HaralickFeatures haralick13(const Glcm& glcm) {
  const int g = glcm.levels;
  const auto gs = static_cast<std::size_t>(g);
  std::vector<double> px(gs, 0.0), py(gs, 0.0), psum(2 * gs - 1, 0.0), pdiff(gs, 0.0);
  double asm_ = 0.0, idm = 0.0, hxy = 0.0, sum_ij = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double p = glcm.at(i, j);
      if (p == 0.0) continue;
      px[static_cast<std::size_t>(i)] += p;
      py[static_cast<std::size_t>(j)] += p;
      psum[static_cast<std::size_t>(i + j)] += p;
      pdiff[static_cast<std::size_t>(std::abs(i - j))] += p;
      asm_ += p * p;
      idm += p / (1.0 + static_cast<double>((i - j) * (i - j)));
      hxy -= plogp(p);
      sum_ij += static_cast<double>(i + 1) * static_cast<double>(j + 1) * p;
    }
  }

  double mux = 0.0, muy = 0.0;
  for (int i = 0; i < g; ++i) {
    mux += (i + 1) * px[static_cast<std::size_t>(i)];
    muy += (i + 1) * py[static_cast<std::size_t>(i)];
  }
  double varx = 0.0, vary = 0.0, hx = 0.0, hy = 0.0;
  for (int i = 0; i < g; ++i) {
    varx += (i + 1 - mux) * (i + 1 - mux) * px[static_cast<std::size_t>(i)];
    vary += (i + 1 - muy) * (i + 1 - muy) * py[static_cast<std::size_t>(i)];
    hx -= plogp(px[static_cast<std::size_t>(i)]);
    hy -= plogp(py[static_cast<std::size_t>(i)]);
  }
  const double correlation =
      varx > 0.0 && vary > 0.0 ? (sum_ij - mux * muy) / std::sqrt(varx * vary) : 0.0;

  double sum_avg = 0.0, sum_ent = 0.0;
  for (std::size_t k = 0; k < psum.size(); ++k) {
    sum_avg += static_cast<double>(k + 2) * psum[k];
    sum_ent -= plogp(psum[k]);
  }
  double sum_var = 0.0;
  for (std::size_t k = 0; k < psum.size(); ++k) {
    const double d = static_cast<double>(k + 2) - sum_avg;
    sum_var += d * d * psum[k];
  }

  double contrast = 0.0, diff_mean = 0.0, diff_ent = 0.0;
  for (std::size_t d = 0; d < pdiff.size(); ++d) {
    contrast += static_cast<double>(d * d) * pdiff[d];
    diff_mean += static_cast<double>(d) * pdiff[d];
    diff_ent -= plogp(pdiff[d]);
  }
  double diff_var = 0.0;
  for (std::size_t d = 0; d < pdiff.size(); ++d) {
    const double e = static_cast<double>(d) - diff_mean;
    diff_var += e * e * pdiff[d];
  }

  std::vector<double> lpx(gs, 0.0), lpy(gs, 0.0);
  for (std::size_t i = 0; i < gs; ++i) {
    if (px[i] > 0.0) lpx[i] = std::log2(px[i]);
    if (py[i] > 0.0) lpy[i] = std::log2(py[i]);
  }
  double hxy1 = 0.0, hxy2 = 0.0;
  for (int i = 0; i < g; ++i) {
    const double pi = px[static_cast<std::size_t>(i)];
    if (pi == 0.0) continue;
    for (int j = 0; j < g; ++j) {
      const double pj = py[static_cast<std::size_t>(j)];
      if (pj == 0.0) continue;
      const double lq = lpx[static_cast<std::size_t>(i)] + lpy[static_cast<std::size_t>(j)];
      hxy1 -= glcm.at(i, j) * lq;
      hxy2 -= pi * pj * lq;
    }
  }
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0.0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp2(-2.0 * (hxy2 - hxy))));

  return {asm_,    contrast, correlation, varx,     idm,      sum_avg, sum_var,
          sum_ent, hxy,      diff_var,    diff_ent, imc1,     imc2};
}

std::vector<double> segment_features(const MultibandRaster& raster, const SegmentRecord& seg,
                                     const TextureConfig& cfg) {
  const int dim = cfg.block_dim();
  std::vector<double> out(static_cast<std::size_t>(raster.bands()) * dim, 0.0);
  for (const auto& p : seg.pixels) {
    if (p.x < 0 || p.y < 0 || p.x >= raster.width() || p.y >= raster.height()) {
      throw InvalidArgument("segment " + std::to_string(seg.segment_id) +
                            " has pixels outside the raster");
    }
  }
  for (int b = 0; b < raster.bands(); ++b) {
    const auto patch = quantize(raster.band(b), raster.width(), seg.pixels, cfg.levels);
    double* block = out.data() + static_cast<std::size_t>(b) * dim;
    int with_pairs = 0;
    for (Direction dir : kDirections) {
      const auto m = glcm(patch, dir);
      if (!m) continue;
      const auto f = haralick13(*m);
      ++with_pairs;
      for (int k = 0; k < kHaralickCount; ++k) {
        if (cfg.direction_mean) {
          block[k] += f[static_cast<std::size_t>(k)];
        } else {
          block[static_cast<int>(dir) * kHaralickCount + k] = f[static_cast<std::size_t>(k)];
        }
      }
    }
    if (cfg.direction_mean && with_pairs > 0) {
      for (int k = 0; k < kHaralickCount; ++k) block[k] /= with_pairs;
    }
  }
  return out;
}

int FeatureTable::channel_index(std::string_view name) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c] == name) return static_cast<int>(c);
  }
  throw InvalidArgument("feature table has no channel '" + std::string(name) + "'");
}

std::span<const double> FeatureTable::block(std::size_t row, int channel) const {
  return std::span<const double>(rows[row].values)
      .subspan(static_cast<std::size_t>(channel) * block_dim, static_cast<std::size_t>(block_dim));
}

FeatureTable FeatureTable::subset(const std::set<int>& regions) const {
  FeatureTable out{channels, block_dim, {}};
  for (const auto& r : rows) {
    if (regions.count(r.region_id)) out.rows.push_back(r);
  }
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (rows.empty() && channels.empty()) {
    channels = other.channels;
    block_dim = other.block_dim;
  } else if (channels != other.channels || block_dim != other.block_dim) {
    throw InvalidArgument("cannot append feature tables with different layouts");
  }
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

FeatureTable extract_features(const MultibandRaster& raster, std::span<const SegmentRecord> segments,
                              const TextureConfig& cfg, Execution exec) {
  if (cfg.levels < 2) throw InvalidArgument("texture: levels must be >= 2");
  FeatureTable table;
  table.channels = raster.band_names();
  table.block_dim = cfg.block_dim();
  table.rows.resize(segments.size());
  const auto n = static_cast<std::ptrdiff_t>(segments.size());
  auto fill = [&](std::ptrdiff_t i) {
    const auto& seg = segments[static_cast<std::size_t>(i)];
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.region_id = seg.region_id;
    row.segment_id = seg.segment_id;
    row.label = seg.majority;
    row.values = segment_features(raster, seg, cfg);
  };
  if (exec == Execution::parallel) {
    // Exceptions must not escape an OpenMP region.
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        fill(i);
      } catch (...) {
#pragma omp critical(bandsel_texture_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) fill(i);
  }
  return table;
}

void write_features_jsonl(std::ostream& out, const FeatureTable& table) {
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    nlohmann::ordered_json features = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < table.channels.size(); ++c) {
      const auto blk = table.block(r, static_cast<int>(c));
      features[table.channels[c]] = std::vector<double>(blk.begin(), blk.end());
    }
    nlohmann::ordered_json j;
    j["segment_id"] = row.segment_id;
    j["region_id"] = row.region_id;
    j["label"] = segset::to_string(row.label);
    j["features"] = std::move(features);
    out << j.dump() << '\n';
  }
}

FeatureTable read_features_jsonl(std::istream& in) {
  FeatureTable table;
  table.block_dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::ordered_json::parse(line);
      FeatureRow row;
      row.segment_id = j.at("segment_id").get<int>();
      row.region_id = j.at("region_id").get<int>();
      row.label = segset::class_label_from_string(j.at("label").get<std::string>());
      std::vector<std::string> channels;
      for (const auto& [name, values] : j.at("features").items()) {
        channels.push_back(name);
        const auto v = values.get<std::vector<double>>();
        if (table.block_dim == 0) table.block_dim = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != table.block_dim) {
          throw FormatError("channel " + name + " has " + std::to_string(v.size()) + " values");
        }
        row.values.insert(row.values.end(), v.begin(), v.end());
      }
      if (table.channels.empty()) table.channels = channels;
      if (channels != table.channels) throw FormatError("channel list differs from first row");
      table.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw FormatError("features line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (table.block_dim == 0) table.block_dim = 4 * kHaralickCount;
  return table;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError(path.string() + ": truncated at byte " + std::to_string(in.tellg()));
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

void write_features_binary(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("BSFT", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(table.rows.size()));
  put_u32(out, static_cast<std::uint32_t>(table.channels.size()));
  put_u32(out, static_cast<std::uint32_t>(table.block_dim));
  for (const auto& c : table.channels) {
    put_u32(out, static_cast<std::uint32_t>(c.size()));
    out.write(c.data(), static_cast<std::streamsize>(c.size()));
  }
  for (const auto& row : table.rows) {
    put_u32(out, static_cast<std::uint32_t>(row.region_id));
    put_u32(out, static_cast<std::uint32_t>(row.segment_id));
    put_u32(out, static_cast<std::uint32_t>(row.label));
    for (double v : row.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

FeatureTable read_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string_view(magic, 4) != "BSFT") {
    throw FormatError(path.string() + ": bad magic");
  }
  if (get_u32(in, path) != 1) throw FormatError(path.string() + ": unsupported version");
  const auto n_rows = get_u32(in, path);
  const auto n_channels = get_u32(in, path);
  FeatureTable table;
  table.block_dim = static_cast<int>(get_u32(in, path));
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    std::string name(get_u32(in, path), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    table.channels.push_back(std::move(name));
  }
  const std::size_t width = static_cast<std::size_t>(n_channels) * table.block_dim;
  for (std::uint32_t r = 0; r < n_rows; ++r) {
    FeatureRow row;
    row.region_id = static_cast<int>(get_u32(in, path));
    row.segment_id = static_cast<int>(get_u32(in, path));
    const auto label = get_u32(in, path);
    if (label > 1) throw FormatError(path.string() + ": bad label in row " + std::to_string(r));
    row.label = static_cast<segset::ClassLabel>(label);
    row.values.resize(width);
    for (auto& v : row.values) v = std::bit_cast<float>(get_u32(in, path));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace bandsel::texture
