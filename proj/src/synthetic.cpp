#include "bandsel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace bandsel::synthetic {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticSpec::validate() const {
  if (width < 64 || height < 64) throw InvalidArgument("synthetic: size must be at least 64x64");
  if (regions < 1 || bands < 1) throw InvalidArgument("synthetic: need at least one region and band");
  if (signal_bands.empty()) throw InvalidArgument("synthetic: signal bands must be nonempty");
  for (int b : signal_bands) {
    if (b < 0 || b >= bands) throw InvalidArgument("synthetic: signal band out of range");
  }
  if (!(contrast >= 0.0 && contrast <= 1.0)) throw InvalidArgument("synthetic: contrast must lie in [0, 1]");
  if (blob_count < 0 || ignore_blobs < 0 || !(blob_radius > 0.0)) {
    throw InvalidArgument("synthetic: bad blob geometry");
  }
}

json to_json(const SyntheticSpec& s) {
  std::vector<std::string> names;
  for (int b : s.signal_bands) names.push_back(band_name(b));
  return {{"width", s.width},         {"height", s.height},
          {"regions", s.regions},     {"bands", s.bands},
          {"signal_bands", names},    {"contrast", s.contrast},
          {"blob_count", s.blob_count}, {"blob_radius", s.blob_radius},
          {"ignore_blobs", s.ignore_blobs}, {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  try {
    for (const auto& [key, _] : j.items()) {
      static const std::set<std::string> ok = {"width", "height", "regions", "bands", "signal_bands",
                                               "contrast", "blob_count", "blob_radius", "ignore_blobs",
                                               "seed"};
      if (!ok.count(key)) throw InvalidArgument("synthetic spec: unknown key '" + key + "'");
    }
    if (j.contains("width")) s.width = j.at("width").get<int>();
    if (j.contains("height")) s.height = j.at("height").get<int>();
    if (j.contains("regions")) s.regions = j.at("regions").get<int>();
    if (j.contains("bands")) s.bands = j.at("bands").get<int>();
    if (j.contains("signal_bands")) {
      s.signal_bands.clear();
      for (const auto& n : j.at("signal_bands").get<std::vector<std::string>>()) {
        const int b = band_index(n);
        if (b < 0) throw InvalidArgument("synthetic spec: bad band name " + n);
        s.signal_bands.push_back(b);
      }
    }
    if (j.contains("contrast")) s.contrast = j.at("contrast").get<double>();
    if (j.contains("blob_count")) s.blob_count = j.at("blob_count").get<int>();
    if (j.contains("blob_radius")) s.blob_radius = j.at("blob_radius").get<double>();
    if (j.contains("ignore_blobs")) s.ignore_blobs = j.at("ignore_blobs").get<int>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

// Separable box blur with clamped borders.
std::vector<double> box_blur(const std::vector<double>& in, int w, int h, int radius) {
  std::vector<double> tmp(in.size()), out(in.size());
  const double norm = 1.0 / (2 * radius + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += in[static_cast<std::size_t>(y) * w + std::clamp(x + d, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += tmp[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  }
  return out;
}

void standardize(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

std::vector<double> white(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

// Zero-mean, unit-variance noise smoothed at the given radius (two passes).
std::vector<double> smooth(Rng& rng, int w, int h, int radius) {
  auto v = box_blur(box_blur(white(rng, static_cast<std::size_t>(w) * h), w, h, radius), w, h, radius);
  standardize(v);
  return v;
}

}  // namespace

Region generate_region(const SyntheticSpec& spec, int region_id) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(region_id)));

  raster::LabelMask mask{w, h, std::vector<std::uint8_t>(n, raster::kForest)};
  auto paint = [&](std::uint8_t value, double radius_scale) {
    const double cx = uniform01(rng) * w, cy = uniform01(rng) * h;
    const double r = spec.blob_radius * radius_scale * (0.6 + 0.8 * uniform01(rng));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
          mask.labels[static_cast<std::size_t>(y) * w + x] = value;
        }
      }
    }
  };
  for (int i = 0; i < spec.blob_count; ++i) paint(raster::kNonForest, 1.0);
  for (int i = 0; i < spec.ignore_blobs; ++i) paint(raster::kIgnore, 0.4);

  std::vector<bool> is_signal(static_cast<std::size_t>(spec.bands), false);
  for (int b : spec.signal_bands) is_signal[static_cast<std::size_t>(b)] = true;

  std::vector<std::string> names;
  std::vector<float> data;
  data.reserve(n * static_cast<std::size_t>(spec.bands));
  for (int b = 0; b < spec.bands; ++b) {
    names.push_back(band_name(b));
    const double base = 0.3 + 0.05 * b;
    const auto drift = smooth(rng, w, h, 24);
    const auto coarse = smooth(rng, w, h, 2);
    const auto fine = white(rng, n);
    for (std::size_t p = 0; p < n; ++p) {
      const bool positive = is_signal[static_cast<std::size_t>(b)] && mask.labels[p] == raster::kNonForest;
      const double share = std::clamp(0.35 + 0.15 * drift[p] + (positive ? spec.contrast : 0.0), 0.0, 1.0);
      const double texture = share * fine[p] + (1.0 - share) * coarse[p];
      const double value = base + (positive ? 0.25 : 0.0) + 0.05 * texture;
      data.push_back(static_cast<float>(value));
    }
  }
  return {region_id, raster::MultibandRaster(w, h, std::move(names), std::move(data)), std::move(mask)};
}

void synthesize(const SyntheticSpec& spec, const fs::path& root) {
  spec.validate();
  fs::create_directories(root);
  for (int r = 1; r <= spec.regions; ++r) {
    const Region region = generate_region(spec, r);
    const fs::path dir = root / ("region_" + std::to_string(r));
    raster::save_raster(region.raster, dir / "raster");
    raster::save_mask(region.mask, dir / "mask.pgm");
  }
  std::ofstream out(root / "synthetic_spec.json");
  if (!out) throw IoError("cannot write " + (root / "synthetic_spec.json").string());
  out << to_json(spec).dump(2) << '\n';
}

}  // namespace bandsel::synthetic
