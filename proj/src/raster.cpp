#include "bandsel/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace bandsel::raster {

namespace fs = std::filesystem;
using nlohmann::json;

MultibandRaster::MultibandRaster(int width, int height, std::vector<std::string> band_names,
                                 std::vector<float> data)
    : width_(width), height_(height), band_names_(std::move(band_names)), data_(std::move(data)) {
  if (width_ <= 0 || height_ <= 0) throw InvalidArgument("raster dimensions must be positive");
  if (band_names_.empty()) throw InvalidArgument("raster needs at least one band");
  const std::size_t expected = band_names_.size() * pixel_count();
  if (data_.size() != expected) {
    throw InvalidArgument("raster data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(band_names_.size()) + "x" +
                          std::to_string(width_) + "x" + std::to_string(height_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw InvalidArgument("non-finite raster value at band " +
                            std::to_string(i / pixel_count() + 1) + ", pixel " +
                            std::to_string(i % pixel_count()));
    }
  }
}

std::span<const float> MultibandRaster::band(int b) const {
  if (b < 0 || b >= bands()) throw InvalidArgument("band index out of range: " + std::to_string(b));
  return std::span<const float>(data_).subspan(static_cast<std::size_t>(b) * pixel_count(),
                                               pixel_count());
}

MissingBandError::MissingBandError(int band)
    : FormatError("MissingBand(" + std::to_string(band) + ")"), band_(band) {}

namespace {

std::vector<float> read_plane(const fs::path& file, std::size_t count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw FormatError(file.string() + ": expected " + std::to_string(bytes.size()) +
                      " bytes, got " + std::to_string(in.gcount()));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(file.string() + ": trailing bytes after " + std::to_string(bytes.size()));
  }
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i])) {
      throw FormatError(file.string() + ": non-finite value at byte offset " +
                        std::to_string(4 * i));
    }
  }
  return out;
}

void write_plane(const fs::path& file, std::span<const float> values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    bytes[4 * i] = static_cast<unsigned char>(bits);
    bytes[4 * i + 1] = static_cast<unsigned char>(bits >> 8);
    bytes[4 * i + 2] = static_cast<unsigned char>(bits >> 16);
    bytes[4 * i + 3] = static_cast<unsigned char>(bits >> 24);
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + file.string());
}

}  // namespace

MultibandRaster load_raster(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw IoError("missing raster metadata " + meta_path.string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  int width = 0, height = 0, bands = 0;
  std::vector<std::string> names;
  try {
    width = meta.at("width").get<int>();
    height = meta.at("height").get<int>();
    bands = meta.at("bands").get<int>();
    names = meta.at("band_names").get<std::vector<std::string>>();
    if (meta.at("dtype").get<std::string>() != "f32le") {
      throw FormatError(meta_path.string() + ": unsupported dtype " + meta.at("dtype").dump());
    }
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  if (width <= 0 || height <= 0 || bands <= 0) {
    throw FormatError(meta_path.string() + ": dimensions must be positive");
  }
  if (static_cast<int>(names.size()) != bands) {
    throw FormatError(meta_path.string() + ": band_names has " + std::to_string(names.size()) +
                      " entries for " + std::to_string(bands) + " bands");
  }
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<float> data;
  data.reserve(n * static_cast<std::size_t>(bands));
  for (int b = 1; b <= bands; ++b) {
    const fs::path plane = dir / ("band_" + std::to_string(b) + ".f32");
    if (!fs::exists(plane)) throw MissingBandError(b);
    const auto values = read_plane(plane, n);
    data.insert(data.end(), values.begin(), values.end());
  }
  return MultibandRaster(width, height, std::move(names), std::move(data));
}

void save_raster(const MultibandRaster& raster, const fs::path& dir) {
  fs::create_directories(dir);
  json meta = {{"width", raster.width()},
               {"height", raster.height()},
               {"bands", raster.bands()},
               {"band_names", raster.band_names()},
               {"dtype", "f32le"}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
  for (int b = 0; b < raster.bands(); ++b) {
    write_plane(dir / ("band_" + std::to_string(b + 1) + ".f32"), raster.band(b));
  }
}

MultibandRaster select_bands(const MultibandRaster& raster, std::span<const int> idx) {
  if (idx.empty()) throw InvalidArgument("select_bands needs at least one index");
  std::vector<std::string> names;
  std::vector<float> data;
  data.reserve(idx.size() * raster.pixel_count());
  for (int i : idx) {
    if (i < 0 || i >= raster.bands()) {
      throw InvalidArgument("band index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(raster.bands()) + ")");
    }
    names.push_back(raster.band_names()[static_cast<std::size_t>(i)]);
    const auto plane = raster.band(i);
    data.insert(data.end(), plane.begin(), plane.end());
  }
  return MultibandRaster(raster.width(), raster.height(), std::move(names), std::move(data));
}

MultibandRaster stack(const MultibandRaster& a, const MultibandRaster& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("cannot stack rasters of different dimensions");
  }
  auto names = a.band_names();
  names.insert(names.end(), b.band_names().begin(), b.band_names().end());
  std::vector<float> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return MultibandRaster(a.width(), a.height(), std::move(names), std::move(data));
}

namespace {

std::vector<float> rescale_plane(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<float> out(values.size(), 0.0f);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = static_cast<float>((values[i] - *lo) / range);
    }
  }
  return out;
}

}  // namespace

MultibandRaster rescale_minmax(const MultibandRaster& raster) {
  std::vector<float> data;
  data.reserve(raster.data().size());
  for (int b = 0; b < raster.bands(); ++b) {
    const auto plane = raster.band(b);
    const std::vector<double> values(plane.begin(), plane.end());
    const auto scaled = rescale_plane(values);
    data.insert(data.end(), scaled.begin(), scaled.end());
  }
  return MultibandRaster(raster.width(), raster.height(), raster.band_names(), std::move(data));
}

double PcaModel::explained_variance_ratio(int c) const {
  double total = 0.0;
  for (double v : eigenvalues) total += std::max(v, 0.0);
  return total > 0.0 ? std::max(eigenvalues[static_cast<std::size_t>(c)], 0.0) / total : 0.0;
}

int PcaModel::rank() const {
  if (eigenvalues.empty() || eigenvalues.front() <= 0.0) return 0;
  const double tol = eigenvalues.front() * 1e-10 * static_cast<double>(eigenvalues.size());
  int r = 0;
  for (double v : eigenvalues) {
    if (v > tol) ++r;
  }
  return r;
}

PcaModel fit_pca(const MultibandRaster& raster) {
  const int nb = raster.bands();
  const std::size_t n = raster.pixel_count();
  PcaModel model;
  model.mean.assign(static_cast<std::size_t>(nb), 0.0);
  for (int b = 0; b < nb; ++b) {
    double s = 0.0;
    for (float v : raster.band(b)) s += v;
    model.mean[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(nb, nb);
  std::vector<std::span<const float>> planes;
  for (int b = 0; b < nb; ++b) planes.push_back(raster.band(b));
  std::vector<double> centered(static_cast<std::size_t>(nb));
  for (std::size_t p = 0; p < n; ++p) {
    for (int b = 0; b < nb; ++b) {
      centered[static_cast<std::size_t>(b)] =
          planes[static_cast<std::size_t>(b)][p] - model.mean[static_cast<std::size_t>(b)];
    }
    for (int i = 0; i < nb; ++i) {
      for (int j = i; j < nb; ++j) {
        cov(i, j) += centered[static_cast<std::size_t>(i)] * centered[static_cast<std::size_t>(j)];
      }
    }
  }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (int i = 0; i < nb; ++i) {
    for (int j = i; j < nb; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  }
  if (cov.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateCovarianceError("degenerate covariance: all pixel vectors are identical");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  for (int c = nb - 1; c >= 0; --c) {
    model.eigenvalues.push_back(std::max(solver.eigenvalues()(c), 0.0));
    std::vector<double> v(static_cast<std::size_t>(nb));
    int arg = 0;
    for (int b = 0; b < nb; ++b) {
      v[static_cast<std::size_t>(b)] = solver.eigenvectors()(b, c);
      if (std::abs(v[static_cast<std::size_t>(b)]) >
          std::abs(v[static_cast<std::size_t>(arg)]) + 1e-12) {
        arg = b;
      }
    }
    if (v[static_cast<std::size_t>(arg)] < 0.0) {
      for (double& x : v) x = -x;
    }
    model.components.push_back(std::move(v));
  }
  return model;
}

std::vector<double> pca_scores(const MultibandRaster& raster, const PcaModel& model, int n) {
  const std::size_t np = raster.pixel_count();
  std::vector<double> scores(static_cast<std::size_t>(n) * np, 0.0);
  for (int c = 0; c < n; ++c) {
    const auto& w = model.components[static_cast<std::size_t>(c)];
    double* out = scores.data() + static_cast<std::size_t>(c) * np;
    for (int b = 0; b < raster.bands(); ++b) {
      const auto plane = raster.band(b);
      const double wb = w[static_cast<std::size_t>(b)];
      const double mb = model.mean[static_cast<std::size_t>(b)];
      for (std::size_t p = 0; p < np; ++p) out[p] += wb * (plane[p] - mb);
    }
  }
  return scores;
}

MultibandRaster pca_composite(const MultibandRaster& raster, int n) {
  if (n < 1 || n > raster.bands()) {
    throw InvalidArgument("pca_composite: requested " + std::to_string(n) +
                          " components from " + std::to_string(raster.bands()) + " bands");
  }
  const PcaModel model = fit_pca(raster);
  if (n > model.rank()) {
    throw DegenerateCovarianceError("pca_composite: component " + std::to_string(model.rank() + 1) +
                                    " lies beyond the covariance rank " +
                                    std::to_string(model.rank()));
  }
  const auto scores = pca_scores(raster, model, n);
  const std::size_t np = raster.pixel_count();
  std::vector<std::string> names;
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(n) * np);
  for (int c = 0; c < n; ++c) {
    names.push_back("PC" + std::to_string(c + 1));
    const auto scaled = rescale_plane(
        std::span<const double>(scores).subspan(static_cast<std::size_t>(c) * np, np));
    data.insert(data.end(), scaled.begin(), scaled.end());
  }
  return MultibandRaster(raster.width(), raster.height(), std::move(names), std::move(data));
}

MultibandRaster ndvi(const MultibandRaster& raster, int nir, int red) {
  if (nir == red) throw InvalidArgument("ndvi: NIR and RED bands must differ");
  if (nir < 0 || nir >= raster.bands() || red < 0 || red >= raster.bands()) {
    throw InvalidArgument("ndvi: band index out of range");
  }
  const auto n = raster.band(nir);
  const auto r = raster.band(red);
  std::vector<float> out(raster.pixel_count());
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double sum = static_cast<double>(n[p]) + r[p];
    out[p] = sum == 0.0 ? 0.0f : static_cast<float>((static_cast<double>(n[p]) - r[p]) / sum);
  }
  return MultibandRaster(raster.width(), raster.height(), {"NDVI"}, std::move(out));
}

BandComposite make_composite(const MultibandRaster& raster, std::span<const std::string> channels,
                             const CompositeOptions& options) {
  if (channels.empty()) throw InvalidArgument("composite needs at least one channel");
  std::optional<MultibandRaster> pcs;
  std::optional<MultibandRaster> index;
  BandComposite out;
  for (const auto& tag : channels) {
    MultibandRaster channel;
    if (const int b = band_index(tag); b >= 0) {
      const int one[] = {b};
      channel = select_bands(raster, one);
    } else if (tag.rfind("PC", 0) == 0) {
      const int c = std::stoi(tag.substr(2)) - 1;
      if (c < 0 || c >= options.pca_components) {
        throw InvalidArgument("composite: unknown principal component " + tag);
      }
      if (!pcs) pcs = pca_composite(raster, options.pca_components);
      const int one[] = {c};
      channel = select_bands(*pcs, one);
    } else if (tag == "NDVI") {
      if (!index) index = rescale_minmax(ndvi(raster, options.nir, options.red));
      channel = *index;
    } else {
      throw InvalidArgument("composite: unknown channel tag " + tag);
    }
    out.raster = out.sources.empty() ? channel : stack(out.raster, channel);
    out.sources.push_back(tag);
  }
  return out;
}

}  // namespace bandsel::raster
