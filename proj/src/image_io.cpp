#include "bandsel/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace bandsel::raster {

namespace fs = std::filesystem;

void LabelMask::validate() const {
  if (width <= 0 || height <= 0) throw FormatError("mask dimensions must be positive");
  if (labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("mask has " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = labels[i];
    if (v != kForest && v != kNonForest && v != kIgnore) {
      throw FormatError("mask value " + std::to_string(v) + " at pixel " + std::to_string(i) +
                        " is not one of {0, 1, 255}");
    }
  }
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int header_int(std::istream& in, const fs::path& path) {
  const std::string token = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed header token '" + token + "'");
  }
}

}  // namespace

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  GrayImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  const int maxval = header_int(in, path);
  if (img.width <= 0 || img.height <= 0) throw FormatError(path.string() + ": bad dimensions");
  if (maxval != 255) throw FormatError(path.string() + ": maxval must be 255");
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw FormatError(path.string() + ": truncated pixel data at byte " +
                      std::to_string(in.gcount()));
  }
  return img;
}

void write_pgm(const fs::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("write_pgm: pixel count does not match dimensions");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_ppm(const fs::path& path, int width, int height,
               std::span<const std::array<std::uint8_t, 3>> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("write_ppm: pixel count does not match dimensions");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size() * 3));
}

LabelMask load_mask(const fs::path& path) {
  GrayImage img = read_pgm(path);
  LabelMask mask{img.width, img.height, std::move(img.pixels)};
  try {
    mask.validate();
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return mask;
}

void save_mask(const LabelMask& mask, const fs::path& path) {
  mask.validate();
  write_pgm(path, mask.width, mask.height, mask.labels);
}

void export_band_pgm(const MultibandRaster& raster, int band, const fs::path& path) {
  const auto plane = raster.band(band);
  const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
  const double range = static_cast<double>(*hi) - *lo;
  std::vector<std::uint8_t> px(plane.size(), 0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < plane.size(); ++i) {
      px[i] = static_cast<std::uint8_t>(std::lround(255.0 * (plane[i] - *lo) / range));
    }
  }
  write_pgm(path, raster.width(), raster.height(), px);
}

}  // namespace bandsel::raster
