#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bandsel/common.hpp"

namespace bandsel::raster {

/// B-band float image stored band-major; each band is row-major.
class MultibandRaster {
 public:
  MultibandRaster() = default;

  /// Validates that data length equals bands * width * height, band_names
  /// has one entry per band and every value is finite.
  MultibandRaster(int width, int height, std::vector<std::string> band_names,
                  std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int bands() const { return static_cast<int>(band_names_.size()); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  const std::vector<std::string>& band_names() const { return band_names_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> band(int b) const;
  float at(int b, int x, int y) const {
    return data_[static_cast<std::size_t>(b) * pixel_count() +
                 static_cast<std::size_t>(y) * width_ + x];
  }

  bool operator==(const MultibandRaster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::string> band_names_;
  std::vector<float> data_;
};

class MissingBandError : public FormatError {
 public:
  explicit MissingBandError(int band);
  int band() const { return band_; }

 private:
  int band_;
};

class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

/// Reads a raster directory: meta.json plus band_<i>.f32 (i = 1..bands),
/// raw little-endian float32, row-major.
MultibandRaster load_raster(const std::filesystem::path& dir);
void save_raster(const MultibandRaster& raster, const std::filesystem::path& dir);

/// Output band i is input band idx[i].
MultibandRaster select_bands(const MultibandRaster& raster, std::span<const int> idx);

/// Stacks the bands of b after those of a. Dimensions must agree.
MultibandRaster stack(const MultibandRaster& a, const MultibandRaster& b);

/// Per-band linear rescale to [0, 1]. Constant bands map to 0.
MultibandRaster rescale_minmax(const MultibandRaster& raster);

/// Principal axes of the pixelwise band covariance.
struct PcaModel {
  std::vector<double> mean;         // per band
  std::vector<double> eigenvalues;  // descending
  // components[c][b]: loading of band b in component c. Each component is
  // sign-normalized so its largest-magnitude loading is positive.
  std::vector<std::vector<double>> components;

  double explained_variance_ratio(int c) const;
  /// Index of the last component whose eigenvalue is distinguishable from 0.
  int rank() const;
};

PcaModel fit_pca(const MultibandRaster& raster);

/// Raw projections of every pixel onto the first n components (double
/// precision, band-major, not rescaled).
std::vector<double> pca_scores(const MultibandRaster& raster, const PcaModel& model, int n);

/// n-band composite of principal component projections, each rescaled to
/// [0, 1]. Bands are named PC1..PCn. Throws DegenerateCovarianceError when the
/// covariance is zero or a requested component lies beyond the covariance rank.
MultibandRaster pca_composite(const MultibandRaster& raster, int n);

/// (NIR - RED) / (NIR + RED) per pixel; pixels with NIR + RED == 0 map to 0.
MultibandRaster ndvi(const MultibandRaster& raster, int nir, int red);

/// An ordered stack of source bands and derived channels.
struct BandComposite {
  std::vector<std::string> sources;
  MultibandRaster raster;
};

struct CompositeOptions {
  int nir = 4;  // B5
  int red = 3;  // B4
  int pca_components = 3;
};

/// Resolves channel tags ("B4", "PC2", "NDVI") against a source raster. PCs
/// and NDVI are recomputed from the source and rescaled to [0, 1].
BandComposite make_composite(const MultibandRaster& raster,
                             std::span<const std::string> channels,
                             const CompositeOptions& options = {});

}  // namespace bandsel::raster
