#include <doctest.h>

#include <fstream>
#include <iterator>

#include "bandsel/synthetic.hpp"
#include "bandsel/texture.hpp"
#include "test_util.hpp"

using namespace bandsel;
using namespace bandsel::synthetic;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct WindowStats {
  std::vector<double> forest, non_forest;
};

// GLCM contrast at 0 degrees of every 12x12 window lying fully inside one class.
WindowStats window_contrast(const Region& r, int band) {
  WindowStats s;
  const int w = 12;
  for (int y0 = 0; y0 + w <= r.mask.height; y0 += w) {
    for (int x0 = 0; x0 + w <= r.mask.width; x0 += w) {
      const auto first = r.mask.at(x0, y0);
      if (first == raster::kIgnore) continue;
      std::vector<segset::Pixel> px;
      bool pure = true;
      for (int y = y0; y < y0 + w; ++y)
        for (int x = x0; x < x0 + w; ++x) {
          pure = pure && r.mask.at(x, y) == first;
          px.push_back({x, y});
        }
      if (!pure) continue;
      const auto q = texture::quantize(r.raster.band(band), r.raster.width(), px, 16);
      const double c = texture::haralick13(*texture::glcm(q, texture::Direction::deg0))[1];
      (first == raster::kForest ? s.forest : s.non_forest).push_back(c);
    }
  }
  return s;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  auto var = [](const std::vector<double>& v, double m) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
  };
  const double ma = mean(a), mb = mean(b);
  return (ma - mb) / std::sqrt(var(a, ma) / a.size() + var(b, mb) / b.size());
}

}  // namespace

TEST_CASE("spec validation and JSON") {
  SyntheticSpec s;
  s.width = 32;
  CHECK_THROWS(s.validate());
  s = SyntheticSpec{};
  s.signal_bands.clear();
  CHECK_THROWS(s.validate());
  s = SyntheticSpec{};
  s.seed = 99;
  CHECK(to_json(spec_from_json(to_json(s))) == to_json(s));
  CHECK_THROWS(spec_from_json(nlohmann::json{{"colour", 1}}));
}

TEST_CASE("zero blobs give an all-forest mask") {
  SyntheticSpec s;
  s.width = s.height = 64;
  s.blob_count = 0;
  s.ignore_blobs = 0;
  const auto r = generate_region(s, 1);
  for (auto v : r.mask.labels) CHECK(v == raster::kForest);
}

TEST_CASE("same seed writes a byte-identical corpus") {
  SyntheticSpec s;
  s.width = s.height = 64;
  s.regions = 2;
  testutil::TempDir a("syn_a"), b("syn_b");
  synthesize(s, a.path());
  synthesize(s, b.path());
  for (const char* f : {"region_1/mask.pgm", "region_2/raster/band_3.f32", "region_2/raster/meta.json",
                        "synthetic_spec.json"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  s.seed = 2;
  testutil::TempDir c("syn_c");
  synthesize(s, c.path());
  CHECK(slurp(a / "region_1/raster/band_1.f32") != slurp(c / "region_1/raster/band_1.f32"));
}

TEST_CASE("only signal bands carry class-dependent texture") {
  SyntheticSpec s;
  s.width = s.height = 128;
  s.regions = 2;
  s.signal_bands = {3};
  WindowStats b4, b2;
  for (int id = 1; id <= 2; ++id) {
    const auto r = generate_region(s, id);
    auto w4 = window_contrast(r, 3), w2 = window_contrast(r, 1);
    b4.forest.insert(b4.forest.end(), w4.forest.begin(), w4.forest.end());
    b4.non_forest.insert(b4.non_forest.end(), w4.non_forest.begin(), w4.non_forest.end());
    b2.forest.insert(b2.forest.end(), w2.forest.begin(), w2.forest.end());
    b2.non_forest.insert(b2.non_forest.end(), w2.non_forest.begin(), w2.non_forest.end());
  }
  REQUIRE(b4.forest.size() > 10);
  REQUIRE(b4.non_forest.size() > 10);
  const double rel = (mean(b4.non_forest) - mean(b4.forest)) / mean(b4.forest);
  CHECK(rel >= s.contrast);
  CHECK(std::abs(welch_t(b2.non_forest, b2.forest)) < 3.0);
}
