#include <doctest.h>

#include <cmath>
#include <fstream>

#include "bandsel/image_io.hpp"
#include "bandsel/raster.hpp"
#include "test_util.hpp"

using namespace bandsel;
using namespace bandsel::raster;

namespace {

MultibandRaster random_raster(int w, int h, int bands, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (int b = 0; b < bands; ++b) names.push_back(band_name(b));
  std::vector<float> data(static_cast<std::size_t>(w * h * bands));
  for (auto& v : data) v = static_cast<float>(uniform01(rng));
  return MultibandRaster(w, h, names, data);
}

}  // namespace

TEST_CASE("raster construction validates") {
  CHECK_THROWS_AS(MultibandRaster(2, 2, {"B1"}, std::vector<float>(3)), Error);
  CHECK_THROWS(MultibandRaster(2, 2, {"B1"}, {0.f, 1.f, NAN, 0.f}));
  const MultibandRaster r(2, 1, {"B1", "B2"}, {1, 2, 3, 4});
  CHECK(r.at(1, 0, 0) == 3.f);
  CHECK(r.band(0)[1] == 2.f);
}

TEST_CASE("raster directory round trip") {
  testutil::TempDir dir("raster");
  const auto r = random_raster(13, 7, 4, 2);
  save_raster(r, dir / "r");
  CHECK(load_raster(dir / "r") == r);
}

TEST_CASE("missing band file is reported by number") {
  testutil::TempDir dir("missing");
  save_raster(random_raster(4, 4, 7, 1), dir / "r");
  std::filesystem::remove(dir / "r" / "band_7.f32");
  try {
    load_raster(dir / "r");
    FAIL("expected MissingBandError");
  } catch (const MissingBandError& e) {
    CHECK(e.band() == 7);
    CHECK(std::string(e.what()).find("MissingBand(7)") != std::string::npos);
  }
}

TEST_CASE("non-finite and truncated band data are rejected") {
  testutil::TempDir dir("nan");
  save_raster(random_raster(4, 4, 2, 1), dir / "r");
  {
    std::fstream f(dir / "r" / "band_2.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const float bad = INFINITY;
    f.write(reinterpret_cast<const char*>(&bad), 4);
  }
  CHECK_THROWS_AS(load_raster(dir / "r"), FormatError);
  std::filesystem::resize_file(dir / "r" / "band_2.f32", 10);
  CHECK_THROWS_AS(load_raster(dir / "r"), FormatError);
}

TEST_CASE("band selection and stacking") {
  const auto r = random_raster(5, 3, 4, 9);
  const int idx[] = {3, 1};
  const auto s = select_bands(r, idx);
  CHECK(s.band_names() == std::vector<std::string>{"B4", "B2"});
  CHECK(s.at(0, 2, 1) == r.at(3, 2, 1));
  const auto st = stack(s, r);
  CHECK(st.bands() == 6);
  CHECK(st.at(5, 4, 2) == r.at(3, 4, 2));
  const int bad[] = {4};
  CHECK_THROWS(select_bands(r, bad));
}

TEST_CASE("PCA of a two-band raster matches the closed form") {
  // Columns x and 2x + noise: covariance [[a, b], [b, c]] computed by hand.
  Rng rng(21);
  const int n = 400;
  std::vector<float> data(2 * n);
  for (int i = 0; i < n; ++i) {
    const double x = uniform01(rng);
    data[i] = static_cast<float>(x);
    data[n + i] = static_cast<float>(2 * x + 0.1 * uniform01(rng));
  }
  const MultibandRaster r(20, 20, {"B1", "B2"}, data);
  double m0 = 0, m1 = 0;
  for (int i = 0; i < n; ++i) {
    m0 += data[i];
    m1 += data[n + i];
  }
  m0 /= n;
  m1 /= n;
  double a = 0, b = 0, c = 0;
  for (int i = 0; i < n; ++i) {
    a += (data[i] - m0) * (data[i] - m0);
    b += (data[i] - m0) * (data[n + i] - m1);
    c += (data[n + i] - m1) * (data[n + i] - m1);
  }
  a /= n - 1;
  b /= n - 1;
  c /= n - 1;
  const double tr = a + c, det = a * c - b * b;
  const double l1 = tr / 2 + std::sqrt(tr * tr / 4 - det), l2 = tr / 2 - std::sqrt(tr * tr / 4 - det);
  const auto model = fit_pca(r);
  CHECK(model.eigenvalues[0] == doctest::Approx(l1).epsilon(1e-9));
  CHECK(model.eigenvalues[1] == doctest::Approx(l2).epsilon(1e-6));
  CHECK(model.explained_variance_ratio(0) + model.explained_variance_ratio(1) == doctest::Approx(1.0));
  // Leading component is (b, l1 - a) normalized, positive by the sign rule.
  const double nrm = std::hypot(b, l1 - a);
  CHECK(model.components[0][0] == doctest::Approx(b / nrm).epsilon(1e-9));
  CHECK(model.components[0][1] == doctest::Approx((l1 - a) / nrm).epsilon(1e-9));
}

TEST_CASE("raw PCA scores have the eigenvalues as variances") {
  const auto r = random_raster(16, 16, 5, 33);
  const auto model = fit_pca(r);
  const auto scores = pca_scores(r, model, 3);
  const std::size_t n = r.pixel_count();
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) mean += scores[c * n + i];
    mean /= n;
    for (std::size_t i = 0; i < n; ++i) var += (scores[c * n + i] - mean) * (scores[c * n + i] - mean);
    var /= n - 1;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(model.eigenvalues[c]).epsilon(1e-9));
  }
  for (int c = 1; c < 5; ++c) CHECK(model.eigenvalues[c - 1] >= model.eigenvalues[c]);
}

TEST_CASE("PCA composite is rescaled and named") {
  const auto pcs = pca_composite(random_raster(16, 16, 7, 4), 3);
  CHECK(pcs.band_names() == std::vector<std::string>{"PC1", "PC2", "PC3"});
  for (int b = 0; b < 3; ++b) {
    const auto band = pcs.band(b);
    CHECK(*std::min_element(band.begin(), band.end()) == 0.f);
    CHECK(*std::max_element(band.begin(), band.end()) == doctest::Approx(1.f));
  }
}

TEST_CASE("degenerate covariance is reported") {
  const MultibandRaster flat(4, 4, {"B1", "B2", "B3"}, std::vector<float>(48, 0.5f));
  CHECK_THROWS_AS(pca_composite(flat, 3), DegenerateCovarianceError);
  // Rank one: every band is the same ramp.
  std::vector<float> ramp(48);
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 16; ++i) ramp[b * 16 + i] = static_cast<float>(i);
  const MultibandRaster r1(4, 4, {"B1", "B2", "B3"}, ramp);
  CHECK_NOTHROW(pca_composite(r1, 1));
  CHECK_THROWS_AS(pca_composite(r1, 2), DegenerateCovarianceError);
}

TEST_CASE("NDVI") {
  const MultibandRaster r(3, 1, {"RED", "NIR"}, {0.2f, 0.0f, 0.5f, 0.6f, 0.0f, 0.5f});
  const auto v = ndvi(r, 1, 0);
  CHECK(v.band_names() == std::vector<std::string>{"NDVI"});
  CHECK(v.band(0)[0] == doctest::Approx(0.5));
  CHECK(v.band(0)[1] == 0.f);
  CHECK(v.band(0)[2] == 0.f);
}

TEST_CASE("composites resolve channel tags in order") {
  const auto r = random_raster(8, 8, 7, 12);
  const std::vector<std::string> tags = {"B4", "B3", "B2"};
  const auto c = make_composite(r, tags);
  CHECK(c.sources == tags);
  CHECK(c.raster.at(0, 3, 3) == r.at(3, 3, 3));
  CHECK(c.raster.at(2, 3, 3) == r.at(1, 3, 3));
  const std::vector<std::string> mixed = {"PC1", "NDVI", "B1"};
  CHECK(make_composite(r, mixed).raster.bands() == 3);
  const std::vector<std::string> bad = {"B9"};
  CHECK_THROWS(make_composite(r, bad));
  const std::vector<std::string> unknown = {"SWIR"};
  CHECK_THROWS(make_composite(r, unknown));
}

TEST_CASE("PGM and mask round trip") {
  testutil::TempDir dir("pgm");
  LabelMask m{3, 2, {0, 1, 255, 1, 0, 0}};
  save_mask(m, dir / "m.pgm");
  CHECK(load_mask(dir / "m.pgm") == m);
  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# comment\n2 1\n255\n";
    out.put(1).put(0);
  }
  CHECK(load_mask(dir / "c.pgm").labels == std::vector<std::uint8_t>{1, 0});
  {
    std::ofstream out(dir / "bad.pgm", std::ios::binary);
    out << "P5\n1 1\n255\n";
    out.put(7);
  }
  CHECK_THROWS_AS(load_mask(dir / "bad.pgm"), FormatError);
  {
    std::ofstream out(dir / "p2.pgm");
    out << "P2\n1 1\n255\n0\n";
  }
  CHECK_THROWS_AS(read_pgm(dir / "p2.pgm"), FormatError);
  CHECK_THROWS_AS(read_pgm(dir / "none.pgm"), IoError);
}
