#include <doctest.h>

#include <sstream>

#include "bandsel/texture.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bandsel;
using namespace bandsel::texture;

namespace {

QuantizedPatch random_patch(int w, int h, int levels, Rng& rng, double hole_rate = 0.0) {
  QuantizedPatch q{w, h, levels, std::vector<int>(static_cast<std::size_t>(w * h))};
  for (auto& v : q.data) {
    v = uniform01(rng) < hole_rate ? -1 : static_cast<int>(uniform_index(rng, levels));
  }
  return q;
}

segset::SegmentRecord block_segment(int x0, int y0, int w, int h, int id) {
  segset::SegmentRecord s;
  s.segment_id = id;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) s.pixels.push_back({x, y});
  return s;
}

raster::MultibandRaster random_raster(int w, int h, int bands, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (int b = 0; b < bands; ++b) names.push_back(band_name(b));
  std::vector<float> data(static_cast<std::size_t>(w * h * bands));
  for (auto& v : data) v = static_cast<float>(uniform01(rng));
  return raster::MultibandRaster(w, h, names, data);
}

}  // namespace

TEST_CASE("direction offsets") {
  CHECK(offset(Direction::deg0) == std::array<int, 2>{1, 0});
  CHECK(offset(Direction::deg45) == std::array<int, 2>{1, -1});
  CHECK(offset(Direction::deg90) == std::array<int, 2>{0, -1});
  CHECK(offset(Direction::deg135, 2) == std::array<int, 2>{-2, -2});
}

TEST_CASE("quantization uses the segment range") {
  const std::vector<float> plane = {0.0f, 0.5f, 1.0f, 9.0f};
  const std::vector<segset::Pixel> px = {{0, 0}, {1, 0}, {0, 1}};
  const auto q = quantize(plane, 2, px, 4);
  CHECK(q.width == 2);
  CHECK(q.height == 2);
  CHECK(q.data == std::vector<int>{0, 2, 3, -1});
  const std::vector<float> flat = {2.f, 2.f};
  const std::vector<segset::Pixel> two = {{0, 0}, {1, 0}};
  CHECK(quantize(flat, 2, two, 8).data == std::vector<int>{0, 0});
}

TEST_CASE("GLCM matches the brute force counter, with holes") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto q = random_patch(9, 7, 5, rng, 0.2);
    for (Direction d : kDirections) {
      const auto [dx, dy] = offset(d);
      const auto counts = oracle::glcm_counts(q.data, q.width, q.height, q.levels, dx, dy);
      double total = 0;
      for (double c : counts) total += c;
      const auto m = glcm(q, d);
      if (total == 0) {
        CHECK_FALSE(m.has_value());
        continue;
      }
      REQUIRE(m.has_value());
      for (std::size_t k = 0; k < counts.size(); ++k) CHECK(m->p[k] == doctest::Approx(counts[k] / total));
    }
  }
}

TEST_CASE("single pixel segment has no pairs") {
  QuantizedPatch q{1, 1, 4, {2}};
  for (Direction d : kDirections) CHECK_FALSE(glcm(q, d).has_value());
}

TEST_CASE("Haralick features match the literal definitions") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto q = random_patch(12, 12, 8, rng);
    const auto m = glcm(q, kDirections[trial % 4]);
    REQUIRE(m.has_value());
    const auto got = haralick13(*m);
    const auto want = oracle::haralick(m->p, m->levels);
    for (int k = 0; k < kHaralickCount; ++k) {
      INFO(kHaralickNames[k]);
      CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("constant patch") {
  QuantizedPatch q{5, 5, 16, std::vector<int>(25, 0)};
  const auto f = haralick13(*glcm(q, Direction::deg0));
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.0);
  CHECK(f[8] == 0.0);
  CHECK(f[2] == 0.0);
}

TEST_CASE("feature blocks and direction means") {
  const auto r = random_raster(20, 20, 2, 3);
  const auto seg = block_segment(2, 3, 8, 6, 0);
  TextureConfig cfg;
  const auto full = segment_features(r, seg, cfg);
  CHECK(full.size() == 2u * 52u);
  cfg.direction_mean = true;
  const auto mean = segment_features(r, seg, cfg);
  CHECK(mean.size() == 2u * 13u);
  for (int b = 0; b < 2; ++b)
    for (int k = 0; k < 13; ++k) {
      double s = 0;
      for (int d = 0; d < 4; ++d) s += full[b * 52 + d * 13 + k];
      CHECK(mean[b * 13 + k] == doctest::Approx(s / 4));
    }
  // A one-pixel-high segment only has horizontal pairs.
  const auto line = block_segment(0, 0, 6, 1, 1);
  cfg.direction_mean = false;
  const auto lf = segment_features(r, line, cfg);
  for (int d = 1; d < 4; ++d)
    for (int k = 0; k < 13; ++k) CHECK(lf[d * 13 + k] == 0.0);
  CHECK(lf[0] > 0.0);
}

TEST_CASE("parallel extraction equals serial") {
  const auto r = random_raster(40, 40, 3, 5);
  std::vector<segset::SegmentRecord> segs;
  for (int i = 0; i < 16; ++i) segs.push_back(block_segment((i % 4) * 10, (i / 4) * 10, 10, 10, i));
  segs[3].majority = segset::ClassLabel::non_forest;
  const TextureConfig cfg;
  const auto a = extract_features(r, segs, cfg, Execution::serial);
  const auto b = extract_features(r, segs, cfg, Execution::parallel);
  CHECK(a == b);
  CHECK(a.rows.size() == 16);
  CHECK(a.channels == std::vector<std::string>{"B1", "B2", "B3"});
  CHECK(a.rows[3].label == segset::ClassLabel::non_forest);
  CHECK(a.block(2, 1)[0] == a.rows[2].values[52]);
  CHECK(a.channel_index("B3") == 2);
  CHECK_THROWS(a.channel_index("NDVI"));
  segs[0].pixels.push_back({100, 100});
  CHECK_THROWS(extract_features(r, segs, cfg));
}

TEST_CASE("feature tables round trip through both formats") {
  const auto r = random_raster(20, 20, 2, 8);
  std::vector<segset::SegmentRecord> segs = {block_segment(0, 0, 10, 10, 0), block_segment(10, 10, 10, 10, 1)};
  segs[1].region_id = 4;
  auto t = extract_features(r, segs, TextureConfig{});
  std::stringstream ss;
  write_features_jsonl(ss, t);
  CHECK(read_features_jsonl(ss) == t);
  testutil::TempDir dir("ft");
  write_features_binary(dir / "f.bin", t);
  const auto back = read_features_binary(dir / "f.bin");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.channels == t.channels);
  CHECK(back.rows[1].region_id == 4);
  for (std::size_t k = 0; k < t.rows[0].values.size(); ++k)
    CHECK(back.rows[0].values[k] == static_cast<double>(static_cast<float>(t.rows[0].values[k])));
  CHECK(t.subset({4}).rows.size() == 1);
}
