// Times the OpenMP kernels against their serial references on a synthetic
// region and checks that both produce identical output.
//
//   bench_kernels [--size N] [--threads T] [--repeat R]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "bandsel/pipeline.hpp"
#include "bandsel/segset.hpp"
#include "bandsel/slic.hpp"
#include "bandsel/svm.hpp"
#include "bandsel/synthetic.hpp"
#include "bandsel/texture.hpp"

using namespace bandsel;

namespace {

double best_of(int repeat, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-20s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int size = 256, threads = 0, repeat = 3;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--size")) size = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--threads")) threads = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--repeat")) repeat = std::atoi(argv[i + 1]);
  }
  set_thread_count(threads);

  synthetic::SyntheticSpec spec;
  spec.width = spec.height = size;
  spec.regions = 2;
  const auto train_region = synthetic::generate_region(spec, 1);
  const auto eval_region = synthetic::generate_region(spec, 2);
  bool ok = true;

  // Superpixels
  const auto lab = slic::to_lab(raster::pca_composite(train_region.raster, 3));
  slic::SlicConfig sc;
  sc.k = slic::default_k(lab.pixel_count());
  slic::SuperpixelMap ms, mp;
  const double ts = best_of(repeat, [&] { ms = slic::slic_segment(lab, sc, Execution::serial); });
  const double tp = best_of(repeat, [&] { mp = slic::slic_segment(lab, sc, Execution::parallel); });
  report("slic", ts, tp, ms == mp);
  ok = ok && ms == mp;

  // Texture features of both regions
  auto features_of = [&](const synthetic::Region& region, int id, Execution exec) {
    const auto map = slic::slic_segment(slic::to_lab(raster::pca_composite(region.raster, 3)), sc);
    const auto segs = segset::build_segments(map, region.mask, id);
    const auto channels = pipeline::feature_channels(region.raster.bands(), 3);
    const auto comp = raster::make_composite(region.raster, channels);
    const raster::MultibandRaster named(comp.raster.width(), comp.raster.height(), channels,
                                        std::vector<float>(comp.raster.data().begin(), comp.raster.data().end()));
    return texture::extract_features(named, segs, texture::TextureConfig{}, exec);
  };
  texture::FeatureTable fs, fp;
  const double xs = best_of(repeat, [&] { fs = features_of(train_region, 1, Execution::serial); });
  const double xp = best_of(repeat, [&] { fp = features_of(train_region, 1, Execution::parallel); });
  report("texture", xs, xp, fs == fp);
  ok = ok && fs == fp;

  // Fitness of all 127 genomes, fresh caches
  const auto eval = features_of(eval_region, 2, Execution::parallel);
  std::vector<Genome> all;
  for (int code = 1; code < 128; ++code) {
    Genome g(7);
    for (int b = 0; b < 7; ++b) g.bits[b] = (code >> b) & 1;
    all.push_back(g);
  }
  const std::vector<std::string> genes = {"B1", "B2", "B3", "B4", "B5", "B6", "B7"};
  std::vector<svm::FitnessValue> vs, vp;
  const double fs_t = best_of(1, [&] {
    svm::FitnessEvaluator ev(fs, eval, svm::SvmConfig{}, genes);
    vs = ev.evaluate_batch(all, Execution::serial);
  });
  const double fp_t = best_of(1, [&] {
    svm::FitnessEvaluator ev(fs, eval, svm::SvmConfig{}, genes);
    vp = ev.evaluate_batch(all, Execution::parallel);
  });
  report("fitness (127)", fs_t, fp_t, vs == vp);
  ok = ok && vs == vp;
  return ok ? 0 : 1;
}
