#include "bandsel/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <omp.h>

namespace bandsel {

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string band_name(int index) { return "B" + std::to_string(index + 1); }

int band_index(std::string_view name) {
  if (name.size() < 2 || name.front() != 'B') return -1;
  int n = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), n);
  if (ec != std::errc{} || ptr != name.data() + name.size() || n < 1) return -1;
  return n - 1;
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace bandsel
