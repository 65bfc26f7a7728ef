#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bandsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Selects between the OpenMP kernel and its serial reference.
/// Both paths produce bit-identical results.
enum class Execution { serial, parallel };

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw, so the
/// stream is identical on every standard library.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Standard normal via Box-Muller on uniform01.
double standard_normal(Rng& rng);

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Band name for zero-based band index: 0 -> "B1".
std::string band_name(int index);

/// Inverse of band_name; returns -1 when the name is not of the form B<n>.
int band_index(std::string_view name);

/// Sets the OpenMP thread count when n > 0.
void set_thread_count(int n);

}  // namespace bandsel
