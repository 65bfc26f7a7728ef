#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bandsel {

/// Band-inclusion bit string; gene i set means band B(i+1) is selected.
struct Genome {
  std::vector<std::uint8_t> bits;

  Genome() = default;
  explicit Genome(std::size_t n) : bits(n, 0) {}

  /// Parses "1010000"; throws InvalidArgument on other characters.
  static Genome parse(std::string_view s);

  std::size_t size() const { return bits.size(); }
  bool test(std::size_t i) const { return bits[i] != 0; }
  std::size_t count() const;
  bool empty_selection() const { return count() == 0; }
  std::vector<int> selected() const;
  std::string to_string() const;

  auto operator<=>(const Genome&) const = default;
  bool operator==(const Genome&) const = default;
};

}  // namespace bandsel
