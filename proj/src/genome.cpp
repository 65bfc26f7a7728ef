#include "bandsel/genome.hpp"

#include <algorithm>

#include "bandsel/common.hpp"

namespace bandsel {

Genome Genome::parse(std::string_view s) {
  Genome g(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') {
      throw InvalidArgument("genome string may contain only 0 and 1: '" + std::string(s) + "'");
    }
    g.bits[i] = s[i] == '1';
  }
  return g;
}

std::size_t Genome::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

std::vector<int> Genome::selected() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string Genome::to_string() const {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) s[i] = '1';
  }
  return s;
}

}  // namespace bandsel

