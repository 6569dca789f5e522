#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace gsm {

// Deterministic RNG wrapper. std::mt19937_64 output is specified exactly,
// but std::uniform_real_distribution is not, so the mappings to doubles and
// bounded ints are done by hand to keep streams reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform in [0, n), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t bound = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t v = eng_();
    while (v >= bound) v = eng_();
    return v % n;
  }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace gsm
