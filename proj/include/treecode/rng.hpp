#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "treecode/common.hpp"

namespace treecode {

// Seeded generator with hand-rolled transforms. std::mt19937_64's output
// sequence is fixed by the standard, and avoiding the library distributions
// keeps every derived value identical across standard library
// implementations, which the byte-exact reproducibility contract needs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is below 2^-52 for any n that
  // fits desk-scale data and does not affect determinism.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Vec normal_vector(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  Vec unit_vector(int d) {
    Vec v = normal_vector(d);
    double n = v.norm();
    while (n < 1e-12) {
      v = normal_vector(d);
      n = v.norm();
    }
    return v / n;
  }

  void shuffle(std::vector<int>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

  // First k entries of a shuffled 0..n-1, sorted order not preserved.
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx);
    idx.resize(k < n ? k : n);
    return idx;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace treecode
