#pragma once

#include <cstdint>
#include <vector>

#include "lipdyn/linalg.hpp"

namespace lipdyn {

// Counter-based deterministic generator (splitmix64 over seed-derived state).
// The stream depends only on the seed and call sequence, on every platform;
// std::normal_distribution and friends are implementation-defined, so the
// gaussian path is an explicit Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x2545F4914F6CDD1Dull) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; pairs are cached.
  double gaussian();

  // Uniform integer in [0, n), rejection-sampled (no modulo bias).
  std::uint64_t uniform_int(std::uint64_t n);

  // Fisher-Yates, descending index.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// i.i.d. N(0, std^2) entries, filled column by column.
Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double std);

Vector gaussian_vector(Rng& rng, Eigen::Index n, double std);

}  // namespace lipdyn
