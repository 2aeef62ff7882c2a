#include "lipdyn/rng.hpp"

#include <cmath>
#include <numbers>

namespace lipdyn {

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw NumericError("uniform_int: empty range");
  const std::uint64_t threshold = (-n) % n;  // (2^64 - n) mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double std) {
  if (std <= 0.0) throw NumericError("gaussian_matrix: std must be positive");
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = std * rng.gaussian();
    }
  }
  return m;
}

Vector gaussian_vector(Rng& rng, Eigen::Index n, double std) {
  if (std <= 0.0) throw NumericError("gaussian_vector: std must be positive");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std * rng.gaussian();
  return v;
}

}  // namespace lipdyn
