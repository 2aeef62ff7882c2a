#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "lipdyn/linalg.hpp"
#include "lipdyn/rng.hpp"
#include "test_helpers.hpp"

using namespace lipdyn;

TEST_CASE("svd: diagonal matrix") {
  Matrix m(2, 2);
  m << 2, 0, 0, 1;
  const SvdFactors f = svd(m);
  CHECK(f.singular_values(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.singular_values(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.rank == 2);
  CHECK(f.left_vectors(0, 0) == doctest::Approx(1.0));
  CHECK(f.left_vectors(1, 0) == doctest::Approx(0.0));
  CHECK(f.right_vectors(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("svd: single off-diagonal entry") {
  Matrix m(2, 2);
  m << 0, 3, 0, 0;
  const SvdFactors f = svd(m);
  CHECK(f.singular_values(0) == doctest::Approx(3.0));
  CHECK(f.singular_values(1) == doctest::Approx(0.0));
  CHECK(f.rank == 1);
  // u1 = e1, v1 = e2
  CHECK(f.left_vectors(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(f.left_vectors(1, 0)) < 1e-14);
  CHECK(std::abs(f.right_vectors(0, 0)) < 1e-14);
  CHECK(f.right_vectors(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("svd: random 8x5 reconstruction") {
  Rng rng(3);
  const Matrix m = gaussian_matrix(rng, 8, 5, 1.0);
  const SvdFactors f = svd(m);
  const Matrix rec =
      f.left_vectors * f.singular_values.asDiagonal() * f.right_vectors.transpose();
  CHECK((rec - m).norm() / m.norm() < 1e-8);
}

TEST_CASE("svd: orthonormality, ordering and orientation over random shapes") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.uniform_int(64));
    const auto cols = static_cast<Eigen::Index>(1 + rng.uniform_int(64));
    const Matrix m = gaussian_matrix(rng, rows, cols, 1.0);
    const SvdFactors f = svd(m);
    const Eigen::Index p = std::min(rows, cols);

    const Matrix utu = f.left_vectors.transpose() * f.left_vectors;
    const Matrix vtv = f.right_vectors.transpose() * f.right_vectors;
    CHECK((utu - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((vtv - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-10);

    const Matrix rec =
        f.left_vectors * f.singular_values.asDiagonal() * f.right_vectors.transpose();
    CHECK((rec - m).norm() / m.norm() < 1e-8);

    for (Eigen::Index i = 0; i + 1 < p; ++i) {
      CHECK(f.singular_values(i) >= f.singular_values(i + 1));
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      Eigen::Index arg = 0;
      f.left_vectors.col(i).cwiseAbs().maxCoeff(&arg);
      CHECK(f.left_vectors(arg, i) > 0.0);
    }
  }
}

TEST_CASE("svd: input validation") {
  Matrix bad(2, 2);
  bad << 1, std::numeric_limits<double>::quiet_NaN(), 0, 1;
  CHECK_THROWS_AS(svd(bad), NumericError);
  CHECK_THROWS_AS(svd(Matrix(0, 0)), ShapeError);
}

TEST_CASE("sym_eig: identity") {
  const SymEig e = sym_eig(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(e.eigenvalues(i) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig: classic 2x2") {
  Matrix g(2, 2);
  g << 2, 1, 1, 2;
  const SymEig e = sym_eig(g);
  CHECK(e.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix rec =
      e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
  CHECK((rec - g).norm() / g.norm() < 1e-8);
}

TEST_CASE("sym_eig: gram matrix of random 16x40") {
  Rng rng(5);
  const Matrix omega = gaussian_matrix(rng, 16, 40, 1.0);
  const Matrix gram = (omega * omega.transpose()) / 16.0;
  const SymEig e = sym_eig(gram);
  const Matrix rec =
      e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
  CHECK((rec - gram).norm() / gram.norm() < 1e-8);

  // Eigenvalues of (1/M) Omega Omega^T are the squared singular values of
  // Omega / sqrt(M).
  const SvdFactors f = svd(omega / 4.0);
  for (Eigen::Index i = 0; i < 16; ++i) {
    CHECK(e.eigenvalues(i) ==
          doctest::Approx(f.singular_values(i) * f.singular_values(i)).epsilon(1e-8));
  }
}

TEST_CASE("sym_eig: asymmetric input rejected") {
  Matrix g(2, 2);
  g << 0, 1, 0, 0;
  CHECK_THROWS_AS(sym_eig(g), DecompositionError);
}

TEST_CASE("sym_eig: PSD repair clamps tiny negatives, rejects real ones") {
  Matrix q(2, 2);
  q << 1, 1, 1, -1;
  q /= std::sqrt(2.0);
  {
    Vector lam(2);
    lam << 1.0, -1e-13;
    const Matrix g = q * lam.asDiagonal() * q.transpose();
    const SymEig e = sym_eig(g);
    CHECK(e.eigenvalues(1) == 0.0);
  }
  {
    Vector lam(2);
    lam << 1.0, -1e-6;
    const Matrix g = q * lam.asDiagonal() * q.transpose();
    CHECK_THROWS_AS(sym_eig(g), DecompositionError);
  }
}

TEST_CASE("rng: identical seed, identical stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42), d(43);
  CHECK(c.next_u64() != d.next_u64());

  Rng e(7), f(7);
  const Matrix m1 = gaussian_matrix(e, 2, 2, 1.0);
  const Matrix m2 = gaussian_matrix(f, 2, 2, 1.0);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rng: gaussian matrix sample mean") {
  Rng rng(123);
  const double s = std::sqrt(2.0 / 512.0);
  const Matrix m = gaussian_matrix(rng, 512, 512, s);
  CHECK(std::abs(m.mean()) < 4.0 * s / 512.0);
}

TEST_CASE("rng: top singular value of a 512x512 Kaiming draw") {
  Rng rng(2024);
  const double s = std::sqrt(2.0 / 512.0);
  const Matrix m = gaussian_matrix(rng, 512, 512, s);
  const double s1 = svd(m).singular_values(0);
  const double target = 2.0 * std::sqrt(2.0);  // (sqrt(m) + sqrt(n)) * s
  CHECK(std::abs(s1 - target) / target < 0.05);
}

TEST_CASE("rng: uniform_int stays in range and covers it") {
  Rng rng(9);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.uniform_int(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c > 300);  // expectation 500
}

TEST_CASE("rng: shuffle is a deterministic permutation") {
  std::vector<int> v1(50), v2(50);
  std::iota(v1.begin(), v1.end(), 0);
  std::iota(v2.begin(), v2.end(), 0);
  Rng a(17), b(17);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
