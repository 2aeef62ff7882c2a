#include <doctest.h>

#include <cmath>
#include <vector>

#include "lipdyn/dataset.hpp"
#include "lipdyn/noise.hpp"
#include "lipdyn/oracles.hpp"
#include "test_helpers.hpp"

using namespace lipdyn;
using lipdyn::testing::model_from_rows;
using lipdyn::testing::random_model;
using lipdyn::testing::stack_rows;

TEST_CASE("noise model: identical per-sample gradients give a zero model") {
  Vector g(3);
  g << 1.0, -2.0, 0.5;
  const NoiseModel nm = model_from_rows({g, g, g, g});
  CHECK(nm.omega.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(nm.gram_eigenvalues.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(sigma_quadratic_form(nm, Vector::Ones(3)) < 1e-30);
}

TEST_CASE("noise model: M=2 with +/-g gives Sigma = g g^T") {
  Vector g(2);
  g << 1.0, 0.0;
  const NoiseModel nm = model_from_rows({g, -g});
  CHECK(sigma_quadratic_form(nm, Vector::Unit(2, 0)) == doctest::Approx(1.0));
  CHECK(sigma_quadratic_form(nm, Vector::Unit(2, 1)) == doctest::Approx(0.0));
  Vector x(2);
  x << 3.0, 4.0;
  CHECK(sigma_quadratic_form(nm, x) == doctest::Approx(9.0));
}

TEST_CASE("noise model: centering invariant") {
  Rng rng(2);
  const NoiseModel nm = random_model(rng, 12, 7);
  const Vector colsum =
      std::sqrt(11.0) * nm.omega.colwise().sum().transpose();
  CHECK(colsum.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("noise model: M < 2 is rejected") {
  Vector g(3);
  g << 1, 2, 3;
  CHECK_THROWS_AS(model_from_rows({g}), ShapeError);
}

TEST_CASE("noise model: rank is at most M-1") {
  // Centering makes the all-ones vector a null direction of the Gram matrix,
  // so the smallest eigenvalue is (numerically) zero even for generic rows.
  Rng rng(21);
  const NoiseModel nm = random_model(rng, 6, 40);
  const double lmax = nm.gram_eigenvalues(0);
  CHECK(nm.gram_eigenvalues(5) < 1e-12 * lmax);
}

TEST_CASE("quadratic and bilinear forms match the dense covariance") {
  Rng rng(3);
  PerSampleGradBatch batch;
  batch.layer = 0;
  std::vector<Vector> raw;
  for (int i = 0; i < 16; ++i) raw.push_back(gaussian_vector(rng, 12, 1.0));
  const Matrix dense = oracle::dense_sigma(stack_rows(raw));
  const NoiseModel nm = model_from_rows(raw);

  for (int probe = 0; probe < 100; ++probe) {
    const Vector x = gaussian_vector(rng, 12, 1.0);
    const Vector y = gaussian_vector(rng, 12, 1.0);
    CHECK(std::abs(sigma_quadratic_form(nm, x) - x.dot(dense * x)) < 1e-10);
    CHECK(std::abs(sigma_bilinear_form(nm, x, y) - x.dot(dense * y)) < 1e-10);
    CHECK(sigma_bilinear_form(nm, x, y) ==
          doctest::Approx(sigma_bilinear_form(nm, y, x)).epsilon(1e-12));
  }
  CHECK(sigma_quadratic_form(nm, Vector::Zero(12)) == 0.0);
}

TEST_CASE("bilinear form: vector orthogonal to the row space gives zero") {
  Rng rng(4);
  std::vector<Vector> raw;
  for (int i = 0; i < 4; ++i) raw.push_back(gaussian_vector(rng, 8, 1.0));
  const NoiseModel nm = model_from_rows(raw);

  // Null-space direction of omega via its SVD.
  const Matrix om = nm.omega;
  const Eigen::JacobiSVD<Matrix> dec(om, Eigen::ComputeFullV);
  const Vector null_dir = dec.matrixV().col(7);
  const Vector y = gaussian_vector(rng, 8, 1.0);
  CHECK(std::abs(sigma_bilinear_form(nm, null_dir, y)) < 1e-12);
  CHECK(sigma_bilinear_form(nm, y, y) ==
        doctest::Approx(sigma_quadratic_form(nm, y)).epsilon(1e-12));
}

TEST_CASE("variance diagonal: closed forms and trace identity") {
  Vector g(2);
  g << 1.0, 0.0;
  const NoiseModel simple = model_from_rows({g, -g});
  const Vector vd = variance_diagonal(simple);
  CHECK(vd(0) == doctest::Approx(1.0));
  CHECK(vd(1) == doctest::Approx(0.0));

  Rng rng(5);
  std::vector<Vector> raw;
  for (int i = 0; i < 10; ++i) raw.push_back(gaussian_vector(rng, 6, 1.0));
  const NoiseModel nm = model_from_rows(raw);
  const Matrix dense = oracle::dense_sigma(stack_rows(raw));
  CHECK(std::abs(variance_diagonal(nm).sum() - dense.trace()) < 1e-10);

  const NoiseModel zero = model_from_rows({Vector::Zero(4), Vector::Zero(4)});
  CHECK(variance_diagonal(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance quadratic form: diagonal Sigma gives zero") {
  // +/- c e_i rows make the deviations axis-aligned, so Sigma is diagonal.
  std::vector<Vector> raw;
  for (Eigen::Index i = 0; i < 3; ++i) {
    Vector v = Vector::Zero(3);
    v(i) = 2.0;
    raw.push_back(v);
    raw.push_back(-v);
  }
  const NoiseModel nm = model_from_rows(raw);
  Rng rng(6);
  for (int probe = 0; probe < 20; ++probe) {
    const Vector x = gaussian_vector(rng, 3, 1.0);
    CHECK(std::abs(covariance_quadratic_form(nm, x)) < 1e-12);
  }
  CHECK(covariance_quadratic_form(nm, Vector::Zero(3)) == 0.0);
}

TEST_CASE("covariance quadratic form: rank-one case with known value") {
  Vector g(2);
  g << 1.0, 1.0;
  g /= std::sqrt(2.0);
  const NoiseModel nm = lipdyn::testing::rank_one_sigma_model(g);
  Vector x(2);
  x << 1.0, 1.0;
  CHECK(sigma_quadratic_form(nm, x) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(covariance_quadratic_form(nm, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("variance + covariance parts reassemble the full quadratic form") {
  Rng rng(7);
  std::vector<Vector> raw;
  for (int i = 0; i < 9; ++i) raw.push_back(gaussian_vector(rng, 11, 1.0));
  const NoiseModel nm = model_from_rows(raw);
  const Vector vd = variance_diagonal(nm);
  for (int probe = 0; probe < 50; ++probe) {
    const Vector x = gaussian_vector(rng, 11, 1.0);
    const double full = sigma_quadratic_form(nm, x);
    const double split =
        covariance_quadratic_form(nm, x) + vd.dot(x.cwiseProduct(x));
    CHECK(std::abs(full - split) < 1e-12 * std::max(1.0, std::abs(full)));
  }
}

TEST_CASE("sqrt_apply: rank-one projector case") {
  Vector g(2);
  g << 1.0, 0.0;
  const NoiseModel nm = model_from_rows({g, -g});
  Vector z(2);
  z << 5.0, 7.0;
  const Vector s = sqrt_apply(nm, z);
  CHECK(s(0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(std::abs(s(1)) < 1e-12);
}

TEST_CASE("sqrt_apply: applying twice reproduces Sigma z") {
  Rng rng(8);
  std::vector<Vector> raw;
  for (int i = 0; i < 10; ++i) raw.push_back(gaussian_vector(rng, 14, 1.0));
  const Matrix dense = oracle::dense_sigma(stack_rows(raw));
  const NoiseModel nm = model_from_rows(raw);
  for (int probe = 0; probe < 100; ++probe) {
    const Vector z = gaussian_vector(rng, 14, 1.0);
    const Vector twice = sqrt_apply(nm, sqrt_apply(nm, z));
    CHECK((twice - dense * z).norm() < 1e-8);
  }
}

TEST_CASE("sqrt_apply: null-space input maps to zero") {
  Rng rng(9);
  std::vector<Vector> raw;
  for (int i = 0; i < 3; ++i) raw.push_back(gaussian_vector(rng, 6, 1.0));
  const NoiseModel nm = model_from_rows(raw);
  const Eigen::JacobiSVD<Matrix> dec(Matrix(nm.omega), Eigen::ComputeFullV);
  const Vector null_dir = dec.matrixV().col(5);
  CHECK(sqrt_apply(nm, null_dir).norm() < 1e-12);
}

TEST_CASE("scale law: scaling gradients by c scales quadratic forms by c^2") {
  Rng rng(10);
  std::vector<Vector> raw, scaled;
  const double c = 3.7;
  for (int i = 0; i < 8; ++i) {
    raw.push_back(gaussian_vector(rng, 9, 1.0));
    scaled.push_back(c * raw.back());
  }
  const NoiseModel a = model_from_rows(raw);
  const NoiseModel b = model_from_rows(scaled);
  for (int probe = 0; probe < 20; ++probe) {
    const Vector x = gaussian_vector(rng, 9, 1.0);
    const double qa = sigma_quadratic_form(a, x);
    const double qb = sigma_quadratic_form(b, x);
    CHECK(qb == doctest::Approx(c * c * qa).epsilon(1e-12));
  }
}

TEST_CASE("psd: quadratic forms never go negative") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const NoiseModel nm = random_model(rng, 5, 13);
    for (int probe = 0; probe < 20; ++probe) {
      CHECK(sigma_quadratic_form(nm, gaussian_vector(rng, 13, 2.0)) >= 0.0);
    }
  }
}

TEST_CASE("unbiasedness: mini-batch estimates converge to the population value") {
  // Frozen net, mini-batches resampled i.i.d. with replacement; the average
  // of x^T Sigma_hat x over batches approaches x^T Var_pop x / M.
  Rng data_rng(12);
  const Dataset ds = make_blobs(data_rng, 600, 6, 3, 0.5);
  Rng init_rng(13);
  const MlpState st = init_mlp(MlpSpec::from_dims({6, 8, 3}), init_rng, 0.01);

  SupervisionNoise clean;
  Rng scratch(0);
  const auto all = per_sample_gradients(st, ds.inputs, ds.labels, clean, scratch);
  const int layer = 0;
  const Eigen::Index dim = all.layers[layer].rows.cols();

  // Population covariance (divisor N) of the per-sample gradients, then the
  // 1/M CLT scaling.
  const Eigen::Index n = all.layers[layer].rows.rows();
  Vector mean = all.layers[layer].rows.colwise().mean().transpose();
  Matrix pop = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector dev = all.layers[layer].rows.row(i).transpose() - mean;
    pop += dev * dev.transpose();
  }
  pop /= static_cast<double>(n);

  const int batch = 32;
  Rng probe_rng(14);
  std::vector<Vector> probes;
  for (int p = 0; p < 5; ++p) probes.push_back(gaussian_vector(probe_rng, dim, 1.0));

  std::vector<double> sums(probes.size(), 0.0);
  Rng pick(15);
  for (int rep = 0; rep < 500; ++rep) {
    Matrix xb(batch, ds.inputs.cols());
    std::vector<int> yb(batch);
    for (int i = 0; i < batch; ++i) {
      const auto j = pick.uniform_int(static_cast<std::uint64_t>(ds.inputs.rows()));
      xb.row(i) = ds.inputs.row(static_cast<Eigen::Index>(j));
      yb[static_cast<std::size_t>(i)] = ds.labels[j];
    }
    const auto psg = per_sample_gradients(st, xb, yb, clean, scratch);
    PerSampleGradBatch copy;
    copy.layer = layer;
    copy.rows = psg.layers[layer].rows;
    const NoiseModel nm = build_noise_model(std::move(copy));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      sums[p] += sigma_quadratic_form(nm, probes[p]);
    }
  }

  double max_truth = 0.0;
  std::vector<double> truths;
  for (const auto& x : probes) {
    truths.push_back(x.dot(pop * x) / batch);
    max_truth = std::max(max_truth, truths.back());
  }
  for (std::size_t p = 0; p < probes.size(); ++p) {
    if (truths[p] < 1e-3 * max_truth) continue;  // negligible-variance probe
    const double estimate = sums[p] / 500.0;
    CHECK(std::abs(estimate - truths[p]) / truths[p] < 0.05);
  }
}
