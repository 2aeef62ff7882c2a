#pragma once

#include "lipdyn/linalg.hpp"
#include "lipdyn/mlp.hpp"

namespace lipdyn {

// Low-rank form of the per-layer batch gradient-noise covariance
//   Sigma_hat = (1/M) Omega^T Omega,
// where row i of Omega is (g_i - mean(g)) / sqrt(M-1) for the vectorized
// per-sample gradients g_i. Two distinct scalings: 1/(M-1) is the unbiased
// sample covariance, the extra 1/M is the CLT scaling of the mini-batch
// mean. Sigma_hat itself (mn x mn) is never materialized; rank <= M-1, so
// everything is answered through Omega and the eigendecomposition of the
// M x M Gram matrix (1/M) Omega Omega^T.
struct NoiseModel {
  int layer = 0;
  RowMatrix omega;           // M x (m*n)
  Vector gram_eigenvalues;   // length M, nonincreasing, clamped at 0
  Matrix gram_eigenvectors;  // M x M, orthonormal columns
  int batch_size = 0;

  Eigen::Index dim() const { return omega.cols(); }
};

// Centers and scales the per-sample rows, eigendecomposes the small Gram.
// Throws for M < 2 (sample variance undefined).
NoiseModel build_noise_model(PerSampleGradBatch grads);

// x^T Sigma_hat x = (1/M) ||Omega x||^2, always >= 0.
double sigma_quadratic_form(const NoiseModel& nm, const Eigen::Ref<const Vector>& x);

// x^T Sigma_hat y = (1/M) (Omega x) . (Omega y), symmetric in x and y.
double sigma_bilinear_form(const NoiseModel& nm, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& y);

// diag(Sigma_hat): entry j is (1/M) sum_i omega(i,j)^2.
Vector variance_diagonal(const NoiseModel& nm);

// x^T (Sigma_hat - diag(Sigma_hat)) x; the off-diagonal part is not PSD,
// so this may be negative.
double covariance_quadratic_form(const NoiseModel& nm,
                                 const Eigen::Ref<const Vector>& x);

// Sigma_hat^{1/2} z via the Gram factors: with P = Omega^T U Lambda^{-1/2} / sqrt(M)
// (columns restricted to eigenvalues above 1e-12 * lambda_max),
// Sigma_hat^{1/2} = P Lambda^{1/2} P^T. Applying twice reproduces Sigma_hat z.
Vector sqrt_apply(const NoiseModel& nm, const Eigen::Ref<const Vector>& z);

}  // namespace lipdyn
