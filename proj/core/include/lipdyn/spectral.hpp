#pragma once

#include "lipdyn/linalg.hpp"
#include "lipdyn/noise.hpp"

namespace lipdyn {

// Below gap_floor = 1e-8 * sigma1^2 the inverse-gap Hessian coefficients are
// numerically meaningless; callers carry the last valid value instead.
inline constexpr double kGapFloorRel = 1e-8;

// SVD of a parameter matrix plus the spectral gaps sigma1^2 - sigma_i^2 that
// appear as Hessian denominators.
struct SpectralState {
  SvdFactors factors;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Vector gaps;              // sigma1^2 - sigma_i^2 for i >= 2
  double gap_floor = 0.0;   // kGapFloorRel * sigma1^2
  bool degenerate = false;  // min gap < gap_floor

  double sigma1() const { return factors.singular_values(0); }
  double min_gap() const { return gaps.size() > 0 ? gaps.minCoeff() : gap_floor; }
};

SpectralState make_spectral_state(const Matrix& theta);
SpectralState make_spectral_state(SvdFactors factors, Eigen::Index rows,
                                  Eigen::Index cols);

// d sigma1 / d vec(theta) = vec(u1 v1^T), i.e. the Kronecker product v1 (x) u1
// in column-major convention. Unit Euclidean norm. Throws for sigma1 = 0.
Vector op_norm_jacobian(const SpectralState& ss);

// <H, Sigma_hat> where H is the operator-norm Hessian of sigma1. Computed per
// Omega row: matricize the row to W, take a = U^T(W v1) and b = V^T(W^T u1),
// then sum sigma1*(a_k^2+b_k^2)/(sigma1^2-sigma_k^2) + 2 sigma_k a_k b_k /
// (sigma1^2-sigma_k^2) over k != 1 (cross terms only up to the effective
// rank; components beyond the thin basis carry coefficient 1/sigma1), and
// average the rows with the 1/M factor. Grouping per index keeps every term
// nonnegative, so the result is >= 0 without cancellation. O(M * m * n).
// Throws DegenerateSpectrumError when the state is gap-degenerate.
double hessian_sigma_contraction(const SpectralState& ss, const NoiseModel& nm);

// delta^T H delta for a single direction (rank-one version of the above).
double hessian_quadratic_form(const SpectralState& ss,
                              const Eigen::Ref<const Vector>& delta);

// J^T Sigma_hat J, the diffusion quadratic form on the Jacobian direction.
// The eta / sigma1^2 scaling belongs to the dynamics layer, not here.
double jacobian_sigma_jacobian(const SpectralState& ss, const NoiseModel& nm);

}  // namespace lipdyn
