#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lipdyn/spectral.hpp"

namespace lipdyn {

// Per-layer SDE coefficients for d K / K = (mu + kappa) dt + lambda^T dB:
//   mu        = <J, -vec(grad L)> / sigma1          optimization-induced drift
//   lambda^2  = eta * J^T Sigma J / sigma1^2        squared diffusion intensity
//   kappa     = eta * <H, Sigma> / (2 sigma1)       noise-curvature entropy production
struct LayerTerms {
  int layer = 0;
  double mu = 0.0;
  double kappa = 0.0;      // >= 0
  double lambda_sq = 0.0;  // >= 0
  double sigma1 = 0.0;
  bool degenerate = false;
};

// When the spectral state is gap-degenerate, kappa cannot be evaluated; the
// previous value is carried forward and the terms are flagged.
LayerTerms layer_terms(const SpectralState& ss, const NoiseModel& nm,
                       const Eigen::Ref<const Vector>& mean_grad, double eta,
                       std::optional<double> prev_kappa = std::nullopt,
                       int layer = 0);

// Network-level sums: mu_Z = sum mu, kappa_Z = sum kappa,
// lambda_Z^2 = sum ||lambda||^2.
struct NetworkTerms {
  double mu_z = 0.0;
  double kappa_z = 0.0;
  double lambda_z_sq = 0.0;
  std::vector<LayerTerms> layers;
};

NetworkTerms network_terms(std::vector<LayerTerms> layers);

struct ExpectationPoint {
  double e_z = 0.0;    // Z0 + sum (mu_Z + kappa_Z - lambda_Z^2 / 2) dt
  double var_z = 0.0;  // sum lambda_Z^2 dt
  double e_k = 0.0;    // exp(E[Z] + Var[Z]/2) = K0 exp(int mu_Z) exp(int kappa_Z)
  double var_k = 0.0;  // E[K]^2 (exp(Var[Z]) - 1)
};

// Left-Riemann accumulation of the closed-form statistics.
class ExpectationIntegrator {
 public:
  explicit ExpectationIntegrator(double z0) : z0_(z0) {}
  void add_step(const NetworkTerms& nt, double dt);
  ExpectationPoint current() const;

 private:
  double z0_;
  double drift_ = 0.0;
  double var_ = 0.0;
};

std::vector<ExpectationPoint> integrate_expectation(
    const std::vector<NetworkTerms>& terms, double dt, double z0);

struct PathwiseLayerInput {
  const SpectralState* state = nullptr;  // at the pre-update parameters
  const Vector* delta = nullptr;         // vec(theta_next - theta)
  const Vector* drift = nullptr;         // vec(grad estimate); optional
};

// Reconstructs Z(t) from realized per-step increments: per layer
//   dK = J^T delta + (1/2) delta^T H delta,
//   dZ += dK/sigma1 - (1/2)(dK/sigma1)^2,
// the discrete second-order expansion of sum_l log sigma1. When drift
// estimates are supplied, the projections of the zero-mean residuals
// (delta + eta * drift) accumulate into the noise integral, the realized
// counterpart of int lambda_Z dW. Degenerate-gap layers reuse the previous
// quadratic correction and the step is flagged.
class PathwiseIntegrator {
 public:
  PathwiseIntegrator(double z0, int num_layers)
      : z_(z0), last_correction_(static_cast<std::size_t>(num_layers), 0.0) {}

  void add_step(const std::vector<PathwiseLayerInput>& layers, double eta);

  double z_path() const { return z_; }
  double noise_integral() const { return noise_integral_; }
  const std::vector<double>& noise_increments() const { return noise_increments_; }
  long steps() const { return steps_; }
  double degenerate_fraction() const {
    return steps_ == 0 ? 0.0
                       : static_cast<double>(degenerate_steps_) /
                             static_cast<double>(steps_);
  }

 private:
  double z_;
  double noise_integral_ = 0.0;
  std::vector<double> noise_increments_;
  std::vector<double> last_correction_;
  long steps_ = 0;
  long degenerate_steps_ = 0;
};

// Convenience wrapper for a whole recorded sequence; returns Z_path after
// each step.
std::vector<double> pathwise_reconstruction(
    const std::vector<std::vector<PathwiseLayerInput>>& steps, double eta, double z0);

// Least-squares slope of log(var) against log(M). Throws if fewer than two
// distinct batch sizes (or any nonpositive variance) are supplied.
double batch_size_variance_slope(
    const std::vector<std::pair<double, double>>& batch_size_and_variance);

}  // namespace lipdyn
