#include "lipdyn/dynamics.hpp"

#include <cmath>
#include <set>
#include <string>

namespace lipdyn {

LayerTerms layer_terms(const SpectralState& ss, const NoiseModel& nm,
                       const Eigen::Ref<const Vector>& mean_grad, double eta,
                       std::optional<double> prev_kappa, int layer) {
  if (eta <= 0.0) throw ConfigError("layer_terms: eta must be positive");
  const double s1 = ss.sigma1();
  if (s1 <= 0.0) throw NumericError("layer_terms: sigma1 = 0");
  if (mean_grad.size() != ss.rows * ss.cols) {
    throw ShapeError("layer_terms: mean_grad length mismatch");
  }

  LayerTerms t;
  t.layer = layer;
  t.sigma1 = s1;
  const Vector jac = op_norm_jacobian(ss);
  t.mu = -jac.dot(mean_grad) / s1;
  t.lambda_sq = eta * sigma_quadratic_form(nm, jac) / (s1 * s1);
  if (ss.degenerate) {
    t.degenerate = true;
    t.kappa = prev_kappa.value_or(0.0);
  } else {
    t.kappa = eta / (2.0 * s1) * hessian_sigma_contraction(ss, nm);
  }
  return t;
}

NetworkTerms network_terms(std::vector<LayerTerms> layers) {
  if (layers.empty()) throw ShapeError("network_terms: no layers");
  NetworkTerms nt;
  for (const LayerTerms& t : layers) {
    nt.mu_z += t.mu;
    nt.kappa_z += t.kappa;
    nt.lambda_z_sq += t.lambda_sq;
  }
  nt.layers = std::move(layers);
  return nt;
}

void ExpectationIntegrator::add_step(const NetworkTerms& nt, double dt) {
  drift_ += (nt.mu_z + nt.kappa_z - 0.5 * nt.lambda_z_sq) * dt;
  var_ += nt.lambda_z_sq * dt;
}

ExpectationPoint ExpectationIntegrator::current() const {
  ExpectationPoint p;
  p.e_z = z0_ + drift_;
  p.var_z = var_;
  p.e_k = std::exp(p.e_z + 0.5 * p.var_z);
  p.var_k = p.e_k * p.e_k * std::expm1(p.var_z);
  return p;
}

std::vector<ExpectationPoint> integrate_expectation(
    const std::vector<NetworkTerms>& terms, double dt, double z0) {
  ExpectationIntegrator acc(z0);
  std::vector<ExpectationPoint> out;
  out.reserve(terms.size());
  for (const NetworkTerms& nt : terms) {
    acc.add_step(nt, dt);
    out.push_back(acc.current());
  }
  return out;
}

void PathwiseIntegrator::add_step(const std::vector<PathwiseLayerInput>& layers,
                                  double eta) {
  if (layers.size() != last_correction_.size()) {
    throw ShapeError("PathwiseIntegrator: layer count mismatch");
  }
  bool any_degenerate = false;
  double noise_inc = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const SpectralState& ss = *layers[l].state;
    const Vector& delta = *layers[l].delta;
    const double s1 = ss.sigma1();
    if (s1 <= 0.0) throw NumericError("PathwiseIntegrator: sigma1 = 0");

    const Vector jac = op_norm_jacobian(ss);
    const double linear = jac.dot(delta);
    double correction;
    if (ss.degenerate) {
      any_degenerate = true;
      correction = last_correction_[l];
    } else {
      correction = 0.5 * hessian_quadratic_form(ss, delta);
      last_correction_[l] = correction;
    }
    const double dk_rel = (linear + correction) / s1;
    z_ += dk_rel - 0.5 * dk_rel * dk_rel;

    if (layers[l].drift != nullptr) {
      noise_inc += (linear + eta * jac.dot(*layers[l].drift)) / s1;
    }
  }
  noise_integral_ += noise_inc;
  noise_increments_.push_back(noise_inc);
  ++steps_;
  if (any_degenerate) ++degenerate_steps_;
}

std::vector<double> pathwise_reconstruction(
    const std::vector<std::vector<PathwiseLayerInput>>& steps, double eta,
    double z0) {
  if (steps.empty()) return {};
  PathwiseIntegrator acc(z0, static_cast<int>(steps.front().size()));
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    acc.add_step(s, eta);
    out.push_back(acc.z_path());
  }
  return out;
}

double batch_size_variance_slope(
    const std::vector<std::pair<double, double>>& batch_size_and_variance) {
  std::set<double> distinct;
  for (const auto& [m, v] : batch_size_and_variance) distinct.insert(m);
  if (distinct.size() < 2) {
    throw ShapeError("batch_size_variance_slope: need at least 2 distinct batch sizes");
  }
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(batch_size_and_variance.size());
  for (const auto& [m, v] : batch_size_and_variance) {
    if (m <= 0.0 || v <= 0.0) {
      throw NumericError("batch_size_variance_slope: nonpositive batch size or variance");
    }
    sx += std::log(m);
    sy += std::log(v);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [m, v] : batch_size_and_variance) {
    const double dx = std::log(m) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  return sxy / sxx;
}

}  // namespace lipdyn
