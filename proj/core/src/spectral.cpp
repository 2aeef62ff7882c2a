#include "lipdyn/spectral.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace lipdyn {

SpectralState make_spectral_state(SvdFactors factors, Eigen::Index rows,
                                  Eigen::Index cols) {
  SpectralState ss;
  ss.rows = rows;
  ss.cols = cols;
  ss.factors = std::move(factors);
  const Vector& sv = ss.factors.singular_values;
  const double s1sq = sv(0) * sv(0);
  ss.gap_floor = kGapFloorRel * s1sq;
  if (sv.size() > 1) {
    ss.gaps = s1sq - sv.tail(sv.size() - 1).array().square().matrix().array();
    ss.degenerate = ss.gaps.minCoeff() < ss.gap_floor;
  }
  return ss;
}

SpectralState make_spectral_state(const Matrix& theta) {
  return make_spectral_state(svd(theta), theta.rows(), theta.cols());
}

Vector op_norm_jacobian(const SpectralState& ss) {
  if (ss.sigma1() <= 0.0) {
    throw NumericError("op_norm_jacobian: sigma1 = 0, direction undefined");
  }
  Matrix outer = ss.factors.left_vectors.col(0) * ss.factors.right_vectors.col(0).transpose();
  return Eigen::Map<const Vector>(outer.data(), outer.size());
}

namespace {

void check_usable(const SpectralState& ss, Eigen::Index dim, const char* op,
                  int layer = -1) {
  if (ss.sigma1() <= 0.0) {
    throw NumericError(std::string(op) + ": sigma1 = 0");
  }
  if (ss.degenerate) {
    std::string msg = std::string(op) + ": spectral gap " +
                      std::to_string(ss.min_gap()) + " below floor " +
                      std::to_string(ss.gap_floor);
    if (layer >= 0) msg += " in layer " + std::to_string(layer);
    throw DegenerateSpectrumError(std::move(msg), ss.min_gap(), ss.gap_floor, layer);
  }
  if (dim != ss.rows * ss.cols) {
    throw ShapeError(std::string(op) + ": vector length " + std::to_string(dim) +
                     " != " + std::to_string(ss.rows * ss.cols));
  }
}

// w^T H w for one vectorized direction w (viewed as W, m x n).
double hessian_direction_term(const SpectralState& ss, const double* w_data) {
  const Vector& sv = ss.factors.singular_values;
  const Matrix& u = ss.factors.left_vectors;
  const Matrix& v = ss.factors.right_vectors;
  const double s1 = sv(0);
  const Eigen::Index p = sv.size();
  const Eigen::Index r = ss.factors.rank;

  Eigen::Map<const Matrix> w(w_data, ss.rows, ss.cols);
  const Vector wv1 = w * v.col(0);
  const Vector a = u.transpose() * wv1;
  const Vector wtu1 = w.transpose() * u.col(0);
  const Vector b = v.transpose() * wtu1;

  // Components outside the thin basis belong to singular value 0, coefficient
  // sigma1 / sigma1^2 = 1 / sigma1.
  const double res_a = std::max(0.0, wv1.squaredNorm() - a.squaredNorm());
  const double res_b = std::max(0.0, wtu1.squaredNorm() - b.squaredNorm());
  double acc = (res_a + res_b) / s1;

  for (Eigen::Index k = 1; k < p; ++k) {
    const double aa = a(k) * a(k);
    const double bb = b(k) * b(k);
    if (k < r) {
      const double sk = sv(k);
      acc += (s1 * (aa + bb) + 2.0 * sk * a(k) * b(k)) / (s1 * s1 - sk * sk);
    } else {
      acc += (aa + bb) / s1;
    }
  }
  return acc;
}

}  // namespace

double hessian_sigma_contraction(const SpectralState& ss, const NoiseModel& nm) {
  check_usable(ss, nm.dim(), "hessian_sigma_contraction", nm.layer);
  double total = 0.0;
  for (Eigen::Index i = 0; i < nm.omega.rows(); ++i) {
    total += hessian_direction_term(ss, nm.omega.row(i).data());
  }
  return total / static_cast<double>(nm.batch_size);
}

double hessian_quadratic_form(const SpectralState& ss,
                              const Eigen::Ref<const Vector>& delta) {
  check_usable(ss, delta.size(), "hessian_quadratic_form");
  return hessian_direction_term(ss, delta.data());
}

double jacobian_sigma_jacobian(const SpectralState& ss, const NoiseModel& nm) {
  if (nm.dim() != ss.rows * ss.cols) {
    throw ShapeError("jacobian_sigma_jacobian: dimension mismatch");
  }
  return sigma_quadratic_form(nm, op_norm_jacobian(ss));
}

}  // namespace lipdyn
