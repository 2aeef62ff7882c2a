#include "lipdyn/noise.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace lipdyn {

namespace {

void check_dim(const NoiseModel& nm, const Eigen::Ref<const Vector>& x,
               const char* op) {
  if (x.size() != nm.dim()) {
    throw ShapeError(std::string(op) + ": vector length " + std::to_string(x.size()) +
                     " != " + std::to_string(nm.dim()));
  }
}

}  // namespace

NoiseModel build_noise_model(PerSampleGradBatch grads) {
  const Eigen::Index m = grads.rows.rows();
  if (m < 2) {
    throw ShapeError("build_noise_model: need batch size >= 2, got " +
                     std::to_string(m));
  }
  NoiseModel nm;
  nm.layer = grads.layer;
  nm.batch_size = static_cast<int>(m);
  nm.omega = std::move(grads.rows);

  const Eigen::RowVectorXd mean = nm.omega.colwise().mean();
  nm.omega.rowwise() -= mean;
  nm.omega /= std::sqrt(static_cast<double>(m - 1));

  Matrix gram = (nm.omega * nm.omega.transpose()) / static_cast<double>(m);
  gram = 0.5 * (gram + gram.transpose());
  SymEig eig = sym_eig(gram);
  nm.gram_eigenvalues = std::move(eig.eigenvalues);
  nm.gram_eigenvectors = std::move(eig.eigenvectors);
  return nm;
}

double sigma_quadratic_form(const NoiseModel& nm, const Eigen::Ref<const Vector>& x) {
  check_dim(nm, x, "sigma_quadratic_form");
  return (nm.omega * x).squaredNorm() / static_cast<double>(nm.batch_size);
}

double sigma_bilinear_form(const NoiseModel& nm, const Eigen::Ref<const Vector>& x,
                           const Eigen::Ref<const Vector>& y) {
  check_dim(nm, x, "sigma_bilinear_form");
  check_dim(nm, y, "sigma_bilinear_form");
  return (nm.omega * x).dot(nm.omega * y) / static_cast<double>(nm.batch_size);
}

Vector variance_diagonal(const NoiseModel& nm) {
  return nm.omega.colwise().squaredNorm().transpose() /
         static_cast<double>(nm.batch_size);
}

double covariance_quadratic_form(const NoiseModel& nm,
                                 const Eigen::Ref<const Vector>& x) {
  check_dim(nm, x, "covariance_quadratic_form");
  const double full = sigma_quadratic_form(nm, x);
  const double diag =
      (nm.omega.cwiseProduct(nm.omega) * x.cwiseProduct(x)).sum() /
      static_cast<double>(nm.batch_size);
  return full - diag;
}

Vector sqrt_apply(const NoiseModel& nm, const Eigen::Ref<const Vector>& z) {
  check_dim(nm, z, "sqrt_apply");
  const Eigen::Index m = nm.batch_size;
  const double lmax = nm.gram_eigenvalues.size() > 0 ? nm.gram_eigenvalues(0) : 0.0;
  if (lmax <= 0.0) return Vector::Zero(nm.dim());
  const double cutoff = 1e-12 * lmax;

  // P Lambda^{1/2} P^T z collapses to Omega^T [U diag(1/(M sqrt(lambda_i))) U^T] Omega z
  // on the kept eigenpairs, so only M-sized intermediates appear.
  const Vector w = nm.omega * z;
  Vector coef = nm.gram_eigenvectors.transpose() * w;
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    const double lam = nm.gram_eigenvalues(i);
    coef(i) = (lam > cutoff) ? coef(i) / (static_cast<double>(m) * std::sqrt(lam)) : 0.0;
  }
  const Vector v = nm.gram_eigenvectors * coef;
  return nm.omega.transpose() * v;
}

}  // namespace lipdyn
