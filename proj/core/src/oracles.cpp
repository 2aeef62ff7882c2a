#include "lipdyn/oracles.hpp"

#include <Eigen/SVD>

namespace lipdyn::oracle {

Matrix dense_sigma(const RowMatrix& per_sample_rows) {
  const Eigen::Index m = per_sample_rows.rows();
  const Eigen::Index d = per_sample_rows.cols();
  if (m < 2) throw ShapeError("dense_sigma: need at least 2 samples");
  Vector mean = Vector::Zero(d);
  for (Eigen::Index i = 0; i < m; ++i) mean += per_sample_rows.row(i).transpose();
  mean /= static_cast<double>(m);
  Matrix sigma = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector dev = per_sample_rows.row(i).transpose() - mean;
    sigma += dev * dev.transpose();
  }
  sigma /= static_cast<double>(m - 1);
  sigma /= static_cast<double>(m);
  return sigma;
}

double sigma1_of(const Matrix& theta) {
  return Eigen::JacobiSVD<Matrix>(theta).singularValues()(0);
}

Matrix dense_operator_norm_hessian(const Matrix& theta) {
  const Eigen::Index m = theta.rows();
  const Eigen::Index n = theta.cols();
  const Eigen::Index p = std::min(m, n);

  Eigen::JacobiSVD<Matrix> dec(theta, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = dec.matrixU();  // m x m
  const Matrix& v = dec.matrixV();  // n x n
  const Vector& sv = dec.singularValues();
  const double s1 = sv(0);
  if (s1 <= 0.0) throw NumericError("dense_operator_norm_hessian: sigma1 = 0");

  auto sval = [&](Eigen::Index i) { return i < p ? sv(i) : 0.0; };
  auto basis = [&](Eigen::Index vi, Eigen::Index uj) {
    Matrix outer = u.col(uj) * v.col(vi).transpose();
    return Vector(Eigen::Map<const Vector>(outer.data(), outer.size()));
  };

  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (sv(i) > kRankCutoff * s1) ++rank;
  }

  Matrix h = Matrix::Zero(m * n, m * n);
  for (Eigen::Index i = 1; i < m; ++i) {
    const Vector e = basis(0, i);
    h += s1 / (s1 * s1 - sval(i) * sval(i)) * (e * e.transpose());
  }
  for (Eigen::Index j = 1; j < n; ++j) {
    const Vector e = basis(j, 0);
    h += s1 / (s1 * s1 - sval(j) * sval(j)) * (e * e.transpose());
  }
  for (Eigen::Index k = 1; k < rank; ++k) {
    const Vector e1k = basis(k, 0);
    const Vector ek1 = basis(0, k);
    h += sv(k) / (s1 * s1 - sv(k) * sv(k)) *
         (e1k * ek1.transpose() + ek1 * e1k.transpose());
  }
  return h;
}

double fd_sigma1_directional(const Matrix& theta, const Matrix& direction, double h) {
  return (sigma1_of(theta + h * direction) - sigma1_of(theta - h * direction)) /
         (2.0 * h);
}

Matrix fd_sigma1_hessian(const Matrix& theta, double h) {
  const Eigen::Index d = theta.size();
  Matrix out(d, d);
  auto bump = [&](Eigen::Index a, double ha, Eigen::Index b, double hb) {
    Matrix t = theta;
    t.data()[a] += ha;
    t.data()[b] += hb;
    return sigma1_of(t);
  };
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double val;
      if (a == b) {
        val = (bump(a, h, a, 0) - 2.0 * sigma1_of(theta) + bump(a, -h, a, 0)) / (h * h);
      } else {
        val = (bump(a, h, b, h) - bump(a, h, b, -h) - bump(a, -h, b, h) +
               bump(a, -h, b, -h)) /
              (4.0 * h * h);
      }
      out(a, b) = val;
      out(b, a) = val;
    }
  }
  return out;
}

double fd_loss_weight_derivative(const MlpState& state, const Matrix& inputs,
                                 const std::vector<int>& labels, Loss loss,
                                 int layer, Eigen::Index row, Eigen::Index col,
                                 double h) {
  SupervisionNoise clean;
  Rng scratch(0);
  MlpState plus = state;
  plus.weights[static_cast<std::size_t>(layer)](row, col) += h;
  MlpState minus = state;
  minus.weights[static_cast<std::size_t>(layer)](row, col) -= h;
  const double lp = batch_gradients(plus, inputs, labels, clean, scratch, loss).mean_loss;
  const double lm = batch_gradients(minus, inputs, labels, clean, scratch, loss).mean_loss;
  return (lp - lm) / (2.0 * h);
}

}  // namespace lipdyn::oracle
