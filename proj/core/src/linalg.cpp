#include "lipdyn/linalg.hpp"

#include <cmath>
#include <string>

namespace lipdyn {

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite entries");
  }
}

SvdFactors svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw ShapeError("svd: empty matrix");
  }
  require_finite(m, "svd input");

  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw DecompositionError("svd: did not converge for " + std::to_string(m.rows()) +
                             "x" + std::to_string(m.cols()) + " matrix");
  }

  SvdFactors f;
  f.singular_values = dec.singularValues();
  f.left_vectors = dec.matrixU();
  f.right_vectors = dec.matrixV();

  // Orientation: largest-magnitude entry of each u_i positive; flip v_i with it
  // so u_i v_i^T is unchanged.
  for (Eigen::Index i = 0; i < f.left_vectors.cols(); ++i) {
    Eigen::Index arg = 0;
    f.left_vectors.col(i).cwiseAbs().maxCoeff(&arg);
    if (f.left_vectors(arg, i) < 0.0) {
      f.left_vectors.col(i) = -f.left_vectors.col(i);
      f.right_vectors.col(i) = -f.right_vectors.col(i);
    }
  }

  const double s1 = f.singular_values(0);
  f.rank = 0;
  for (Eigen::Index i = 0; i < f.singular_values.size(); ++i) {
    if (f.singular_values(i) > kRankCutoff * s1) ++f.rank;
  }
  return f;
}

SymEig sym_eig(const Matrix& g) {
  if (g.rows() != g.cols()) {
    throw ShapeError("sym_eig: matrix is " + std::to_string(g.rows()) + "x" +
                     std::to_string(g.cols()) + ", expected square");
  }
  require_finite(g, "sym_eig input");

  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw DecompositionError("sym_eig: input asymmetric by " + std::to_string(asym));
  }

  Matrix s = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> dec(s);
  if (dec.info() != Eigen::Success) {
    throw DecompositionError("sym_eig: eigensolver failed on " +
                             std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
  }

  const Eigen::Index n = g.rows();
  SymEig e;
  e.eigenvalues = dec.eigenvalues().reverse();
  e.eigenvectors = dec.eigenvectors().rowwise().reverse();

  const double lmax = std::max(e.eigenvalues(0), 0.0);
  const double clamp_floor = -1e-12 * std::max(1.0, lmax);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (e.eigenvalues(i) < 0.0) {
      if (e.eigenvalues(i) < clamp_floor) {
        throw DecompositionError("sym_eig: eigenvalue " + std::to_string(e.eigenvalues(i)) +
                                 " below PSD repair tolerance");
      }
      e.eigenvalues(i) = 0.0;
    }
  }

  // Same orientation rule as svd(), for reproducible factors.
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    e.eigenvectors.col(i).cwiseAbs().maxCoeff(&arg);
    if (e.eigenvectors(arg, i) < 0.0) e.eigenvectors.col(i) = -e.eigenvectors.col(i);
  }
  return e;
}

}  // namespace lipdyn
