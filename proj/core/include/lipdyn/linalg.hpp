#pragma once

#include <Eigen/Dense>

#include "lipdyn/errors.hpp"

namespace lipdyn {

// Dense column-major doubles throughout. vec() of a matrix always means
// column-major flattening; Eigen's default layout makes Map<> the inverse.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Row-major variant for sample-per-row gradient batches, so each vectorized
// per-sample gradient is contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Singular values below kRankCutoff * sigma1 count as zero.
inline constexpr double kRankCutoff = 1e-12;

struct SvdFactors {
  Vector singular_values;  // length min(m,n), nonincreasing, >= 0
  Matrix left_vectors;     // m x min(m,n), orthonormal columns u_i
  Matrix right_vectors;    // n x min(m,n), orthonormal columns v_i
  Eigen::Index rank;       // count of singular values > kRankCutoff * sigma1
};

// Thin SVD with a deterministic orientation: the largest-magnitude entry of
// each u_i is made positive (v_i flipped jointly).
SvdFactors svd(const Matrix& m);

struct SymEig {
  Vector eigenvalues;   // nonincreasing, clamped at 0 (PSD repair)
  Matrix eigenvectors;  // orthonormal columns, same order
};

// Eigendecomposition of a symmetric PSD matrix. Inputs asymmetric beyond
// 1e-10 (max abs deviation) are rejected; eigenvalues in
// [-1e-12 * max(1, lambda_max), 0) are clamped to 0, anything lower throws.
SymEig sym_eig(const Matrix& g);

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

}  // namespace lipdyn
