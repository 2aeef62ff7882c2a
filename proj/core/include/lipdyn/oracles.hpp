#pragma once

#include "lipdyn/mlp.hpp"
#include "lipdyn/noise.hpp"

// Dense, brute-force reference implementations for cross-checking the
// low-rank and structured paths at tiny scale. Deliberately independent of
// the code they check: the covariance is assembled entry by entry, the
// Hessian from its full-basis definition, derivatives from central
// differences. Only usable where (m*n)^2 storage is nothing.
namespace lipdyn::oracle {

// Sample covariance of the mini-batch mean gradient, assembled densely from
// raw (uncentered) per-sample gradient rows:
//   (1/M) * (1/(M-1)) * sum_i (g_i - mean)(g_i - mean)^T.
Matrix dense_sigma(const RowMatrix& per_sample_rows);

// Largest singular value via Eigen's Jacobi SVD (values only).
double sigma1_of(const Matrix& theta);

// Operator-norm Hessian of sigma1 as a full (mn x mn) matrix. Built from the
// complete orthonormal bases: with e_{i,j} = vec(u_j v_i^T),
//   H = sum_{i!=1}^{m} s1/(s1^2-s_i^2) e_{1,i} e_{1,i}^T
//     + sum_{j!=1}^{n} s1/(s1^2-s_j^2) e_{j,1} e_{j,1}^T
//     + sum_{k!=1}^{r} s_k/(s1^2-s_k^2) (e_{1,k} e_{k,1}^T + e_{k,1} e_{1,k}^T),
// singular values beyond min(m,n) taken as zero.
Matrix dense_operator_norm_hessian(const Matrix& theta);

// (sigma1(theta + h D) - sigma1(theta - h D)) / (2h).
double fd_sigma1_directional(const Matrix& theta, const Matrix& direction, double h);

// Full finite-difference Hessian of sigma1 (central, O(h^2)); tiny shapes only.
Matrix fd_sigma1_hessian(const Matrix& theta, double h);

// Central finite difference of the mean data loss with respect to a single
// weight entry.
double fd_loss_weight_derivative(const MlpState& state, const Matrix& inputs,
                                 const std::vector<int>& labels, Loss loss,
                                 int layer, Eigen::Index row, Eigen::Index col,
                                 double h);

}  // namespace lipdyn::oracle
