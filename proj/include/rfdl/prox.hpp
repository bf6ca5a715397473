// Proximal operators and norms for the L1 / L2,1 / nuclear penalties used by
// the robust factorization solvers.
#pragma once

#include "rfdl/common.hpp"

namespace rfdl {

/// Sum of Euclidean norms of the rows of M (the L2,1 norm).
double l21_norm(const Matrix& M);

/// Sum of the singular values of M (the nuclear norm).
double nuclear_norm(const Matrix& M);

/// Entrywise soft threshold: sgn(m) * max(|m| - tau, 0).
/// Solves min_Y tau*||Y||_1 + 1/2*||Y - M||_F^2.  Requires tau >= 0.
Matrix soft_threshold(const Matrix& M, double tau);

/// Singular value thresholding: U * shrink(Sigma, tau) * V^T.
/// Solves min_Y tau*||Y||_* + 1/2*||Y - M||_F^2.  Requires tau >= 0.
Matrix svt(const Matrix& M, double tau);

/// Row-wise shrinkage: row_i <- max(1 - tau/||row_i||_2, 0) * row_i, with
/// zero rows left untouched.  Solves min_Y tau*||Y||_{2,1} + 1/2*||Y - M||_F^2.
/// Requires tau >= 0.
Matrix row_shrink(const Matrix& M, double tau);

/// Diagonal reweighting for the L2,1 majorizer: weight_i =
/// 1 / (2 * max(||row_i||_2, floor)).  The floor keeps weights finite when a
/// row vanishes.  Requires floor > 0.
DiagWeights reweight_diag(const Matrix& M, double floor = 1e-8);

}  // namespace rfdl
