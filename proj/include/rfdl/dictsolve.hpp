// Closed-form block solves for the dictionary D, the analysis projection P,
// and the discriminative classifier blocks C and E of the joint solvers.
// All linear systems are symmetric positive (semi-)definite and solved via
// LDLT; tau is a small ridge keeping the data-side Gram factors invertible.
#pragma once

#include "rfdl/common.hpp"

namespace rfdl {

/// Unconstrained minimizer of the weighted coding residual over D:
///   D_raw = V^T X^T P^T (P X X^T P^T + tau I)^{-1}.
/// The row-weight diagonal premultiplies both sides of the normal equations
/// and cancels, so it does not appear.  Requires tau >= 0.
Matrix update_d_raw(const Matrix& V, const Matrix& X, const Matrix& P, double tau = 1e-6);

/// update_d_raw followed by rescaling every column to unit sum (the
/// dictionary's affine column constraint).  Throws std::runtime_error if any
/// pre-rescale column sum has magnitude below 1e-10 (degenerate column).
Matrix update_d(const Matrix& V, const Matrix& X, const Matrix& P, double tau = 1e-6);

/// Projection update of the plain joint solver: solves
///   (2a D^T Q D + 2 mu I) P (X X^T + tau I) = L,
///   L = 2a (X V Q D)^T - Y2 X^T - Y3 X^T + mu J X^T + mu S X^T.
Matrix update_p_jrfdl(const Matrix& D, const DiagWeights& Q, const Matrix& V, const Matrix& J,
                      const Matrix& S, const Matrix& Y2, const Matrix& Y3, const Matrix& X,
                      double mu, double alpha, double tau = 1e-6);

/// Projection update of the discriminative solver: the left factor gains
/// mu C C^T and the right side gains C Y4^T X^T + mu C H X^T - mu C E^T X^T.
Matrix update_p_djrfdl(const Matrix& D, const DiagWeights& Q, const Matrix& V, const Matrix& J,
                       const Matrix& S, const Matrix& Y2, const Matrix& Y3, const Matrix& C,
                       const Matrix& E, const Matrix& Y4, const Matrix& H, const Matrix& X,
                       double mu, double alpha, double tau = 1e-6);

/// Ridge-regularized classifier solve:
///   C = (PX (PX)^T + 2 beta I / mu)^{-1} (PX Y4 / mu + PX H^T - PX E).
/// Requires mu > 0.  With beta = 0 the system can be singular; that case is
/// detected and reported with a hint to use a positive beta.
Matrix update_c(const Matrix& PX, const Matrix& H, const Matrix& E, const Matrix& Y4, double mu,
                double beta);

/// Row-sparse classification-error update:
///   E = row_shrink(H^T - X^T P^T C + Y4 / mu, beta / mu).
/// Requires mu > 0; beta = 0 returns the unshrunk residual.
Matrix update_e(const Matrix& H, const Matrix& X, const Matrix& P, const Matrix& C,
                const Matrix& Y4, double mu, double beta);

/// Result of the small label-regression ALM below.
struct LabelRegression {
    Matrix C;  ///< K x c classifier
    Matrix E;  ///< N x c row-sparse residual
    int iterations = 0;
    bool converged = false;
};

/// Solve  min_{C,E} ||E||_{2,1} + beta*||C||_F^2  s.t.  H^T = (PX)^T C + E
/// by alternating the ridge C solve, the row prox of E (threshold 1/mu), and
/// the multiplier update, with the usual geometric mu schedule.  Used to
/// attach a classifier to an already-learned projection.  Requires beta > 0.
LabelRegression solve_label_regression(const Matrix& PX, const Matrix& H, double beta,
                                       double mu0 = 1e-6, double eta = 1.12,
                                       double mu_max = 1e6, double eps = 1e-7,
                                       int max_iter = 300);

}  // namespace rfdl
