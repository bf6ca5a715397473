// Concept-factorization updates: the plain multiplicative rules and the
// robust reweighted variant used inside the joint solvers.  Both act on the
// nonnegative factor pair (W, V) of X ~ X W V^T through the Gram matrix
// A = X^T X.
#pragma once

#include "rfdl/common.hpp"

namespace rfdl {

/// Gram matrix X^T X, symmetrized to guard against round-off asymmetry.
Matrix gram_matrix(const Matrix& X);

/// One plain multiplicative update of the factor pair:
///   w <- w * (A V) / (A W V^T V), then v <- v * (A W) / (V W^T A W)
/// using the freshly updated W in the second rule.  Requires A, W, V
/// entrywise nonnegative and consistent shapes.  Ratios are clamped (see
/// robust_wv_step) so zero denominators cannot produce NaNs.
void cf_step(const Matrix& A, Matrix& W, Matrix& V);

/// One robust reweighted update of (W, V):
///   w <- w * (A G V) / (A W V^T G V)
///   v <- v * (2 G A W + 2a X^T P^T D^T Q + mu F)
///          / (2 G V W^T A W + 2a V Q + Y1 + mu V)
/// with W updated first and reused in the V rule.  G holds the row weights of
/// the factorization residual (size N), Q the row weights of the coding
/// residual (size r).  Y1 is signed: the denominator keeps at least 10% of
/// its nonnegative part so the multiplier cannot flip its sign, and both
/// sides of the ratio are floored at 1e-12 before dividing; this preserves
/// nonnegativity and bounds the per-step growth of V.  With Y1 = 0 the rule
/// is bitwise identical to the unguarded version.  Requires mu >= 0 and
/// alpha >= 0.
void robust_wv_step(const Matrix& A, Matrix& W, Matrix& V, const DiagWeights& G,
                    const DiagWeights& Q, const Matrix& D, const Matrix& P, const Matrix& X,
                    const Matrix& F, const Matrix& Y1, double mu, double alpha);

/// Row weights of the factorization residual X^T - V W^T X^T (one weight per
/// sample), floored as in reweight_diag.
DiagWeights update_g(const Matrix& X, const Matrix& W, const Matrix& V, double floor = 1e-8);

}  // namespace rfdl
