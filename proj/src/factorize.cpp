#include "rfdl/factorize.hpp"

#include "rfdl/prox.hpp"

#include <stdexcept>

namespace rfdl {

namespace {

// Floor applied to both sides of every multiplicative ratio.  Keeps the
// updates defined when a denominator entry vanishes (or goes negative via
// the multiplier term) and preserves factor nonnegativity.
constexpr double kRatioFloor = 1e-12;

// The V-rule denominator contains the signed multiplier term Y1/2, which can
// cancel the nonnegative terms almost exactly.  An absolute floor alone then
// produces a near-zero denominator under a healthy numerator, i.e. a single
// multiplicative kick of many orders of magnitude that blows V (and then P)
// up.  Instead the signed term is never allowed to erase more than 90% of
// the nonnegative part, which bounds the per-step growth while leaving the
// update untouched whenever the multiplier is small or positive.
constexpr double kDenRelFloor = 0.1;

Matrix clamped_ratio(const Matrix& num, const Matrix& den) {
    return num.cwiseMax(kRatioFloor).cwiseQuotient(den.cwiseMax(kRatioFloor));
}

void require_nonneg(const Matrix& M, const char* who) {
    if (M.size() > 0 && M.minCoeff() < 0.0)
        throw std::invalid_argument(std::string(who) + ": matrix must be entrywise nonnegative");
}

}  // namespace

Matrix gram_matrix(const Matrix& X) {
    Matrix A = X.transpose() * X;
    return 0.5 * (A + A.transpose());
}

void cf_step(const Matrix& A, Matrix& W, Matrix& V) {
    if (A.rows() != A.cols() || A.rows() != W.rows() || W.rows() != V.rows() ||
        W.cols() != V.cols())
        throw std::invalid_argument("cf_step: inconsistent shapes");
    require_nonneg(A, "cf_step");
    require_nonneg(W, "cf_step");
    require_nonneg(V, "cf_step");

    W = W.cwiseProduct(clamped_ratio(A * V, A * W * (V.transpose() * V)));
    Matrix AW = A * W;
    V = V.cwiseProduct(clamped_ratio(AW, V * (W.transpose() * AW)));
}

void robust_wv_step(const Matrix& A, Matrix& W, Matrix& V, const DiagWeights& G,
                    const DiagWeights& Q, const Matrix& D, const Matrix& P, const Matrix& X,
                    const Matrix& F, const Matrix& Y1, double mu, double alpha) {
    const Index N = W.rows(), r = W.cols();
    if (A.rows() != N || A.cols() != N || V.rows() != N || V.cols() != r || G.size() != N ||
        Q.size() != r || F.rows() != N || F.cols() != r || Y1.rows() != N || Y1.cols() != r ||
        D.rows() != r || P.cols() != X.rows() || D.cols() != P.rows() || X.cols() != N)
        throw std::invalid_argument("robust_wv_step: inconsistent shapes");
    if (mu < 0.0 || alpha < 0.0)
        throw std::invalid_argument("robust_wv_step: mu and alpha must be nonnegative");

    Matrix GV = scale_rows(G, V);
    W = W.cwiseProduct(clamped_ratio(A * GV, A * W * (V.transpose() * GV)));

    // V rule with the common factor 2 divided out of numerator and
    // denominator; with alpha = mu = 0 and Y1 = 0 this reduces bitwise to the
    // plain cf_step V rule.
    Matrix AW = A * W;
    Matrix coding = ((D * P) * X).transpose();  // X^T P^T D^T, one column per factor
    Matrix num = scale_rows(G, AW) + alpha * scale_cols(coding, Q) + (0.5 * mu) * F;
    Matrix den_pos = scale_rows(G, V * (W.transpose() * AW)) + alpha * scale_cols(V, Q) +
                     (0.5 * mu) * V;
    Matrix den = (den_pos + 0.5 * Y1).cwiseMax(kDenRelFloor * den_pos);
    V = V.cwiseProduct(clamped_ratio(num, den));
}

DiagWeights update_g(const Matrix& X, const Matrix& W, const Matrix& V, double floor) {
    Matrix residual = X.transpose() - V * (W.transpose() * X.transpose());
    return reweight_diag(residual, floor);
}

}  // namespace rfdl
