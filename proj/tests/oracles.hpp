// Independent numeric minimizers for the proximal objectives.  These are
// deliberately implemented with different algorithms than the library
// (bracketed 1-D searches and alternating ridge solves instead of closed
// forms / SVD) so agreement is meaningful evidence of correctness.
#pragma once

#include <Eigen/Cholesky>

#include "rfdl/common.hpp"

#include <cmath>
#include <random>

namespace rfdl::test {

/// Minimize a convex scalar function on [lo, hi] by ternary search.
template <typename F>
double ternary_min(F f, double lo, double hi, int iters = 200) {
    for (int k = 0; k < iters; ++k) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (f(m1) <= f(m2))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

/// Entrywise brute-force minimizer of tau*|y| + 1/2*(y - m)^2.
inline Matrix oracle_soft_threshold(const Matrix& M, double tau) {
    Matrix out(M.rows(), M.cols());
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j) {
            double m = M(i, j);
            double lo = -std::abs(m) - 1.0, hi = std::abs(m) + 1.0;
            out(i, j) = ternary_min(
                [tau, m](double y) { return tau * std::abs(y) + 0.5 * (y - m) * (y - m); }, lo, hi);
        }
    return out;
}

/// Row-wise brute-force minimizer of tau*||y||_2 + 1/2*||y - m||_2^2 via a
/// 1-D line search on the scaling factor along each input row.
inline Matrix oracle_row_shrink(const Matrix& M, double tau) {
    Matrix out = Matrix::Zero(M.rows(), M.cols());
    for (Index i = 0; i < M.rows(); ++i) {
        double norm = M.row(i).norm();
        if (norm == 0.0) continue;
        double s = ternary_min(
            [tau, norm](double t) {
                return tau * std::abs(t) * norm + 0.5 * (t - 1.0) * (t - 1.0) * norm * norm;
            },
            -0.5, 2.0);
        out.row(i) = s * M.row(i);
    }
    return out;
}

/// Factored-form minimizer of tau*||Y||_* + 1/2*||Y - M||_F^2 using the
/// variational identity ||Y||_* = min_{Y=AB} (||A||_F^2 + ||B||_F^2)/2 and
/// alternating ridge-regression solves for A and B.  No SVD involved.
inline Matrix oracle_nuclear_prox(const Matrix& M, double tau, unsigned seed = 1234,
                                  int iters = 4000) {
    const Index p = std::min(M.rows(), M.cols());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix A(M.rows(), p), B(p, M.cols());
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = gauss(rng);
    for (Index i = 0; i < B.size(); ++i) B.data()[i] = gauss(rng);
    Matrix I = Matrix::Identity(p, p);
    Matrix prev = A * B;
    for (int k = 0; k < iters; ++k) {
        // A-step: min_A tau/2*||A||^2 + 1/2*||AB - M||^2
        A = (M * B.transpose()) * (B * B.transpose() + tau * I).ldlt().solve(I);
        // B-step: min_B tau/2*||B||^2 + 1/2*||AB - M||^2
        B = (A.transpose() * A + tau * I).ldlt().solve(A.transpose() * M);
        Matrix Y = A * B;
        if ((Y - prev).cwiseAbs().maxCoeff() < 1e-14) return Y;
        prev = Y;
    }
    return prev;
}

/// Value of the prox objective tau*penalty(Y) + 1/2*||Y - M||_F^2.
template <typename Penalty>
double prox_objective(const Matrix& Y, const Matrix& M, double tau, Penalty penalty) {
    return tau * penalty(Y) + 0.5 * (Y - M).squaredNorm();
}

}  // namespace rfdl::test
