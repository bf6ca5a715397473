#include "rfdl/dictsolve.hpp"

#include "rfdl/prox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace rfdl {

namespace {

constexpr double kDegenerateColumnSum = 1e-10;

void require_tau(double tau) {
    if (tau < 0.0) throw std::invalid_argument("dictionary solve: tau must be nonnegative");
}

void require_mu_positive(double mu, const char* who) {
    if (!(mu > 0.0)) throw std::invalid_argument(std::string(who) + ": mu must be positive");
}

/// Solve A * P * B = L for P with symmetric A (K x K) and B (n x n).
Matrix sandwich_solve(const Matrix& A, const Matrix& B, const Matrix& L) {
    Matrix half = A.ldlt().solve(L);                    // A^{-1} L
    return B.ldlt().solve(half.transpose()).transpose();  // ... B^{-1}
}

}  // namespace

Matrix update_d_raw(const Matrix& V, const Matrix& X, const Matrix& P, double tau) {
    require_tau(tau);
    if (P.cols() != X.rows() || V.rows() != X.cols())
        throw std::invalid_argument("update_d: inconsistent shapes");
    Matrix PX = P * X;  // K x N
    Matrix A = PX * PX.transpose();
    A.diagonal().array() += tau;
    // D_raw^T = (P X X^T P^T + tau I)^{-1} (P X) V
    return A.ldlt().solve(PX * V).transpose();
}

Matrix update_d(const Matrix& V, const Matrix& X, const Matrix& P, double tau) {
    Matrix D = update_d_raw(V, X, P, tau);
    for (Index j = 0; j < D.cols(); ++j) {
        double sum = D.col(j).sum();
        if (std::abs(sum) < kDegenerateColumnSum)
            throw std::runtime_error("update_d: degenerate dictionary column " +
                                     std::to_string(j) + " (column sum below 1e-10)");
        D.col(j) /= sum;
    }
    return D;
}

Matrix update_p_jrfdl(const Matrix& D, const DiagWeights& Q, const Matrix& V, const Matrix& J,
                      const Matrix& S, const Matrix& Y2, const Matrix& Y3, const Matrix& X,
                      double mu, double alpha, double tau) {
    require_tau(tau);
    const Index K = D.cols(), n = X.rows();
    if (Q.size() != D.rows() || V.cols() != D.rows() || J.rows() != K || S.rows() != K ||
        Y2.rows() != K || Y3.rows() != K || J.cols() != X.cols())
        throw std::invalid_argument("update_p: inconsistent shapes");

    Matrix A = 2.0 * alpha * (D.transpose() * scale_rows(Q, D));
    A.diagonal().array() += 2.0 * mu;

    Matrix B = X * X.transpose();
    B.diagonal().array() += tau;

    Matrix L = 2.0 * alpha * (X * scale_cols(V, Q) * D).transpose() +
               (mu * J - Y2 + mu * S - Y3) * X.transpose();
    return sandwich_solve(A, B, L);
}

Matrix update_p_djrfdl(const Matrix& D, const DiagWeights& Q, const Matrix& V, const Matrix& J,
                       const Matrix& S, const Matrix& Y2, const Matrix& Y3, const Matrix& C,
                       const Matrix& E, const Matrix& Y4, const Matrix& H, const Matrix& X,
                       double mu, double alpha, double tau) {
    require_tau(tau);
    const Index K = D.cols();
    if (C.rows() != K || C.cols() != H.rows() || E.rows() != X.cols() || E.cols() != H.rows() ||
        Y4.rows() != E.rows() || Y4.cols() != E.cols() || H.cols() != X.cols())
        throw std::invalid_argument("update_p: inconsistent classifier shapes");

    Matrix A = 2.0 * alpha * (D.transpose() * scale_rows(Q, D)) + mu * (C * C.transpose());
    A.diagonal().array() += 2.0 * mu;

    Matrix B = X * X.transpose();
    B.diagonal().array() += tau;

    Matrix L = 2.0 * alpha * (X * scale_cols(V, Q) * D).transpose() +
               (mu * J - Y2 + mu * S - Y3) * X.transpose() +
               C * (Y4.transpose() * X.transpose()) + mu * C * (H - E.transpose()) * X.transpose();
    return sandwich_solve(A, B, L);
}

Matrix update_c(const Matrix& PX, const Matrix& H, const Matrix& E, const Matrix& Y4, double mu,
                double beta) {
    require_mu_positive(mu, "update_c");
    if (beta < 0.0) throw std::invalid_argument("update_c: beta must be nonnegative");
    if (E.rows() != PX.cols() || Y4.rows() != PX.cols() || H.cols() != PX.cols() ||
        E.cols() != H.rows() || Y4.cols() != H.rows())
        throw std::invalid_argument("update_c: inconsistent shapes");

    Matrix A = PX * PX.transpose();
    A.diagonal().array() += 2.0 * beta / mu;
    Matrix rhs = PX * (Y4 / mu + H.transpose() - E);
    if (beta == 0.0) {
        Eigen::FullPivLU<Matrix> lu(A);
        if (!lu.isInvertible())
            throw std::runtime_error(
                "update_c: coefficient Gram matrix is singular with beta = 0; "
                "use beta > 0 to add a ridge");
        return lu.solve(rhs);
    }
    return A.ldlt().solve(rhs);
}

Matrix update_e(const Matrix& H, const Matrix& X, const Matrix& P, const Matrix& C,
                const Matrix& Y4, double mu, double beta) {
    require_mu_positive(mu, "update_e");
    if (beta < 0.0) throw std::invalid_argument("update_e: beta must be nonnegative");
    Matrix residual = H.transpose() - X.transpose() * (P.transpose() * C) + Y4 / mu;
    return row_shrink(residual, beta / mu);
}

LabelRegression solve_label_regression(const Matrix& PX, const Matrix& H, double beta,
                                       double mu0, double eta, double mu_max, double eps,
                                       int max_iter) {
    if (!(beta > 0.0))
        throw std::invalid_argument("solve_label_regression: beta must be positive");
    if (!(mu0 > 0.0) || !(eta > 1.0) || mu_max < mu0 || !(eps > 0.0) || max_iter < 1)
        throw std::invalid_argument("solve_label_regression: bad schedule parameters");
    if (H.cols() != PX.cols())
        throw std::invalid_argument("solve_label_regression: label/sample count mismatch");

    const Index N = PX.cols(), c = H.rows();
    LabelRegression out;
    out.C = Matrix::Zero(PX.rows(), c);
    out.E = Matrix::Zero(N, c);
    Matrix Y = Matrix::Zero(N, c);
    double mu = mu0;
    for (int it = 1; it <= max_iter; ++it) {
        out.C = update_c(PX, H, out.E, Y, mu, beta);
        out.E = row_shrink(H.transpose() - PX.transpose() * out.C + Y / mu, 1.0 / mu);
        Matrix R = H.transpose() - PX.transpose() * out.C - out.E;
        Y += mu * R;
        mu = std::min(eta * mu, mu_max);
        out.iterations = it;
        if (max_abs(R) <= eps) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace rfdl
