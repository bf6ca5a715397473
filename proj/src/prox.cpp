#include "rfdl/prox.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace rfdl {

namespace {

void require_nonnegative(double tau, const char* who) {
    if (!(tau >= 0.0))
        throw std::invalid_argument(std::string(who) + ": threshold must be nonnegative");
}

}  // namespace

double l21_norm(const Matrix& M) {
    return M.rowwise().norm().sum();
}

double nuclear_norm(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    return M.jacobiSvd().singularValues().sum();
}

Matrix soft_threshold(const Matrix& M, double tau) {
    require_nonnegative(tau, "soft_threshold");
    return M.unaryExpr([tau](double m) {
        double shrunk = std::abs(m) - tau;
        return shrunk > 0.0 ? (m > 0.0 ? shrunk : -shrunk) : 0.0;
    });
}

Matrix svt(const Matrix& M, double tau) {
    require_nonnegative(tau, "svt");
    if (M.size() == 0) return M;
    // JacobiSVD, not BDCSVD: BDCSVD's deflation path reads out of bounds on
    // matrices with tightly clustered singular values (near-duplicate
    // columns), which silently corrupts the factors in release builds.  The
    // inputs here routinely have that structure.
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector sigma = svd.singularValues();
    for (Index i = 0; i < sigma.size(); ++i)
        sigma[i] = std::max(sigma[i] - tau, 0.0);
    return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

Matrix row_shrink(const Matrix& M, double tau) {
    require_nonnegative(tau, "row_shrink");
    Matrix out = M;
    for (Index i = 0; i < M.rows(); ++i) {
        double norm = M.row(i).norm();
        if (norm == 0.0) continue;
        double scale = std::max(1.0 - tau / norm, 0.0);
        out.row(i) *= scale;
    }
    return out;
}

DiagWeights reweight_diag(const Matrix& M, double floor) {
    if (!(floor > 0.0))
        throw std::invalid_argument("reweight_diag: floor must be positive");
    DiagWeights w;
    w.values.resize(M.rows());
    for (Index i = 0; i < M.rows(); ++i)
        w.values[i] = 1.0 / (2.0 * std::max(M.row(i).norm(), floor));
    return w;
}

}  // namespace rfdl
