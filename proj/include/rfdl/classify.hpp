#pragma once

#include "rfdl/common.hpp"
#include "rfdl/dictsolve.hpp"
#include "rfdl/solver.hpp"

#include <vector>

namespace rfdl {

/// One-hot label matrix (classes x samples) plus the raw per-sample indices.
struct LabelMatrix {
    Matrix H;          ///< c x N, each column has exactly one 1
    Index class_count = 0;
    std::vector<int> labels;  ///< per-sample class indices, 0-based
};

/// Soft scores per class and the decided class index.
struct Prediction {
    Vector soft;   ///< length = class count
    int hard = 0;  ///< argmax of soft; ties go to the lowest class index
};

/// One-hot encode 0-based class indices.  Throws on any label outside [0, c).
LabelMatrix build_label_matrix(const std::vector<int>& labels, Index c);

/// Train a linear classifier on frozen embeddings P_star*X: minimize
/// ||E||_2,1 + beta*||C||_F^2 subject to H^T = X^T P_star^T C + E, by the
/// same penalty-schedule ALM as the main solver.  Throws DivergenceError if
/// the iterates leave the finite range.
LabelRegression fit_posthoc_classifier(const Matrix& P_star, const Matrix& X, const Matrix& H,
                                       double beta, double mu0 = 1e-6, double eta = 1.12,
                                       double mu_max = 1e6, double eps = 1e-7,
                                       int max_iter = 300);

/// Coefficient embedding of a single sample: P_star * x.
Vector embed(const Model& model, const Vector& x);

/// Column-wise embedding of a batch: P_star * X.
Matrix embed(const Model& model, const Matrix& X);

/// Soft scores C_star^T * P_star * x and the argmax class (lowest index wins
/// ties).  Throws if the model carries no classifier.
Prediction predict(const Model& model, const Vector& x);

/// Fraction of exact label matches.  Throws on length mismatch or empty input.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace rfdl
