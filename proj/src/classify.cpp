#include "rfdl/classify.hpp"

#include <sstream>
#include <stdexcept>

namespace rfdl {

LabelMatrix build_label_matrix(const std::vector<int>& labels, Index c) {
    if (c < 1) throw std::invalid_argument("build_label_matrix: class count must be positive");
    LabelMatrix out;
    out.class_count = c;
    out.labels = labels;
    out.H = Matrix::Zero(c, static_cast<Index>(labels.size()));
    for (Index j = 0; j < out.H.cols(); ++j) {
        int l = labels[static_cast<size_t>(j)];
        if (l < 0 || l >= c) {
            std::ostringstream msg;
            msg << "build_label_matrix: label " << l << " outside [0, " << c << ")";
            throw std::invalid_argument(msg.str());
        }
        out.H(l, j) = 1.0;
    }
    return out;
}

LabelRegression fit_posthoc_classifier(const Matrix& P_star, const Matrix& X, const Matrix& H,
                                       double beta, double mu0, double eta, double mu_max,
                                       double eps, int max_iter) {
    if (P_star.cols() != X.rows())
        throw std::invalid_argument("fit_posthoc_classifier: projection/data dimension mismatch");
    if (H.cols() != X.cols())
        throw std::invalid_argument("fit_posthoc_classifier: label/sample count mismatch");
    LabelRegression fit =
        solve_label_regression(P_star * X, H, beta, mu0, eta, mu_max, eps, max_iter);
    if (!all_finite(fit.C) || !all_finite(fit.E))
        throw DivergenceError(static_cast<int>(fit.iterations),
                              "fit_posthoc_classifier: classifier left the trusted range at "
                              "iteration " +
                                  std::to_string(fit.iterations));
    return fit;
}

Vector embed(const Model& model, const Vector& x) {
    if (x.size() != model.P_star.cols())
        throw std::invalid_argument("embed: sample dimension does not match the projection");
    return model.P_star * x;
}

Matrix embed(const Model& model, const Matrix& X) {
    if (X.rows() != model.P_star.cols())
        throw std::invalid_argument("embed: sample dimension does not match the projection");
    return model.P_star * X;
}

Prediction predict(const Model& model, const Vector& x) {
    if (model.C_star.size() == 0)
        throw std::logic_error("predict: model carries no classifier");
    Prediction out;
    out.soft = model.C_star.transpose() * embed(model, x);
    out.hard = 0;
    for (Index i = 1; i < out.soft.size(); ++i)
        if (out.soft[i] > out.soft[out.hard]) out.hard = static_cast<int>(i);
    return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("accuracy: prediction/truth length mismatch");
    if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
    size_t hits = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace rfdl
