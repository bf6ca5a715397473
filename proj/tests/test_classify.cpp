#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rfdl/classify.hpp"

#include "test_util.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace rfdl;
using test::random_matrix;
using test::random_nonneg;

namespace {

// Samples whose first `classes` feature rows carry a strong one-hot class
// bump, so the identity-padded embedding below is linearly separable with a
// wide margin by construction.
Matrix bump_data(Index n, Index per_class, Index classes, double bump, double sigma,
                 unsigned seed, std::vector<int>* labels = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Matrix X(n, per_class * classes);
    for (Index c = 0; c < classes; ++c)
        for (Index j = 0; j < per_class; ++j) {
            Index col = c * per_class + j;
            for (Index i = 0; i < n; ++i)
                X(i, col) = std::max((i == c ? bump : 0.0) + noise(rng), 0.0);
            if (labels) labels->push_back(static_cast<int>(c));
        }
    return X;
}

// K x n projection selecting the first K coordinates.
Matrix identity_padded(Index K, Index n) {
    Matrix P = Matrix::Zero(K, n);
    for (Index i = 0; i < K; ++i) P(i, i) = 1.0;
    return P;
}

double l21_norm(const Matrix& M) {
    double s = 0.0;
    for (Index i = 0; i < M.rows(); ++i) s += M.row(i).norm();
    return s;
}

}  // namespace

TEST_CASE("build_label_matrix one-hot encodes and validates") {
    LabelMatrix lm = build_label_matrix({0, 1, 0}, 2);
    Matrix want(2, 3);
    want << 1, 0, 1, 0, 1, 0;
    CHECK((lm.H - want).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lm.class_count == 2);
    CHECK(lm.labels == std::vector<int>{0, 1, 0});

    CHECK_THROWS_AS(build_label_matrix({0, 5, 1}, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_label_matrix({-1}, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_label_matrix({0}, 0), std::invalid_argument);

    // Property: every column has exactly one 1 and sums to 1.
    std::mt19937_64 rng(901);
    for (int rep = 0; rep < 100; ++rep) {
        Index c = 2 + static_cast<Index>(rng() % 5);
        std::vector<int> labels(10 + rng() % 40);
        for (auto& l : labels) l = static_cast<int>(rng() % static_cast<unsigned>(c));
        LabelMatrix m = build_label_matrix(labels, c);
        for (Index j = 0; j < m.H.cols(); ++j) {
            CHECK(m.H.col(j).sum() == 1.0);
            CHECK(m.H.col(j).maxCoeff() == 1.0);
            CHECK(m.H.col(j).minCoeff() == 0.0);
            CHECK(m.H(labels[static_cast<size_t>(j)], j) == 1.0);
        }
    }
}

TEST_CASE("fit_posthoc_classifier separates constructed embeddings exactly") {
    std::vector<int> labels;
    Matrix X = bump_data(12, 10, 3, 10.0, 0.05, 902, &labels);
    Matrix P = identity_padded(5, 12);
    LabelMatrix lm = build_label_matrix(labels, 3);

    LabelRegression fit = fit_posthoc_classifier(P, X, lm.H, 1e-3);
    CHECK(fit.converged);
    // Constraint feasibility at convergence.
    Matrix R = lm.H.transpose() - X.transpose() * P.transpose() * fit.C - fit.E;
    CHECK(R.cwiseAbs().maxCoeff() <= 1e-6);

    Model m;
    m.P_star = P;
    m.C_star = fit.C;
    m.classes = 3;
    std::vector<int> hard;
    for (Index j = 0; j < X.cols(); ++j) hard.push_back(predict(m, X.col(j)).hard);
    CHECK(accuracy(hard, labels) == 1.0);
}

TEST_CASE("fit_posthoc_classifier beats the trivial feasible point and shrinks with beta") {
    std::vector<int> labels;
    Matrix X = bump_data(10, 8, 3, 4.0, 0.3, 903, &labels);
    Matrix P = identity_padded(6, 10);
    LabelMatrix lm = build_label_matrix(labels, 3);

    for (double beta : {1e-3, 1e-1, 1.0}) {
        LabelRegression fit = fit_posthoc_classifier(P, X, lm.H, beta);
        double at_fit = l21_norm(fit.E) + beta * fit.C.squaredNorm();
        // C = 0, E = H^T is feasible; the solver must do at least as well.
        double at_zero = l21_norm(lm.H.transpose());
        CHECK(at_fit <= at_zero * (1.0 + 1e-9));
    }

    double small_beta = fit_posthoc_classifier(P, X, lm.H, 1.0).C.norm();
    double large_beta = fit_posthoc_classifier(P, X, lm.H, 1e6).C.norm();
    CHECK(large_beta < small_beta);
    CHECK(large_beta <= 1e-3 * std::max(1.0, small_beta));
}

TEST_CASE("fit_posthoc_classifier validates its inputs") {
    Matrix P = identity_padded(3, 8);
    Matrix X = Matrix::Ones(8, 4);
    Matrix H = Matrix::Ones(2, 4);
    CHECK_THROWS_AS(fit_posthoc_classifier(P, X, H, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fit_posthoc_classifier(P, Matrix::Ones(9, 4), H, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_posthoc_classifier(P, X, Matrix::Ones(2, 5), 1.0),
                    std::invalid_argument);
}

TEST_CASE("embed applies the projection per sample and per batch") {
    Model m;
    m.P_star = identity_padded(4, 9);

    std::mt19937_64 rng(904);
    Matrix X = random_matrix(rng, 9, 7);
    CHECK((embed(m, Vector(X.col(0))) - X.col(0).head(4)).cwiseAbs().maxCoeff() == 0.0);

    // Linearity and batch consistency on random projections.
    for (int rep = 0; rep < 50; ++rep) {
        Model r;
        r.P_star = random_matrix(rng, 3 + rep % 4, 9);
        Matrix B = embed(r, X);
        double gauge = std::max(1.0, B.cwiseAbs().maxCoeff());
        for (Index j = 0; j < X.cols(); ++j) {
            // Batch and per-sample products may use different BLAS kernels;
            // agreement is to rounding, not bitwise.
            CHECK((B.col(j) - embed(r, Vector(X.col(j)))).cwiseAbs().maxCoeff() <= 1e-14 * gauge);
            Vector twice = embed(r, Vector(2.0 * X.col(j)));
            CHECK((twice - 2.0 * B.col(j)).cwiseAbs().maxCoeff() <= 1e-12 * twice.cwiseAbs().maxCoeff());
        }
    }
    CHECK_THROWS_AS(embed(m, Vector(Vector::Ones(5))), std::invalid_argument);
    CHECK_THROWS_AS(embed(m, Matrix(Matrix::Ones(5, 2))), std::invalid_argument);
}

TEST_CASE("predict takes the argmax with lowest-index tie-break") {
    // C_star^T P_star x = x's first entries; steer scores directly.
    Model m;
    m.P_star = identity_padded(3, 3);
    m.C_star = Matrix::Identity(3, 3);
    m.classes = 3;

    Vector x(3);
    x << 0.1, 0.9, 0.0;
    Prediction p = predict(m, x);
    CHECK(p.hard == 1);
    CHECK(p.soft.size() == 3);
    CHECK(p.soft[1] == doctest::Approx(0.9));

    x << 0.5, 0.5, 0.0;
    CHECK(predict(m, x).hard == 0);
    x << 0.0, 0.0, 0.0;
    CHECK(predict(m, x).hard == 0);

    // Positive rescaling of the classifier leaves hard labels unchanged.
    std::mt19937_64 rng(905);
    for (int rep = 0; rep < 100; ++rep) {
        Model r;
        r.P_star = random_matrix(rng, 4, 6);
        r.C_star = random_matrix(rng, 4, 5);
        r.classes = 5;
        Vector v = random_matrix(rng, 6, 1).col(0);
        int base = predict(r, v).hard;
        Model scaled = r;
        scaled.C_star *= 7.25;
        CHECK(predict(scaled, v).hard == base);
    }

    Model empty;
    empty.P_star = identity_padded(2, 2);
    CHECK_THROWS_AS(predict(empty, Vector(Vector::Ones(2))), std::logic_error);
}

TEST_CASE("accuracy counts exact matches") {
    CHECK(accuracy({1, 2, 0}, {1, 2, 0}) == 1.0);
    CHECK(accuracy({1, 1, 1}, {0, 0, 0}) == 0.0);
    CHECK(accuracy({1, 2, 0, 2}, {1, 2, 0, 1}) == 0.75);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);

    std::mt19937_64 rng(906);
    for (int rep = 0; rep < 100; ++rep) {
        size_t len = 1 + rng() % 50;
        std::vector<int> a(len), b(len);
        size_t hits = 0;
        for (size_t i = 0; i < len; ++i) {
            a[i] = static_cast<int>(rng() % 4);
            b[i] = static_cast<int>(rng() % 4);
            if (a[i] == b[i]) ++hits;
        }
        CHECK(accuracy(a, b) == doctest::Approx(double(hits) / double(len)));
    }
}
