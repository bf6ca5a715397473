#include "rfdl/solver.hpp"

#include "rfdl/dictsolve.hpp"
#include "rfdl/factorize.hpp"
#include "rfdl/prox.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace rfdl {

namespace {

constexpr double kDivergenceBound = 1e12;

Index default_rank(Index n, Index N, Index classes) {
    Index r = classes > 0 ? std::min<Index>(2 * classes, N)
                          : std::min<Index>((N + 9) / 10, n);
    return std::max<Index>(r, 1);
}

void guard_divergence(const SolverState& s, int iter) {
    auto check = [iter](const Matrix& M, const char* name) {
        if (!all_finite(M) || max_abs(M) > kDivergenceBound)
            throw DivergenceError(iter, std::string("solver diverged at iteration ") +
                                            std::to_string(iter) + ": matrix " + name +
                                            " left the trusted range");
    };
    check(s.D, "D");
    check(s.P, "P");
    check(s.W, "W");
    check(s.V, "V");
    check(s.J, "J");
    check(s.S, "S");
    check(s.F, "F");
    check(s.Y1, "Y1");
    check(s.Y2, "Y2");
    check(s.Y3, "Y3");
    if (s.has_classifier()) {
        check(s.C, "C");
        check(s.E, "E");
        check(s.Y4, "Y4");
    }
}

FitResult fit_core(const Matrix& X, const Matrix* H, const HyperParams& p, const char* method) {
    validate(p);
    if (X.size() == 0) throw std::invalid_argument("fit: empty data matrix");
    if (!all_finite(X)) throw std::invalid_argument("fit: data contains non-finite entries");
    const Index N = X.cols();
    if (H && H->cols() != N)
        throw std::invalid_argument("fit: label matrix has wrong sample count");
    if (H && H->rows() < 1) throw std::invalid_argument("fit: label matrix has no classes");

    // beta = 0 removes the discriminative terms from the objective, which
    // makes the run the plain solver by definition (see fit_djrfdl docs).
    const bool cls = H != nullptr && p.beta > 0.0;
    const Index K = p.dict_size > 0 ? p.dict_size : N;
    const Index r = p.rank > 0 ? p.rank : default_rank(X.rows(), N, H ? H->rows() : 0);

    SolverState s = init_state(X, p, K, r, cls ? H : nullptr);
    const Matrix A = gram_matrix(X);

    FitResult out;
    const auto t0 = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= p.max_iter; ++iter) {
        s.iter = iter;
        const double mu_used = s.mu;

        Residuals res;
        try {
            step_auxiliaries(s, X, p);
            s.D = update_d(s.V, X, s.P, p.tau);
            if (!cls) {
                s.P = update_p_jrfdl(s.D, s.Q, s.V, s.J, s.S, s.Y2, s.Y3, X, s.mu, p.alpha,
                                     p.tau);
                robust_wv_step(A, s.W, s.V, s.G, s.Q, s.D, s.P, X, s.F, s.Y1, s.mu, p.alpha);
            } else {
                robust_wv_step(A, s.W, s.V, s.G, s.Q, s.D, s.P, X, s.F, s.Y1, s.mu, p.alpha);
                s.P = update_p_djrfdl(s.D, s.Q, s.V, s.J, s.S, s.Y2, s.Y3, s.C, s.E, s.Y4, s.H,
                                      X, s.mu, p.alpha, p.tau);
            }
            s.Q = reweight_diag(s.V.transpose() - s.D * (s.P * X), p.floor);
            s.G = update_g(X, s.W, s.V, p.floor);
            if (cls) {
                s.C = update_c(s.P * X, s.H, s.E, s.Y4, s.mu, p.beta);
                s.E = update_e(s.H, X, s.P, s.C, s.Y4, s.mu, p.beta);
            }

            res = residuals(s, X);
            step_multipliers(s, X, p);
        } catch (const DivergenceError&) {
            throw;
        } catch (const std::logic_error&) {
            throw;  // shape or argument bugs, not a property of this run
        } catch (const std::runtime_error& e) {
            // Runtime degenerations inside a step (e.g. a dictionary column
            // losing all its mass) end the run the same way a blow-up does.
            throw DivergenceError(iter, std::string("solver diverged at iteration ") +
                                            std::to_string(iter) + ": " + e.what());
        }
        guard_divergence(s, iter);

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.trace.rows.push_back({iter, res.max, res.pxj, res.pxs, res.vf, res.cls,
                                  objective(s, X, p), mu_used, elapsed});
        if (res.max <= p.eps) {
            out.trace.converged = true;
            out.trace.stop = StopReason::Converged;
            break;
        }
    }

    out.model.method = method;
    out.model.P_star = s.P;
    out.model.D_star = s.D;
    out.model.params = p;
    if (H) {
        out.model.classes = H->rows();
        if (cls) {
            out.model.C_star = s.C;
        } else {
            LabelRegression lr = solve_label_regression(s.P * X, *H, p.posthoc_beta);
            out.model.C_star = lr.C;
            out.model.posthoc_classifier = true;
        }
    }
    out.state = std::move(s);
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void validate(const HyperParams& p) {
    auto fail = [](const char* msg) { throw std::invalid_argument(std::string("params: ") + msg); };
    if (!(p.alpha >= 0.0)) fail("alpha must be nonnegative");
    if (!(p.beta >= 0.0)) fail("beta must be nonnegative");
    if (!(p.gamma >= 0.0)) fail("gamma must be nonnegative");
    if (p.dict_size < 0) fail("dict_size must be nonnegative");
    if (p.rank < 0) fail("rank must be nonnegative");
    if (!(p.mu0 > 0.0)) fail("mu0 must be positive");
    if (!(p.mu_max >= p.mu0)) fail("mu_max must be at least mu0");
    if (!(p.eta > 1.0)) fail("eta must exceed 1");
    if (!(p.eps > 0.0)) fail("eps must be positive");
    if (!(p.tau >= 0.0)) fail("tau must be nonnegative");
    if (!(p.floor > 0.0)) fail("floor must be positive");
    if (p.max_iter < 1) fail("max_iter must be at least 1");
    if (!(p.posthoc_beta > 0.0)) fail("posthoc_beta must be positive");
}

SolverState init_state(const Matrix& X, const HyperParams& p, Index K, Index r,
                       const Matrix* labels_onehot) {
    validate(p);
    if (K < 1 || r < 1) throw std::invalid_argument("init_state: K and r must be positive");
    const Index n = X.rows(), N = X.cols();
    if (n < 1 || N < 1) throw std::invalid_argument("init_state: empty data matrix");

    SolverState s;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto fill = [&rng, &unit](Matrix& M, Index rows, Index cols) {
        M.resize(rows, cols);
        for (Index i = 0; i < M.size(); ++i) M.data()[i] = unit(rng);
    };
    // Draw order is part of the determinism contract: D, P, W, V.
    fill(s.D, r, K);
    for (Index j = 0; j < K; ++j) s.D.col(j) /= s.D.col(j).sum();
    fill(s.P, K, n);
    fill(s.W, N, r);
    fill(s.V, N, r);

    s.J = Matrix::Zero(K, N);
    s.S = Matrix::Zero(K, N);
    s.F = Matrix::Zero(N, r);
    s.Y1 = Matrix::Zero(N, r);
    s.Y2 = Matrix::Zero(K, N);
    s.Y3 = Matrix::Zero(K, N);
    s.Q = DiagWeights{Vector::Ones(r)};
    s.G = DiagWeights{Vector::Ones(N)};
    if (labels_onehot) {
        const Index c = labels_onehot->rows();
        s.H = *labels_onehot;
        s.C = Matrix::Zero(K, c);
        s.E = Matrix::Zero(N, c);
        s.Y4 = Matrix::Zero(N, c);
    }
    s.mu = p.mu0;
    return s;
}

Residuals residuals(const SolverState& s, const Matrix& X) {
    Residuals res;
    Matrix PX = s.P * X;
    res.pxj = max_abs(PX - s.J);
    res.pxs = max_abs(PX - s.S);
    res.vf = max_abs(s.V - s.F);
    res.max = std::max({res.pxj, res.pxs, res.vf});
    if (s.has_classifier()) {
        res.cls = max_abs(s.H.transpose() - X.transpose() * (s.P.transpose() * s.C) - s.E);
        res.max = std::max(res.max, res.cls);
    }
    return res;
}

void step_auxiliaries(SolverState& s, const Matrix& X, const HyperParams& p) {
    if (!(s.mu > 0.0)) throw std::invalid_argument("step_auxiliaries: mu must be positive");
    Matrix PX = s.P * X;
    s.J = svt(PX + s.Y2 / s.mu, p.gamma / s.mu);
    s.S = soft_threshold(PX + s.Y3 / s.mu, p.gamma / s.mu);
    s.F = soft_threshold(s.V + s.Y1 / s.mu, p.alpha / s.mu);
}

void step_multipliers(SolverState& s, const Matrix& X, const HyperParams& p) {
    if (!(s.mu > 0.0)) throw std::invalid_argument("step_multipliers: mu must be positive");
    Matrix PX = s.P * X;
    s.Y1 += s.mu * (s.V - s.F);
    s.Y2 += s.mu * (PX - s.J);
    s.Y3 += s.mu * (PX - s.S);
    if (s.has_classifier())
        s.Y4 += s.mu * (s.H.transpose() - X.transpose() * (s.P.transpose() * s.C) - s.E);
    s.mu = std::min(p.eta * s.mu, p.mu_max);
}

double objective(const SolverState& s, const Matrix& X, const HyperParams& p) {
    Matrix PX = s.P * X;
    Matrix Xt = X.transpose();
    double obj = l21_norm(Xt - s.V * (s.W.transpose() * Xt));
    obj += p.alpha * (l21_norm(s.V.transpose() - s.D * PX) + s.V.cwiseAbs().sum());
    obj += p.gamma * (nuclear_norm(PX) + PX.cwiseAbs().sum());
    if (s.has_classifier())
        obj += p.beta * (l21_norm(s.H.transpose() - Xt * (s.P.transpose() * s.C)) +
                         s.C.squaredNorm());
    return obj;
}

void write_trace_csv(const std::string& path, const ConvergenceTrace& trace) {
    std::string text = "iter,res_max,res_pxj,res_pxs,res_vf,res_cls,objective,mu,wall_time_s\n";
    for (const TraceRow& row : trace.rows) {
        text += std::to_string(row.iter);
        for (double v : {row.res_max, row.res_pxj, row.res_pxs, row.res_vf, row.res_cls,
                         row.objective, row.mu, row.wall_time_s}) {
            text += ',';
            text += format_double(v);
        }
        text += '\n';
    }
    atomic_write_text(path, text);
}

FitResult fit_jrfdl(const Matrix& X, const HyperParams& p) {
    return fit_core(X, nullptr, p, "jrfdl");
}

FitResult fit_djrfdl(const Matrix& X, const Matrix& H, const HyperParams& p) {
    return fit_core(X, &H, p, "djrfdl");
}

CostReport per_iteration_cost_report(const HyperParams& p, Index n, Index N, Index K, Index r,
                                     bool measure) {
    if (n < 1 || N < 1 || K < 1 || r < 1)
        throw std::invalid_argument("per_iteration_cost_report: all shapes must be positive");
    CostReport report;
    report.n = n;
    report.N = N;
    report.K = K;
    report.r = r;
    report.dominant_flops = static_cast<double>(K) * K * K +
                            static_cast<double>(n) * N * r +
                            static_cast<double>(n) * n * n;
    if (measure) {
        HyperParams q = p;
        q.dict_size = K;
        q.rank = r;
        q.max_iter = 6;
        q.eps = 1e-300;  // never satisfied; we want exactly max_iter iterations
        std::mt19937_64 rng(q.seed + 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Matrix X(n, N);
        for (Index i = 0; i < X.size(); ++i) X.data()[i] = unit(rng);
        FitResult res = fit_jrfdl(X, q);
        if (!res.trace.rows.empty())
            report.measured_seconds_per_iteration =
                res.trace.rows.back().wall_time_s / res.trace.rows.size();
    }
    return report;
}

}  // namespace rfdl
