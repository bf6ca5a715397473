// Inexact augmented-Lagrangian solvers for the joint robust factorization /
// projective dictionary model, in its plain (unsupervised) and discriminative
// (label-coupled) forms.
#pragma once

#include "rfdl/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rfdl {

/// All tunables of the solvers.  The penalty schedule (mu0, eta, mu_max) and
/// stopping rule (eps, max_iter) follow the reference configuration; alpha
/// weighs the coding residual, gamma the hybrid low-rank + sparse coefficient
/// penalty, and beta the discriminative terms (0 disables them).
struct HyperParams {
    double alpha = 1.0;
    double beta = 0.0;
    double gamma = 1e-5;
    Index dict_size = 0;  ///< K; 0 selects the number of training samples
    Index rank = 0;       ///< r; 0 selects min(2c, N) labeled, min(ceil(N/10), n) unlabeled
    double mu0 = 1e-6;
    double mu_max = 1e6;
    double eta = 1.12;
    double eps = 1e-7;
    double tau = 1e-6;   ///< ridge on the data-side Gram solves
    double floor = 1e-8; ///< row-norm floor of the reweighting diagonals
    int max_iter = 500;
    std::uint64_t seed = 0;
    double posthoc_beta = 1.0;  ///< ridge of the separately trained classifier
};

/// Throws std::invalid_argument on out-of-range values.
void validate(const HyperParams& p);

/// Full variable set of one solve.  The discriminative block (H, C, E, Y4)
/// is zero-sized when the classification terms are disabled.
struct SolverState {
    Matrix D, P, W, V;      // factors: dictionary, projection, CF pair
    Matrix J, S, F;         // auxiliaries for PX (twice) and V
    Matrix Y1, Y2, Y3;      // multipliers of V=F, PX=J, PX=S
    DiagWeights Q, G;       // row weights of the coding / factorization residuals
    Matrix H, C, E, Y4;     // labels, classifier, row-sparse error, its multiplier
    double mu = 0.0;
    int iter = 0;

    bool has_classifier() const { return H.size() > 0; }
};

/// Seeded initial state: D, P, W, V filled i.i.d. uniform(0,1) in that order
/// from mt19937_64(seed), D columns rescaled to unit sum; J, S, F and all
/// multipliers zero; Q, G identity weights; mu = mu0.  Pass labels as a
/// one-hot c x N matrix to enable the discriminative block (C, E, Y4 start
/// at zero), or nullptr to disable it.
SolverState init_state(const Matrix& X, const HyperParams& p, Index K, Index r,
                       const Matrix* labels_onehot);

/// Infinity norms of the constraint violations.  cls is 0 when the
/// discriminative block is off; max covers the active ones only.
struct Residuals {
    double pxj = 0, pxs = 0, vf = 0, cls = 0, max = 0;
};
Residuals residuals(const SolverState& s, const Matrix& X);

/// Proximal refresh of the three auxiliaries:
///   J <- svt(PX + Y2/mu, gamma/mu), S <- soft(PX + Y3/mu, gamma/mu),
///   F <- soft(V + Y1/mu, alpha/mu).
void step_auxiliaries(SolverState& s, const Matrix& X, const HyperParams& p);

/// Gradient-ascent multiplier update with the fresh primal values, then
/// mu <- min(eta*mu, mu_max).
void step_multipliers(SolverState& s, const Matrix& X, const HyperParams& p);

/// Unrelaxed model objective at the current primal variables (the auxiliary
/// splitting is ignored; PX and V enter the penalties directly).
double objective(const SolverState& s, const Matrix& X, const HyperParams& p);

struct TraceRow {
    int iter = 0;
    double res_max = 0, res_pxj = 0, res_pxs = 0, res_vf = 0, res_cls = 0;
    double objective = 0;
    double mu = 0;          ///< penalty value used during this iteration
    double wall_time_s = 0; ///< elapsed seconds since the solve started
};

enum class StopReason { Converged, MaxIterations };

struct ConvergenceTrace {
    std::vector<TraceRow> rows;
    StopReason stop = StopReason::MaxIterations;
    bool converged = false;
};

/// Writes the trace as CSV with the fixed column set
/// iter,res_max,res_pxj,res_pxs,res_vf,res_cls,objective,mu,wall_time_s.
void write_trace_csv(const std::string& path, const ConvergenceTrace& trace);

/// Learned artifacts of a fit plus how to reproduce/apply them.
struct Model {
    std::string method;  ///< "jrfdl", "djrfdl", or "cf_baseline"
    Matrix P_star;       ///< K x n projection
    Matrix D_star;       ///< r x K dictionary, unit column sums
    Matrix C_star;       ///< K x c classifier; zero-sized when absent
    bool posthoc_classifier = false;  ///< C_star trained separately, not jointly
    Index classes = 0;
    HyperParams params;
    std::optional<PcaRecord> pca;
};

struct FitResult {
    Model model;
    ConvergenceTrace trace;
    SolverState state;  ///< final iterate, useful for diagnostics
};

/// Plain solver: alternates J, S, F, D, P, W, V, the reweighting diagonals,
/// and the multipliers until the residual max drops below eps or max_iter is
/// reached.  Throws DivergenceError if any state entry leaves [-1e12, 1e12],
/// becomes non-finite, or a step degenerates at runtime (for example a
/// dictionary column losing all mass); shape and argument errors still throw
/// std::invalid_argument.
FitResult fit_jrfdl(const Matrix& X, const HyperParams& p);

/// Discriminative solver: shared steps as above but with the projection
/// update moved after W/V and coupled to the classifier blocks C and E,
/// which are refreshed each iteration; the constraint H^T = X^T P^T C + E
/// joins the residual check.  H is the one-hot c x N label matrix.
/// With beta = 0 the discriminative terms vanish from the objective, so the
/// run is the plain solver verbatim (identical seed -> identical P*, D*) and
/// C_star is attached afterwards via solve_label_regression(posthoc_beta).
FitResult fit_djrfdl(const Matrix& X, const Matrix& H, const HyperParams& p);

/// Dominant per-iteration cost terms and (optionally) a measured wall time.
struct CostReport {
    Index n = 0, N = 0, K = 0, r = 0;
    std::string formula = "K^3 + n*N*r + n^3";
    double dominant_flops = 0;               ///< formula evaluated at the shapes
    double measured_seconds_per_iteration = 0;  ///< 0 unless measured
};

/// Evaluates the dominant-cost estimate for the given shapes; when measure is
/// true, times a short seeded solve of those dimensions.  Rejects empty
/// shapes.
CostReport per_iteration_cost_report(const HyperParams& p, Index n, Index N, Index K, Index r,
                                     bool measure = false);

}  // namespace rfdl
