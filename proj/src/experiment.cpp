#include "rfdl/experiment.hpp"

#include "rfdl/classify.hpp"
#include "rfdl/factorize.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace rfdl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
    }
}

json params_to_json(const HyperParams& p) {
    return json{{"alpha", p.alpha},
                {"beta", p.beta},
                {"gamma", p.gamma},
                {"dict_size", p.dict_size},
                {"rank", p.rank},
                {"mu0", p.mu0},
                {"mu_max", p.mu_max},
                {"eta", p.eta},
                {"eps", p.eps},
                {"tau", p.tau},
                {"floor", p.floor},
                {"max_iter", p.max_iter},
                {"seed", p.seed},
                {"posthoc_beta", p.posthoc_beta}};
}

void params_from_json(const json& obj, HyperParams& p) {
    expect_keys(obj, "params",
                {"alpha", "beta", "gamma", "dict_size", "rank", "mu0", "mu_max", "eta", "eps",
                 "tau", "floor", "max_iter", "seed", "posthoc_beta"});
    p.alpha = obj.value("alpha", p.alpha);
    p.beta = obj.value("beta", p.beta);
    p.gamma = obj.value("gamma", p.gamma);
    p.dict_size = obj.value("dict_size", p.dict_size);
    p.rank = obj.value("rank", p.rank);
    p.mu0 = obj.value("mu0", p.mu0);
    p.mu_max = obj.value("mu_max", p.mu_max);
    p.eta = obj.value("eta", p.eta);
    p.eps = obj.value("eps", p.eps);
    p.tau = obj.value("tau", p.tau);
    p.floor = obj.value("floor", p.floor);
    p.max_iter = obj.value("max_iter", p.max_iter);
    p.seed = obj.value("seed", p.seed);
    p.posthoc_beta = obj.value("posthoc_beta", p.posthoc_beta);
}

json config_to_json_doc(const ExperimentConfig& c) {
    json doc;
    doc["manifest"] = c.manifest;
    doc["method"] = c.method;
    doc["params"] = params_to_json(c.params);
    doc["split"] = json{{"per_class_train", c.split.per_class_train},
                        {"n_splits", c.split.n_splits},
                        {"base_seed", c.split.base_seed}};
    doc["sweep"] = json{{"dict_sizes", c.sweep.dict_sizes},
                        {"corruption_fractions", c.sweep.corruption_fractions},
                        {"occlusion_sides", c.sweep.occlusion_sides}};
    doc["out_dir"] = c.out_dir;
    return doc;
}

/// A run record embeds the config it ran with; accept either shape.
const json& unwrap_run_record(const json& doc) {
    if (doc.is_object() && doc.contains("command") && doc.contains("config"))
        return doc.at("config");
    return doc;
}

// ---------------------------------------------------------------------------
// Dataset plumbing
// ---------------------------------------------------------------------------

Matrix take_columns(const Matrix& X, const std::vector<Index>& idx) {
    Matrix out(X.rows(), static_cast<Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = X.col(idx[j]);
    return out;
}

std::vector<int> take_labels(const std::vector<int>& labels, const std::vector<Index>& idx) {
    std::vector<int> out(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) out[j] = labels[static_cast<size_t>(idx[j])];
    return out;
}

std::vector<Index> all_columns(Index n) {
    std::vector<Index> idx(static_cast<size_t>(n));
    for (Index j = 0; j < n; ++j) idx[static_cast<size_t>(j)] = j;
    return idx;
}

/// Apply the model's stored preprocessing and check the feature dimension,
/// naming both sides of any mismatch.
Matrix prepare_features(const Model& model, const Matrix& X) {
    Matrix Z = X;
    if (model.pca) {
        if (X.rows() != model.pca->basis.rows())
            throw std::invalid_argument("model preprocessing expects feature dimension " +
                                        std::to_string(model.pca->basis.rows()) +
                                        ", dataset provides " + std::to_string(X.rows()));
        Z = model.pca->apply(X);
    }
    if (Z.rows() != model.P_star.cols())
        throw std::invalid_argument("model expects feature dimension " +
                                    std::to_string(model.P_star.cols()) +
                                    ", dataset provides " + std::to_string(Z.rows()));
    return Z;
}

std::vector<int> predict_labels(const Model& model, const Matrix& X) {
    if (model.C_star.size() == 0)
        throw std::invalid_argument("model carries no classifier; train it on labeled data");
    Matrix Z = prepare_features(model, X);
    std::vector<int> out(static_cast<size_t>(Z.cols()));
    for (Index j = 0; j < Z.cols(); ++j)
        out[static_cast<size_t>(j)] = predict(model, Vector(Z.col(j))).hard;
    return out;
}

// ---------------------------------------------------------------------------
// Training dispatch
// ---------------------------------------------------------------------------

struct TrainOutcome {
    Model model;
    ConvergenceTrace trace;
    double train_time_s = 0;
};

void attach_posthoc(Model& model, const Matrix& X, const std::vector<int>& labels, Index classes,
                    const HyperParams& p) {
    LabelMatrix lm = build_label_matrix(labels, classes);
    LabelRegression lr = fit_posthoc_classifier(model.P_star, X, lm.H, p.posthoc_beta);
    model.C_star = lr.C;
    model.posthoc_classifier = true;
    model.classes = classes;
}

/// Plain multiplicative-update factorization baseline (X ~ X W V^T): run the
/// classic update pair on the training Gram matrix, take bases X W, and embed
/// by ridge least squares onto them.  The residual column of the trace holds
/// the relative factor change, which also drives the stopping rule.
TrainOutcome fit_cf_baseline(const Matrix& X, Index classes, const HyperParams& p) {
    const Index N = X.cols();
    const Index r = p.rank > 0 ? p.rank : std::min<Index>(2 * classes, N);

    Matrix W(N, r), V(N, r);
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index i = 0; i < W.size(); ++i) W.data()[i] = unit(rng);
    for (Index i = 0; i < V.size(); ++i) V.data()[i] = unit(rng);

    const Matrix A = gram_matrix(X);
    TrainOutcome out;
    const auto t0 = Clock::now();
    for (int iter = 1; iter <= p.max_iter; ++iter) {
        const Matrix W_old = W, V_old = V;
        cf_step(A, W, V);
        const double gauge = std::max(1.0, std::max(max_abs(W_old), max_abs(V_old)));
        const double rel = std::max(max_abs(W - W_old), max_abs(V - V_old)) / gauge;
        const double obj = (X - X * W * V.transpose()).squaredNorm();
        out.trace.rows.push_back({iter, rel, 0, 0, 0, 0, obj, 0.0, seconds_since(t0)});
        if (rel <= p.eps) {
            out.trace.converged = true;
            out.trace.stop = StopReason::Converged;
            break;
        }
    }

    const Matrix U = X * W;  // n x r bases as combinations of samples
    Matrix gram = U.transpose() * U;
    gram.diagonal().array() += p.tau;
    out.model.method = "cf_baseline";
    out.model.P_star = gram.ldlt().solve(U.transpose());
    out.model.params = p;
    return out;
}

TrainOutcome train_method(const std::string& method, const Matrix& X,
                          const std::vector<int>& labels, Index classes, const HyperParams& p) {
    TrainOutcome out;
    const auto t0 = Clock::now();
    if (method == "jrfdl") {
        FitResult fit = fit_jrfdl(X, p);
        out.model = std::move(fit.model);
        out.trace = std::move(fit.trace);
        attach_posthoc(out.model, X, labels, classes, p);
    } else if (method == "djrfdl") {
        LabelMatrix lm = build_label_matrix(labels, classes);
        FitResult fit = fit_djrfdl(X, lm.H, p);
        out.model = std::move(fit.model);
        out.trace = std::move(fit.trace);
    } else if (method == "cf_baseline") {
        out = fit_cf_baseline(X, classes, p);
        attach_posthoc(out.model, X, labels, classes, p);
    } else {
        throw ConfigError("unknown method \"" + method + "\"");
    }
    out.train_time_s = seconds_since(t0);
    return out;
}

// ---------------------------------------------------------------------------
// Result artifacts
// ---------------------------------------------------------------------------

std::string sanitize_csv(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

void append_result_row(std::string& out, const std::string& prefix, const SplitResult& r) {
    out += prefix + std::to_string(r.split) + "," + fmt(r.accuracy) + "," +
           fmt(r.train_time_s) + "," + fmt(r.test_time_s) + "," + std::to_string(r.iterations) +
           "," + sanitize_csv(r.status) + "\n";
}

json record_to_json(const ResultRecord& rec) {
    json rows = json::array();
    for (const SplitResult& r : rec.splits)
        rows.push_back(json{{"split", r.split},
                            {"accuracy", r.accuracy},
                            {"train_time_s", r.train_time_s},
                            {"test_time_s", r.test_time_s},
                            {"iterations", r.iterations},
                            {"status", r.status}});
    return json{
        {"splits", rows}, {"mean", rec.mean}, {"stddev", rec.stddev}, {"best", rec.best}};
}

void write_run_record(const std::string& out_dir, const std::string& command,
                      const json& config_json, int exit_code, double wall_time_s,
                      const json& extras) {
    json doc;
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["config"] = config_json;
    doc["exit_code"] = exit_code;
    doc["wall_time_s"] = wall_time_s;
    for (const auto& item : extras.items()) doc[item.key()] = item.value();
    // One record per command name, so chained runs in one directory keep
    // every record.
    atomic_write_text((fs::path(out_dir) / ("run_" + command + ".json")).string(),
                      doc.dump(2) + "\n");
}

/// Run a command body with the shared error-to-exit-code mapping, then write
/// the run record (even for failed runs, so every invocation leaves a trace).
template <typename Body>
int run_command(const std::string& command, const std::string& out_dir, const json& config_json,
                Body&& body) {
    const auto t0 = Clock::now();
    int code = exit_ok;
    json extras;
    std::string error;
    try {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
        code = body(extras);
    } catch (const ConfigError& e) {
        error = e.what();
        code = exit_config_error;
    } catch (const DivergenceError& e) {
        error = e.what();
        code = exit_divergence;
    } catch (const IoError& e) {
        error = e.what();
        code = exit_data_error;
    } catch (const std::exception& e) {
        error = e.what();
        code = exit_data_error;
    }
    if (!error.empty()) {
        std::cerr << command << ": " << error << "\n";
        extras["error"] = error;
    }
    try {
        write_run_record(out_dir, command, config_json, code, seconds_since(t0), extras);
    } catch (const std::exception& e) {
        std::cerr << command << ": could not write run record: " << e.what() << "\n";
        if (code == exit_ok) code = exit_data_error;
    }
    return code;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public config API
// ---------------------------------------------------------------------------

void validate_config(const ExperimentConfig& config) {
    if (config.method != "jrfdl" && config.method != "djrfdl" && config.method != "cf_baseline")
        throw ConfigError("method must be jrfdl, djrfdl or cf_baseline, got \"" + config.method +
                          "\"");
    try {
        validate(config.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (config.split.n_splits < 1) throw ConfigError("split.n_splits must be at least 1");
    if (config.split.per_class_train < 0)
        throw ConfigError("split.per_class_train must be nonnegative");
    for (Index k : config.sweep.dict_sizes)
        if (k < 1) throw ConfigError("sweep.dict_sizes entries must be positive");
    for (double f : config.sweep.corruption_fractions)
        if (!(f >= 0.0 && f <= 1.0))
            throw ConfigError("sweep.corruption_fractions entries must lie in [0, 1]");
    for (Index s : config.sweep.occlusion_sides)
        if (s < 0) throw ConfigError("sweep.occlusion_sides entries must be nonnegative");
}

ExperimentConfig config_from_json(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const json& cfg = unwrap_run_record(doc);
    ExperimentConfig out;
    try {
        expect_keys(cfg, "config", {"manifest", "method", "params", "split", "sweep", "out_dir"});
        out.manifest = cfg.value("manifest", out.manifest);
        out.method = cfg.value("method", out.method);
        if (cfg.contains("params")) params_from_json(cfg.at("params"), out.params);
        if (cfg.contains("split")) {
            const json& s = cfg.at("split");
            expect_keys(s, "split", {"per_class_train", "n_splits", "base_seed"});
            out.split.per_class_train = s.value("per_class_train", out.split.per_class_train);
            out.split.n_splits = s.value("n_splits", out.split.n_splits);
            out.split.base_seed = s.value("base_seed", out.split.base_seed);
        }
        if (cfg.contains("sweep")) {
            const json& s = cfg.at("sweep");
            expect_keys(s, "sweep", {"dict_sizes", "corruption_fractions", "occlusion_sides"});
            out.sweep.dict_sizes = s.value("dict_sizes", out.sweep.dict_sizes);
            out.sweep.corruption_fractions =
                s.value("corruption_fractions", out.sweep.corruption_fractions);
            out.sweep.occlusion_sides = s.value("occlusion_sides", out.sweep.occlusion_sides);
        }
        out.out_dir = cfg.value("out_dir", out.out_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!out.manifest.empty() && !base_dir.empty() && fs::path(out.manifest).is_relative())
        out.manifest = (fs::path(base_dir) / out.manifest).string();
    return out;
}

std::string config_to_json(const ExperimentConfig& config) {
    return config_to_json_doc(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text, fs::path(path).parent_path().string());
}

ResultRecord aggregate(std::vector<SplitResult> splits) {
    std::sort(splits.begin(), splits.end(),
              [](const SplitResult& a, const SplitResult& b) { return a.split < b.split; });
    ResultRecord rec;
    rec.splits = std::move(splits);
    std::vector<double> usable;
    for (const SplitResult& r : rec.splits)
        if (std::isfinite(r.accuracy)) usable.push_back(r.accuracy);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (usable.empty()) {
        rec.mean = rec.stddev = rec.best = nan;
        return rec;
    }
    double sum = 0;
    rec.best = usable.front();
    for (double a : usable) {
        sum += a;
        rec.best = std::max(rec.best, a);
    }
    rec.mean = sum / static_cast<double>(usable.size());
    double ss = 0;
    for (double a : usable) ss += (a - rec.mean) * (a - rec.mean);
    rec.stddev = usable.size() > 1 ? std::sqrt(ss / static_cast<double>(usable.size() - 1)) : 0.0;
    return rec;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

std::string synth_to_json(const SynthSpec& spec) {
    json doc{{"classes", spec.classes},       {"dim", spec.dim},
             {"per_class", spec.per_class},   {"separation", spec.separation},
             {"noise_sigma", spec.noise_sigma}, {"seed", spec.seed},
             {"height", spec.height},         {"width", spec.width},
             {"out_dir", spec.out_dir}};
    return doc.dump(2) + "\n";
}

SynthSpec synth_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    const json& cfg = unwrap_run_record(doc);
    SynthSpec out;
    try {
        expect_keys(cfg, "synth spec",
                    {"classes", "dim", "per_class", "separation", "noise_sigma", "seed", "height",
                     "width", "out_dir"});
        out.classes = cfg.value("classes", out.classes);
        out.dim = cfg.value("dim", out.dim);
        out.per_class = cfg.value("per_class", out.per_class);
        out.separation = cfg.value("separation", out.separation);
        out.noise_sigma = cfg.value("noise_sigma", out.noise_sigma);
        out.seed = cfg.value("seed", out.seed);
        out.height = cfg.value("height", out.height);
        out.width = cfg.value("width", out.width);
        out.out_dir = cfg.value("out_dir", out.out_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    return out;
}

SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synth spec file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return synth_from_json(text);
}

int cmd_synth(const SynthSpec& spec) {
    return run_command("synth", spec.out_dir, json::parse(synth_to_json(spec)), [&](json& extras) {
        if (spec.classes < 1 || spec.dim < 1 || spec.per_class < 1)
            throw ConfigError("synth: classes, dim and per_class must be positive");
        if (spec.separation < 0 || spec.noise_sigma < 0)
            throw ConfigError("synth: separation and noise_sigma must be nonnegative");
        if ((spec.height > 0) != (spec.width > 0))
            throw ConfigError("synth: height and width must be given together");
        if (spec.height > 0 && spec.height * spec.width != spec.dim)
            throw ConfigError("synth: height*width must equal dim");

        SynthResult data =
            synth_classes(spec.classes, spec.dim, spec.per_class, spec.separation,
                          spec.noise_sigma, spec.seed);
        const fs::path dir(spec.out_dir);
        save_matrix((dir / "features.csv").string(), data.samples.X, MatrixFormat::csv);
        save_labels((dir / "labels.txt").string(), data.labels);
        DatasetManifest manifest;
        manifest.features = "features.csv";
        manifest.labels = "labels.txt";
        manifest.classes = spec.classes;
        if (spec.height > 0) manifest.geometry = ImageGeometry{spec.height, spec.width};
        save_manifest((dir / "dataset.json").string(), manifest);

        extras["features"] = spec.dim;
        extras["samples"] = data.samples.X.cols();
        std::cout << "synth: wrote " << data.samples.X.cols() << " samples x " << spec.dim
                  << " features to " << (dir / "dataset.json").string() << "\n";
        return static_cast<int>(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const ExperimentConfig& config, int split_index) {
    return run_command("train", config.out_dir, config_to_json_doc(config), [&](json& extras) {
        validate_config(config);
        if (split_index < 0 ||
            (config.split.per_class_train > 0 && split_index >= config.split.n_splits))
            throw ConfigError("train: split index " + std::to_string(split_index) +
                              " out of range for " + std::to_string(config.split.n_splits) +
                              " splits");
        if (config.manifest.empty()) throw ConfigError("train: no dataset manifest given");

        Dataset data = load_dataset(config.manifest);
        Matrix X = data.samples.X;
        std::vector<int> labels = data.labels;
        if (config.split.per_class_train > 0) {
            SplitPlan plan =
                split_per_class(data.labels, config.split.per_class_train,
                                static_cast<unsigned>(config.split.base_seed + split_index));
            X = take_columns(data.samples.X, plan.train);
            labels = take_labels(data.labels, plan.train);
        }

        TrainOutcome out = train_method(config.method, X, labels, data.classes, config.params);
        double train_acc = accuracy(predict_labels(out.model, X), labels);

        ModelMetadata meta;
        meta.seed = config.params.seed;
        meta.dataset_hash = dataset_fingerprint(X);
        meta.train_accuracy = train_acc;
        const fs::path dir(config.out_dir);
        save_model((dir / "model.hymd").string(), out.model, meta);
        write_trace_csv((dir / "trace.csv").string(), out.trace);

        extras["converged"] = out.trace.converged;
        extras["iterations"] = static_cast<int>(out.trace.rows.size());
        extras["split_index"] = split_index;
        extras["train_accuracy"] = train_acc;
        extras["train_time_s"] = out.train_time_s;
        extras["embedding_rows"] = out.model.P_star.rows();
        if (out.model.D_star.size() > 0) {
            extras["dict_size"] = out.model.P_star.rows();
            extras["rank"] = out.model.D_star.rows();
        }
        std::cout << "train: " << config.method << " on " << X.cols() << " samples, "
                  << out.trace.rows.size() << " iterations, "
                  << (out.trace.converged ? "converged" : "stopped at max_iter")
                  << ", training accuracy " << train_acc << "\n";
        return static_cast<int>(out.trace.converged ? exit_ok : exit_max_iter);
    });
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

int cmd_predict(const ExperimentConfig& config, const std::string& model_path) {
    return run_command("predict", config.out_dir, config_to_json_doc(config), [&](json& extras) {
        validate_config(config);
        if (config.manifest.empty()) throw ConfigError("predict: no dataset manifest given");
        Model model = load_model(model_path);
        Dataset data = load_dataset(config.manifest);

        std::vector<int> preds = predict_labels(model, data.samples.X);
        std::string out = "sample,predicted,truth\n";
        for (size_t j = 0; j < preds.size(); ++j)
            out += std::to_string(j) + "," + std::to_string(preds[j]) + "," +
                   std::to_string(data.labels[j]) + "\n";
        atomic_write_text((fs::path(config.out_dir) / "predictions.csv").string(), out);

        double acc = accuracy(preds, data.labels);
        extras["model"] = model_path;
        extras["samples"] = preds.size();
        extras["accuracy"] = acc;
        std::cout << "predict: " << preds.size() << " samples, accuracy " << acc << "\n";
        return static_cast<int>(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const ExperimentConfig& config, const std::string& model_path,
             const std::string& on) {
    return run_command("eval", config.out_dir, config_to_json_doc(config), [&](json& extras) {
        validate_config(config);
        if (on != "test" && on != "train" && on != "all")
            throw ConfigError("eval: side must be test, train or all, got \"" + on + "\"");
        if (config.manifest.empty()) throw ConfigError("eval: no dataset manifest given");
        Model model = load_model(model_path);
        Dataset data = load_dataset(config.manifest);

        const bool whole = config.split.per_class_train == 0 || on == "all";
        const int rows = whole ? 1 : config.split.n_splits;
        std::vector<SplitResult> results;
        for (int s = 0; s < rows; ++s) {
            std::vector<Index> idx;
            if (whole) {
                idx = all_columns(data.samples.X.cols());
            } else {
                SplitPlan plan =
                    split_per_class(data.labels, config.split.per_class_train,
                                    static_cast<unsigned>(config.split.base_seed + s));
                idx = on == "train" ? plan.train : plan.test;
            }
            if (idx.empty())
                throw std::invalid_argument("eval: the " + on + " side of split " +
                                            std::to_string(s) + " is empty");
            Matrix Xs = take_columns(data.samples.X, idx);
            std::vector<int> ys = take_labels(data.labels, idx);
            const auto t0 = Clock::now();
            std::vector<int> preds = predict_labels(model, Xs);
            SplitResult r;
            r.split = s;
            r.test_time_s = seconds_since(t0);
            r.accuracy = accuracy(preds, ys);
            results.push_back(r);
        }
        ResultRecord rec = aggregate(std::move(results));

        std::string csv = "split,accuracy,train_time_s,test_time_s,iterations,status\n";
        for (const SplitResult& r : rec.splits) append_result_row(csv, "", r);
        const fs::path dir(config.out_dir);
        atomic_write_text((dir / "results.csv").string(), csv);

        json doc = record_to_json(rec);
        doc["command"] = "eval";
        doc["model"] = model_path;
        doc["on"] = on;
        doc["dataset_hash"] = dataset_fingerprint(data.samples.X);
        atomic_write_text((dir / "results.json").string(), doc.dump(2) + "\n");

        extras["mean"] = rec.mean;
        extras["stddev"] = rec.stddev;
        extras["best"] = rec.best;
        std::cout << "eval: " << rec.splits.size() << " split(s) on " << on
                  << ", mean accuracy " << rec.mean << " (stddev " << rec.stddev << ", best "
                  << rec.best << ")\n";
        return static_cast<int>(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const ExperimentConfig& config) {
    return run_command("bench", config.out_dir, config_to_json_doc(config), [&](json& extras) {
        validate_config(config);
        if (config.manifest.empty()) throw ConfigError("bench: no dataset manifest given");
        if (config.split.per_class_train < 1)
            throw ConfigError("bench: split.per_class_train must be at least 1");
        if (config.sweep.dict_sizes.empty() && config.sweep.corruption_fractions.empty() &&
            config.sweep.occlusion_sides.empty())
            throw ConfigError("bench: all sweep lists are empty, nothing to do");

        Dataset data = load_dataset(config.manifest);
        if (!config.sweep.occlusion_sides.empty() && !data.samples.geometry)
            throw std::invalid_argument(
                "bench: the occlusion sweep needs a dataset with image geometry");

        struct Family {
            std::string kind;
            std::vector<double> values;
        };
        std::vector<Family> families;
        if (!config.sweep.dict_sizes.empty()) {
            Family f{"dict_size", {}};
            for (Index k : config.sweep.dict_sizes) f.values.push_back(static_cast<double>(k));
            families.push_back(std::move(f));
        }
        if (!config.sweep.corruption_fractions.empty())
            families.push_back(Family{"corruption", config.sweep.corruption_fractions});
        if (!config.sweep.occlusion_sides.empty()) {
            Family f{"occlusion", {}};
            for (Index s : config.sweep.occlusion_sides) f.values.push_back(static_cast<double>(s));
            families.push_back(std::move(f));
        }

        std::string csv = "sweep,value,split,accuracy,train_time_s,test_time_s,iterations,status\n";
        json points = json::array();
        int total = 0, failed = 0;
        for (const Family& family : families) {
            for (double value : family.values) {
                std::vector<SplitResult> rows;
                for (int s = 0; s < config.split.n_splits; ++s) {
                    const unsigned run_seed =
                        static_cast<unsigned>(config.split.base_seed + s);
                    Matrix Xmod = data.samples.X;
                    if (family.kind == "corruption")
                        Xmod = corrupt_pixels(data.samples.X, value, run_seed);
                    else if (family.kind == "occlusion")
                        Xmod = occlude_block({data.samples.X, data.samples.geometry},
                                             static_cast<Index>(value), run_seed);

                    HyperParams q = config.params;
                    q.seed = config.params.seed + static_cast<std::uint64_t>(s);
                    if (family.kind == "dict_size") q.dict_size = static_cast<Index>(value);

                    SplitPlan plan =
                        split_per_class(data.labels, config.split.per_class_train, run_seed);
                    if (plan.test.empty())
                        throw std::invalid_argument("bench: the test side of split " +
                                                    std::to_string(s) + " is empty");
                    Matrix Xtr = take_columns(Xmod, plan.train);
                    std::vector<int> ytr = take_labels(data.labels, plan.train);
                    Matrix Xte = take_columns(Xmod, plan.test);
                    std::vector<int> yte = take_labels(data.labels, plan.test);

                    SplitResult r;
                    r.split = s;
                    ++total;
                    try {
                        TrainOutcome t =
                            train_method(config.method, Xtr, ytr, data.classes, q);
                        const auto t0 = Clock::now();
                        std::vector<int> preds = predict_labels(t.model, Xte);
                        r.test_time_s = seconds_since(t0);
                        r.accuracy = accuracy(preds, yte);
                        r.train_time_s = t.train_time_s;
                        r.iterations = static_cast<int>(t.trace.rows.size());
                        r.status = t.trace.converged ? "ok" : "maxiter";
                    } catch (const DivergenceError& e) {
                        r.accuracy = std::numeric_limits<double>::quiet_NaN();
                        r.status = std::string("diverged: ") + e.what();
                        ++failed;
                    }
                    rows.push_back(std::move(r));
                }
                ResultRecord rec = aggregate(std::move(rows));
                for (const SplitResult& r : rec.splits)
                    append_result_row(csv, family.kind + "," + fmt(value) + ",", r);
                json point = record_to_json(rec);
                point["sweep"] = family.kind;
                point["value"] = value;
                points.push_back(std::move(point));
                std::cout << "bench: " << family.kind << "=" << value << " mean accuracy "
                          << rec.mean << " (stddev " << rec.stddev << ")\n";
            }
        }

        const fs::path dir(config.out_dir);
        atomic_write_text((dir / "sweep.csv").string(), csv);
        json doc;
        doc["command"] = "bench";
        doc["method"] = config.method;
        doc["dataset_hash"] = dataset_fingerprint(data.samples.X);
        doc["points"] = std::move(points);
        atomic_write_text((dir / "results.json").string(), doc.dump(2) + "\n");

        extras["runs"] = total;
        extras["failed_runs"] = failed;
        return static_cast<int>(exit_ok);
    });
}

}  // namespace rfdl
