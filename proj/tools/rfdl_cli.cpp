// Command-line front end for the robust factorization / projective
// dictionary learning experiments.  All behavior lives in the library
// (rfdl/experiment.hpp); this file only parses flags and forwards.
#include "rfdl/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

/// Flag values shared by train/predict/eval/bench.  They override the config
/// file only when actually given on the command line.
struct CommonFlags {
    std::string config_path;
    std::string manifest;
    std::string out_dir;
    std::string method;
    std::uint64_t seed = 0;
    double alpha = 0, beta = 0, gamma = 0, eps = 0;
    rfdl::Index dict_size = 0, rank = 0;
    int max_iter = 0;
    int train_per_class = 0;
    int n_splits = 0;
    std::uint64_t base_seed = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path,
                    "Experiment config JSON (a previous run record works too)");
    cmd->add_option("--manifest", f.manifest, "Dataset manifest path");
    cmd->add_option("--out", f.out_dir, "Directory receiving every output artifact");
    cmd->add_option("--method", f.method, "jrfdl, djrfdl or cf_baseline");
    cmd->add_option("--seed", f.seed, "Solver initialization seed");
    cmd->add_option("--alpha", f.alpha, "Coding-residual weight");
    cmd->add_option("--beta", f.beta, "Discriminative weight (0 disables the joint classifier)");
    cmd->add_option("--gamma", f.gamma, "Hybrid low-rank + sparse coefficient weight");
    cmd->add_option("--dict-size", f.dict_size,
                    "Dictionary size K (0 selects the number of training samples)");
    cmd->add_option("--rank", f.rank, "Factor rank r (0 selects the default rule)");
    cmd->add_option("--max-iter", f.max_iter, "Iteration cap");
    cmd->add_option("--eps", f.eps, "Stopping tolerance on the residual max");
    cmd->add_option("--train-per-class", f.train_per_class,
                    "Training samples drawn per class (0 uses the full dataset)");
    cmd->add_option("--splits", f.n_splits, "Number of random splits");
    cmd->add_option("--base-seed", f.base_seed, "Base seed of the split/corruption streams");
}

rfdl::ExperimentConfig resolve_config(const CLI::App* cmd, const CommonFlags& f) {
    rfdl::ExperimentConfig config;
    if (cmd->count("--config")) config = rfdl::load_config(f.config_path);
    if (cmd->count("--manifest")) config.manifest = f.manifest;
    if (cmd->count("--out")) config.out_dir = f.out_dir;
    if (cmd->count("--method")) config.method = f.method;
    if (cmd->count("--seed")) config.params.seed = f.seed;
    if (cmd->count("--alpha")) config.params.alpha = f.alpha;
    if (cmd->count("--beta")) config.params.beta = f.beta;
    if (cmd->count("--gamma")) config.params.gamma = f.gamma;
    if (cmd->count("--dict-size")) config.params.dict_size = f.dict_size;
    if (cmd->count("--rank")) config.params.rank = f.rank;
    if (cmd->count("--max-iter")) config.params.max_iter = f.max_iter;
    if (cmd->count("--eps")) config.params.eps = f.eps;
    if (cmd->count("--train-per-class")) config.split.per_class_train = f.train_per_class;
    if (cmd->count("--splits")) config.split.n_splits = f.n_splits;
    if (cmd->count("--base-seed")) config.split.base_seed = f.base_seed;
    return config;
}

/// Default the model path into the output directory when --model is absent,
/// so train/eval/predict chain naturally on one --out.
std::string resolve_model_path(const CLI::App* cmd, const std::string& flag_value,
                               const rfdl::ExperimentConfig& config) {
    if (cmd->count("--model")) return flag_value;
    return (fs::path(config.out_dir) / "model.hymd").string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust factorization and projective dictionary learning experiments"};
    app.set_version_flag("--version", std::string(rfdl::kVersion));
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-class dataset");
    rfdl::SynthSpec synth_flags;
    std::string synth_config;
    synth->add_option("--config", synth_config, "Synth spec JSON (a previous run record works)");
    synth->add_option("--classes", synth_flags.classes, "Number of classes");
    synth->add_option("--dim", synth_flags.dim, "Feature dimension");
    synth->add_option("--per-class", synth_flags.per_class, "Samples per class");
    synth->add_option("--separation", synth_flags.separation,
                      "Pairwise distance between class means");
    synth->add_option("--sigma", synth_flags.noise_sigma, "Gaussian noise level");
    synth->add_option("--seed", synth_flags.seed, "Generation seed");
    synth->add_option("--height", synth_flags.height, "Image height (use with --width)");
    synth->add_option("--width", synth_flags.width, "Image width (use with --height)");
    synth->add_option("--out", synth_flags.out_dir, "Output directory");

    auto* train = app.add_subcommand("train", "Fit a model; persist it and its trace");
    CommonFlags train_flags;
    add_common_flags(train, train_flags);
    int split_index = 0;
    train->add_option("--split-index", split_index,
                      "Which split's training side to fit on (with --train-per-class)");

    auto* predict = app.add_subcommand("predict", "Label every sample of a dataset");
    CommonFlags predict_flags;
    add_common_flags(predict, predict_flags);
    std::string predict_model;
    predict->add_option("--model", predict_model, "Model file (default: <out>/model.hymd)");

    auto* eval = app.add_subcommand("eval", "Score a saved model over the configured splits");
    CommonFlags eval_flags;
    add_common_flags(eval, eval_flags);
    std::string eval_model, eval_on = "test";
    eval->add_option("--model", eval_model, "Model file (default: <out>/model.hymd)");
    eval->add_option("--on", eval_on, "Evaluation side: test, train or all");

    auto* bench = app.add_subcommand("bench",
                                     "Train/evaluate across sweeps of dictionary size, "
                                     "pixel corruption or block occlusion");
    CommonFlags bench_flags;
    add_common_flags(bench, bench_flags);
    std::vector<rfdl::Index> sweep_dict, sweep_occl;
    std::vector<double> sweep_corrupt;
    bench->add_option("--sweep-dict-sizes", sweep_dict, "Dictionary sizes to sweep");
    bench->add_option("--sweep-corruption", sweep_corrupt, "Corrupted-pixel fractions to sweep");
    bench->add_option("--sweep-occlusion", sweep_occl, "Occlusion block sides to sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rfdl::exit_config_error;
    }

    try {
        if (synth->parsed()) {
            rfdl::SynthSpec spec = synth_flags;
            if (synth->count("--config")) {
                spec = rfdl::load_synth_spec(synth_config);
                if (synth->count("--classes")) spec.classes = synth_flags.classes;
                if (synth->count("--dim")) spec.dim = synth_flags.dim;
                if (synth->count("--per-class")) spec.per_class = synth_flags.per_class;
                if (synth->count("--separation")) spec.separation = synth_flags.separation;
                if (synth->count("--sigma")) spec.noise_sigma = synth_flags.noise_sigma;
                if (synth->count("--seed")) spec.seed = synth_flags.seed;
                if (synth->count("--height")) spec.height = synth_flags.height;
                if (synth->count("--width")) spec.width = synth_flags.width;
                if (synth->count("--out")) spec.out_dir = synth_flags.out_dir;
            }
            return rfdl::cmd_synth(spec);
        }
        if (train->parsed()) return rfdl::cmd_train(resolve_config(train, train_flags), split_index);
        if (predict->parsed()) {
            rfdl::ExperimentConfig config = resolve_config(predict, predict_flags);
            return rfdl::cmd_predict(config, resolve_model_path(predict, predict_model, config));
        }
        if (eval->parsed()) {
            rfdl::ExperimentConfig config = resolve_config(eval, eval_flags);
            return rfdl::cmd_eval(config, resolve_model_path(eval, eval_model, config), eval_on);
        }
        if (bench->parsed()) {
            rfdl::ExperimentConfig config = resolve_config(bench, bench_flags);
            if (bench->count("--sweep-dict-sizes")) config.sweep.dict_sizes = sweep_dict;
            if (bench->count("--sweep-corruption"))
                config.sweep.corruption_fractions = sweep_corrupt;
            if (bench->count("--sweep-occlusion")) config.sweep.occlusion_sides = sweep_occl;
            return rfdl::cmd_bench(config);
        }
    } catch (const rfdl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return rfdl::exit_config_error;
    }
    return rfdl::exit_config_error;  // unreachable with require_subcommand(1)
}
