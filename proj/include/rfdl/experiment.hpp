// Experiment harness behind the command-line tool: configuration parsing,
// the train/predict/eval/bench drivers, and their on-disk artifacts.  The
// binary in tools/ is a thin flag-parsing wrapper over these entry points so
// every behavior stays testable in-process.
#pragma once

#include "rfdl/data.hpp"
#include "rfdl/model_io.hpp"
#include "rfdl/solver.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfdl {

/// Stamped into every run record and reported by --version.
inline constexpr const char* kVersion = "rfdl 1.0.0";

/// Process exit codes shared by every command.
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,  ///< bad flags, malformed config, invalid values
    exit_data_error = 3,    ///< unreadable/ill-shaped datasets, bad splits
    exit_divergence = 4,    ///< solver state left the trusted range
    exit_max_iter = 5,      ///< stopped at max_iter without converging
};

/// Bad or inconsistent configuration (flags or config JSON); exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Per-class train/test split protocol: split s of n_splits draws its
/// training indices with seed base_seed + s.
struct SplitSpec {
    int per_class_train = 0;  ///< 0 means "no split": use the full dataset
    int n_splits = 1;
    std::uint64_t base_seed = 0;
};

/// Benchmark sweep families.  Each non-empty list runs as its own family
/// (no cross products): dictionary sizes, corrupted-pixel fractions, and
/// occlusion block sides.
struct SweepSpec {
    std::vector<Index> dict_sizes;
    std::vector<double> corruption_fractions;
    std::vector<Index> occlusion_sides;
};

/// Everything a run needs.  Serialized in full into the run record so any
/// result can be reproduced from that record alone.
struct ExperimentConfig {
    std::string manifest;          ///< dataset manifest path
    std::string method = "jrfdl";  ///< "jrfdl", "djrfdl", or "cf_baseline"
    HyperParams params;
    SplitSpec split;
    SweepSpec sweep;
    std::string out_dir = ".";
};

/// Throws ConfigError on an unknown method, n_splits < 1, negative split
/// size, or sweep values that cannot be valid for any dataset.
void validate_config(const ExperimentConfig& config);

/// Parse a config from JSON text.  Unknown keys are rejected (they are
/// almost always typos).  A run record produced by a previous command is
/// accepted too: its embedded "config" object is used, so re-running from
/// the record reproduces the run.  Relative manifest paths resolve against
/// `base_dir`.
ExperimentConfig config_from_json(const std::string& text, const std::string& base_dir);

/// Round-trip companion of config_from_json.
std::string config_to_json(const ExperimentConfig& config);

/// Read and parse a config (or run-record) file.
ExperimentConfig load_config(const std::string& path);

/// One (train, eval) outcome.  `status` is "ok", "maxiter" (usable model,
/// stopped at the iteration cap), or an error note; accuracy is NaN when the
/// run produced no usable model.
struct SplitResult {
    int split = 0;
    double accuracy = 0;
    double train_time_s = 0;
    double test_time_s = 0;
    int iterations = 0;
    std::string status = "ok";
};

/// Per-split rows plus their aggregate.  `mean`, `stddev` (sample standard
/// deviation over splits; 0 for a single row) and `best` cover the rows with
/// a usable accuracy.
struct ResultRecord {
    std::vector<SplitResult> splits;
    double mean = 0;
    double stddev = 0;
    double best = 0;
};

/// Sort rows by split index and fill the aggregate fields.
ResultRecord aggregate(std::vector<SplitResult> splits);

/// Synthetic-dataset generation request.
struct SynthSpec {
    Index classes = 3;
    Index dim = 30;
    Index per_class = 30;
    double separation = 100.0;
    double noise_sigma = 1e-5;
    unsigned seed = 0;
    Index height = 0, width = 0;  ///< optional image shape; height*width == dim
    std::string out_dir = ".";
};

/// JSON round-trip of a SynthSpec, with the same run-record unwrapping as
/// config_from_json, so `synth --config run.json` regenerates a dataset.
SynthSpec synth_from_json(const std::string& text);
std::string synth_to_json(const SynthSpec& spec);
SynthSpec load_synth_spec(const std::string& path);

/// Write features.csv, labels.txt and dataset.json under spec.out_dir.
int cmd_synth(const SynthSpec& spec);

/// Train `config.method` on the dataset (training side of split index
/// `split_index` when a split is configured, the full dataset otherwise) and
/// persist model.hymd + trace.csv.  A model that hits max_iter is still
/// saved; the run record flags it and the exit code is exit_max_iter.
int cmd_train(const ExperimentConfig& config, int split_index = 0);

/// Load a model and write per-sample predictions.csv for the whole dataset.
int cmd_predict(const ExperimentConfig& config, const std::string& model_path);

/// Evaluate a saved model on the dataset: one SplitResult per configured
/// split, taken on the `on` side ("test", "train", or "all" for the full
/// dataset).  Writes results.json + results.csv.
int cmd_eval(const ExperimentConfig& config, const std::string& model_path,
             const std::string& on = "test");

/// For every sweep value and split: corrupt/occlude, train, evaluate, record.
/// Per-run failures are recorded in the rows and the bench continues.
/// Writes sweep.csv + results.json.
int cmd_bench(const ExperimentConfig& config);

}  // namespace rfdl
