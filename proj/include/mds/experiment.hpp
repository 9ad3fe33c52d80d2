#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mds/features.hpp"
#include "mds/metrics.hpp"
#include "mds/model.hpp"
#include "mds/synth.hpp"
#include "mds/train.hpp"

namespace mds {

struct SweepSpec {
    std::string parameter;  ///< delay | fc | clusters | max_delay; empty for no sweep
    std::vector<double> values;
};

/// Everything one harness invocation needs. JSON layout:
///
///   { "task": str,
///     "dataset": {"path": dir}   or   "synth": SynthSpec,
///     "model": MdsConfig, "grid": {field: [values...]}, "train": TrainConfig,
///     "scheme": "loso" | "holdout",
///     "sweep": {"parameter": str, "values": [...]},
///     "repeats": int, "output_dir": dir }
///
/// "grid" overrides MdsConfig fields; its cartesian product (keys in sorted order)
/// is the hyperparameter grid. An absent grid means the base model alone.
struct ExperimentConfig {
    std::string task = "synthetic";
    std::optional<std::filesystem::path> dataset_path;
    std::optional<SynthSpec> synth;
    MdsConfig model;
    nlohmann::json grid = nlohmann::json::object();
    TrainConfig train;
    std::string scheme = "loso";
    SweepSpec sweep;
    int repeats = 1;
    std::filesystem::path output_dir = "results";

    void validate() const;
    std::vector<MdsConfig> model_grid() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Cartesian product of per-field values applied on top of base. Throws
/// InvalidArgument for an empty value list or a grid that yields an invalid config.
std::vector<MdsConfig> expand_grid(const MdsConfig& base, const nlohmann::json& grid);

/// Loads the configured dataset directory or generates the synthetic task.
Dataset load_experiment_dataset(const ExperimentConfig& config);

// Leave-one-speaker-out over the dev partition. Models train on the train
// partition; for each held-out dev speaker the candidate (grid config, restart,
// epoch) with the best mean CCC on the other dev speakers' recordings is scored
// on the held-out speaker's recordings.

struct Fold {
    std::string speaker;
    std::vector<std::string> held_out;   ///< recording ids scored in this fold
    std::vector<std::string> selection;  ///< recording ids used to choose the candidate
};

/// One fold per dev speaker, in first-appearance order. Throws InvalidArgument
/// with fewer than two dev speakers.
std::vector<Fold> loso_folds(const Dataset& dataset);

struct Candidate {
    nlohmann::json id;                          ///< e.g. {"config": c, "restart": k, "epoch": e}
    std::map<std::string, double> recording_ccc;
    std::vector<double> taus;
};

struct FoldResult {
    std::string speaker;
    nlohmann::json chosen;
    std::vector<double> taus;
    double ccc = 0.0;
};

struct CvResult {
    std::vector<FoldResult> folds;
    double mean = 0.0;
    double std = 0.0;  ///< population std over folds
};

nlohmann::json cv_to_json(const CvResult& r);

/// Nested selection over precomputed candidates; ties go to the earliest candidate.
CvResult loso_select(const Dataset& dataset, std::span<const Candidate> candidates);

/// Every epoch of every restart as a candidate.
std::vector<Candidate> candidates_from_runs(const Dataset& dataset, std::span<const RunRecord> runs,
                                            int config_index);

/// Trains each grid config (all restarts) then runs loso_select.
CvResult loso_cv(const Dataset& dataset, std::span<const MdsConfig> grid, const TrainConfig& train);

struct HoldoutResult {
    nlohmann::json chosen;
    MdsModel model;
    EvalMetrics dev;
    std::optional<EvalMetrics> test;
};

nlohmann::json holdout_to_json(const HoldoutResult& r);

/// Concatenated-prediction scheme: best epoch per restart, then the restart/config
/// with the highest dev CCC on the concatenated predictions.
HoldoutResult holdout_eval(const Dataset& dataset, std::span<const MdsConfig> grid, const TrainConfig& train);

/// Concatenated metrics of model predictions on the given recordings.
EvalMetrics evaluate(const MdsModel& model, std::span<const Recording* const> recordings);

// Sweeps. Every point is the mean and population std over (repeat, fold) CCC values;
// sweep_bandwidth uses per-recording values.

struct CurvePoint {
    double parameter = 0.0;
    double ccc_mean = 0.0;
    double ccc_std = 0.0;
    nlohmann::json detail = nlohmann::json::object();
};

struct Curve {
    std::string name;
    std::string parameter;
    std::vector<CurvePoint> points;
};

nlohmann::json curve_to_json(const Curve& c);
Curve curve_from_json(const nlohmann::json& j);

struct SweepOptions {
    /// When set, each finished point is stored in <state_dir>/<curve>-<index>.json and
    /// reused on the next run.
    std::optional<std::filesystem::path> state_dir;
    int repeats = 1;
};

/// Delays every feature channel by tau (fc = fs/2); labels are untouched.
Dataset shift_features(const Dataset& dataset, double tau);

/// One filter spanning 2 s, tanh, then a linear readout; the delay stays at zero.
MdsConfig probe_config(double fs, int input_dim);

Curve sweep_delay(const Dataset& dataset, std::span<const double> taus, const TrainConfig& train,
                  const SweepOptions& options = {});

/// Filters each label trace with a zero-delay sinc of cutoff fc and reports its
/// CCC against the original; detail holds the per-trace min and max. Throws
/// InvalidArgument for fc outside (0, fs/2].
Curve sweep_bandwidth(std::span<const SampledSignal> labels, std::span<const double> fcs, int half_len);

Curve sweep_clusters(const Dataset& dataset, const MdsConfig& base, std::span<const double> clusters,
                     const TrainConfig& train, const SweepOptions& options = {});

/// Per tau_max: tau_init_hi = tau_max and sinc_half_len = round(tau_max * fs) + 1,
/// so taus can travel exactly up to tau_max.
Curve sweep_max_delay(const Dataset& dataset, const MdsConfig& base, std::span<const double> tau_maxes,
                      const TrainConfig& train, const SweepOptions& options = {});

/// Elementwise mean. Throws ShapeMismatch on differing lengths or fs.
SampledSignal fuse_predictions(const SampledSignal& a, const SampledSignal& b);
SampledSignal fuse_predictions(std::span<const SampledSignal> predictions);

struct MaskedEval {
    double masked_ccc = 0.0;
    double full_ccc = 0.0;
    std::size_t selected = 0;
};

/// CCC on the concatenation of the recordings, restricted to the mask and in full.
/// Throws InvalidArgument when no sample is selected.
MaskedEval eval_masked(std::span<const SampledSignal> y, std::span<const SampledSignal> yhat,
                       std::span<const std::vector<bool>> masks);
MaskedEval eval_masked(const MdsModel& model, std::span<const Recording* const> recordings,
                       std::span<const std::vector<bool>> masks);

}  // namespace mds
