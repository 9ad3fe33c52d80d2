#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mds/adam.hpp"
#include "mds/features.hpp"
#include "mds/model.hpp"

namespace mds {

struct TrainConfig {
    double lr = 0.001;
    /// Learning rate of the delay parameters; negative means "same as lr".
    double tau_lr = -1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 300;
    int restarts = 3;
    std::uint64_t seed = 0;
    bool learn_tau = true;
    int jobs = 1;

    double effective_tau_lr() const noexcept { return tau_lr < 0.0 ? lr : tau_lr; }
    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// History of one training restart.
struct RunRecord {
    int restart = 0;
    std::uint64_t model_seed = 0;
    std::vector<double> train_loss;                      ///< mean online loss per epoch
    std::vector<double> val_ccc;                         ///< mean dev CCC per epoch
    std::vector<std::vector<double>> val_recording_ccc;  ///< [epoch][dev recording]
    std::vector<std::vector<double>> taus;               ///< taus at the end of each epoch
    int best_epoch = -1;
    std::optional<MdsModel> best_model;
    bool diverged = false;

    double best_val_ccc() const;
};

nlohmann::json run_record_to_json(const RunRecord& r);

/// Index of the largest value, earliest on ties. Throws InvalidArgument when empty.
int select_best_epoch(std::span<const double> val_ccc);
int select_best_epoch(const RunRecord& record);

/// Trains restart k alone. Its random streams depend only on (train.seed, k).
RunRecord train_restart(const Dataset& dataset, const MdsConfig& model_cfg, const TrainConfig& train_cfg,
                        int restart);

/// All restarts, run on up to train_cfg.jobs threads.
std::vector<RunRecord> train_all(const Dataset& dataset, const MdsConfig& model_cfg,
                                 const TrainConfig& train_cfg);

/// Best non-diverged restart by best validation CCC (earliest restart on ties).
/// Throws DivergenceError when every restart diverged.
RunRecord train(const Dataset& dataset, const MdsConfig& model_cfg, const TrainConfig& train_cfg);

const RunRecord& best_run(std::span<const RunRecord> runs);

}  // namespace mds
