#include "mds/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mds/error.hpp"
#include "mds/metrics.hpp"
#include "mds/network.hpp"
#include "mds/parallel.hpp"
#include "mds/random.hpp"

namespace mds {

using nlohmann::json;

void TrainConfig::validate() const {
    if (!(lr >= 0.0)) throw InvalidArgument("TrainConfig: lr must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("TrainConfig: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("TrainConfig: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidArgument("TrainConfig: eps must be positive");
    if (epochs < 1) throw InvalidArgument("TrainConfig: epochs must be >= 1");
    if (restarts < 1) throw InvalidArgument("TrainConfig: restarts must be >= 1");
}

void to_json(json& j, const TrainConfig& c) {
    j = json{{"lr", c.lr},         {"tau_lr", c.tau_lr},     {"beta1", c.beta1},
             {"beta2", c.beta2},   {"eps", c.eps},           {"epochs", c.epochs},
             {"restarts", c.restarts}, {"seed", c.seed},     {"learn_tau", c.learn_tau},
             {"jobs", c.jobs}};
}

void from_json(const json& j, TrainConfig& c) {
    const TrainConfig d;
    c.lr = j.value("lr", d.lr);
    c.tau_lr = j.value("tau_lr", d.tau_lr);
    c.beta1 = j.value("beta1", d.beta1);
    c.beta2 = j.value("beta2", d.beta2);
    c.eps = j.value("eps", d.eps);
    c.epochs = j.value("epochs", d.epochs);
    c.restarts = j.value("restarts", d.restarts);
    c.seed = j.value("seed", d.seed);
    c.learn_tau = j.value("learn_tau", d.learn_tau);
    c.jobs = j.value("jobs", d.jobs);
}

double RunRecord::best_val_ccc() const {
    if (best_epoch < 0 || best_epoch >= static_cast<int>(val_ccc.size())) {
        return -std::numeric_limits<double>::infinity();
    }
    return val_ccc[static_cast<std::size_t>(best_epoch)];
}

json run_record_to_json(const RunRecord& r) {
    json j{{"restart", r.restart},
           {"model_seed", r.model_seed},
           {"train_loss", r.train_loss},
           {"val_ccc", r.val_ccc},
           {"best_epoch", r.best_epoch},
           {"diverged", r.diverged}};
    if (r.best_model) {
        j["final_taus"] = r.best_model->params.taus;
    }
    j["epoch_taus"] = r.taus;
    return j;
}

int select_best_epoch(std::span<const double> val_ccc) {
    if (val_ccc.empty()) {
        throw InvalidArgument("select_best_epoch: empty record");
    }
    int best = 0;
    for (std::size_t i = 1; i < val_ccc.size(); ++i) {
        if (val_ccc[i] > val_ccc[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

int select_best_epoch(const RunRecord& record) { return select_best_epoch(record.val_ccc); }

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

RunRecord train_restart(const Dataset& dataset, const MdsConfig& model_cfg, const TrainConfig& cfg,
                        int restart) {
    cfg.validate();
    model_cfg.validate();
    const auto train_set = dataset.partition(Partition::Train);
    const auto dev_set = dataset.partition(Partition::Dev);
    if (train_set.empty()) throw InvalidArgument("train: empty train partition");
    if (dev_set.empty()) throw InvalidArgument("train: empty validation partition");

    RunRecord rec;
    rec.restart = restart;
    rec.model_seed = make_rng(cfg.seed, {tag(RngStream::Restart), static_cast<std::uint64_t>(restart)})();
    Rng shuffle_rng = make_rng(cfg.seed, {tag(RngStream::Shuffle), static_cast<std::uint64_t>(restart)});

    MdsModel model = init_model(model_cfg, rec.model_seed);
    const std::size_t n_params = model.params.size();
    const std::size_t n_taus = model.params.taus.size();
    const std::size_t n_weights = n_params - n_taus;

    const AdamConfig weight_opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
    const AdamConfig tau_opt{cfg.effective_tau_lr(), cfg.beta1, cfg.beta2, cfg.eps};
    AdamState weight_state(n_weights);
    AdamState tau_state(n_taus);
    std::int64_t step = 0;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    double best = -std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const Recording& r = *train_set[idx];
            const ForwardTrace tr = forward(model, r.features);
            const Gradients g = backward(model, r.features, r.labels, tr);
            if (!std::isfinite(g.loss)) {
                rec.diverged = true;
                break;
            }
            loss_sum += g.loss;

            std::vector<double> flat = model.params.flatten();
            const std::vector<double> gflat = g.params.flatten();
            ++step;
            std::span<double> all(flat);
            std::span<const double> gall(gflat);
            adam_step(all.first(n_weights), gall.first(n_weights), weight_state, step, weight_opt);
            if (cfg.learn_tau) {
                adam_step(all.last(n_taus), gall.last(n_taus), tau_state, step, tau_opt);
            }
            if (!all_finite(flat)) {
                rec.diverged = true;
                break;
            }
            model.params.assign(flat);
            model.clamp_taus();
        }
        if (rec.diverged) break;
        rec.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

        std::vector<double> per_rec;
        per_rec.reserve(dev_set.size());
        for (const Recording* r : dev_set) {
            per_rec.push_back(ccc(r->labels, predict(model, r->features)));
        }
        const double val = std::accumulate(per_rec.begin(), per_rec.end(), 0.0) / static_cast<double>(per_rec.size());
        if (!std::isfinite(val)) {
            rec.diverged = true;
            break;
        }
        rec.val_ccc.push_back(val);
        rec.val_recording_ccc.push_back(std::move(per_rec));
        rec.taus.push_back(model.params.taus);
        if (val > best) {
            best = val;
            rec.best_epoch = epoch;
            rec.best_model = model;
        }
    }
    if (rec.diverged) {
        // Keep the record lengths consistent with the epochs that completed.
        rec.val_recording_ccc.resize(rec.val_ccc.size());
        rec.taus.resize(rec.val_ccc.size());
        rec.train_loss.resize(rec.val_ccc.size());
    }
    return rec;
}

std::vector<RunRecord> train_all(const Dataset& dataset, const MdsConfig& model_cfg, const TrainConfig& cfg) {
    cfg.validate();
    std::vector<RunRecord> runs(static_cast<std::size_t>(cfg.restarts));
    parallel_for(runs.size(), cfg.jobs, [&](std::size_t k) {
        runs[k] = train_restart(dataset, model_cfg, cfg, static_cast<int>(k));
    });
    return runs;
}

const RunRecord& best_run(std::span<const RunRecord> runs) {
    const RunRecord* best = nullptr;
    for (const auto& r : runs) {
        if (r.diverged || !r.best_model) continue;
        if (!best || r.best_val_ccc() > best->best_val_ccc()) best = &r;
    }
    if (!best) {
        throw DivergenceError("train: every restart diverged");
    }
    return *best;
}

RunRecord train(const Dataset& dataset, const MdsConfig& model_cfg, const TrainConfig& cfg) {
    const auto runs = train_all(dataset, model_cfg, cfg);
    return best_run(runs);
}

}  // namespace mds
