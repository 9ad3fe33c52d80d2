#include "mds/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "mds/convolution.hpp"
#include "mds/dataset_io.hpp"
#include "mds/error.hpp"
#include "mds/network.hpp"
#include "mds/parallel.hpp"
#include "mds/sinc.hpp"

namespace mds {

using nlohmann::json;

namespace {

const std::vector<std::string> kSweepParameters{"delay", "fc", "clusters", "max_delay"};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("mean of an empty set");
    MeanStd out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size()));
    return out;
}

double mean_of(const std::map<std::string, double>& values, std::span<const std::string> ids) {
    double sum = 0.0;
    for (const auto& id : ids) {
        const auto it = values.find(id);
        if (it == values.end()) throw InvalidArgument("candidate lacks a score for recording " + id);
        sum += it->second;
    }
    return sum / static_cast<double>(ids.size());
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset_path.has_value() == synth.has_value()) {
        throw InvalidArgument("experiment: exactly one of dataset and synth must be given");
    }
    if (synth) synth->validate();
    model.validate();
    train.validate();
    if (scheme != "loso" && scheme != "holdout") {
        throw InvalidArgument("experiment: scheme must be loso or holdout");
    }
    if (!sweep.parameter.empty()) {
        if (std::find(kSweepParameters.begin(), kSweepParameters.end(), sweep.parameter) == kSweepParameters.end()) {
            throw InvalidArgument("experiment: unknown sweep parameter '" + sweep.parameter + "'");
        }
        if (sweep.values.empty()) throw InvalidArgument("experiment: sweep values are empty");
    }
    if (repeats < 1) throw InvalidArgument("experiment: repeats must be >= 1");
    (void)model_grid();
}

std::vector<MdsConfig> ExperimentConfig::model_grid() const { return expand_grid(model, grid); }

void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"task", c.task},
             {"model", c.model},
             {"grid", c.grid},
             {"train", c.train},
             {"scheme", c.scheme},
             {"sweep", {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}}},
             {"repeats", c.repeats},
             {"output_dir", c.output_dir.string()}};
    if (c.dataset_path) j["dataset"] = {{"path", c.dataset_path->string()}};
    if (c.synth) j["synth"] = *c.synth;
}

void from_json(const json& j, ExperimentConfig& c) {
    const ExperimentConfig d;
    c.task = j.value("task", d.task);
    c.dataset_path.reset();
    c.synth.reset();
    if (j.contains("dataset")) c.dataset_path = j.at("dataset").at("path").get<std::string>();
    if (j.contains("synth")) c.synth = j.at("synth").get<SynthSpec>();
    c.model = j.contains("model") ? j.at("model").get<MdsConfig>() : d.model;
    c.grid = j.value("grid", json::object());
    c.train = j.contains("train") ? j.at("train").get<TrainConfig>() : d.train;
    c.scheme = j.value("scheme", d.scheme);
    c.sweep = {};
    if (j.contains("sweep")) {
        c.sweep.parameter = j.at("sweep").value("parameter", std::string{});
        c.sweep.values = j.at("sweep").value("values", std::vector<double>{});
    }
    c.repeats = j.value("repeats", d.repeats);
    c.output_dir = j.value("output_dir", d.output_dir.string());
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    ExperimentConfig c = j.get<ExperimentConfig>();
    if (c.dataset_path && c.dataset_path->is_relative()) {
        c.dataset_path = path.parent_path() / *c.dataset_path;
    }
    return c;
}

std::vector<MdsConfig> expand_grid(const MdsConfig& base, const json& grid) {
    if (!grid.is_null() && !grid.is_object()) throw InvalidArgument("grid must be an object");
    std::vector<json> configs{json(base)};
    if (grid.is_object()) {
        for (const auto& [field, values] : grid.items()) {
            if (!values.is_array() || values.empty()) {
                throw InvalidArgument("grid field '" + field + "' needs a non-empty list");
            }
            if (!configs.front().contains(field)) throw InvalidArgument("grid: unknown model field '" + field + "'");
            std::vector<json> next;
            for (const auto& c : configs) {
                for (const auto& v : values) {
                    json e = c;
                    e[field] = v;
                    next.push_back(std::move(e));
                }
            }
            configs = std::move(next);
        }
    }
    std::vector<MdsConfig> out;
    for (const auto& c : configs) {
        auto m = c.get<MdsConfig>();
        m.validate();
        out.push_back(m);
    }
    return out;
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
    if (config.dataset_path) return load_dataset(*config.dataset_path);
    if (config.synth) return gen_multi_delay_task(*config.synth);
    throw InvalidArgument("experiment: no dataset source");
}

std::vector<Fold> loso_folds(const Dataset& dataset) {
    const auto speakers = dataset.speakers(Partition::Dev);
    if (speakers.size() < 2) {
        throw InvalidArgument("leave-one-speaker-out needs at least two dev speakers");
    }
    std::vector<Fold> folds;
    for (const auto& s : speakers) {
        Fold f;
        f.speaker = s;
        for (const Recording* r : dataset.partition(Partition::Dev)) {
            (r->speaker_id() == s ? f.held_out : f.selection).push_back(r->id);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

json cv_to_json(const CvResult& r) {
    json folds = json::array();
    for (const auto& f : r.folds) {
        folds.push_back({{"speaker", f.speaker}, {"chosen", f.chosen}, {"taus", f.taus}, {"ccc", f.ccc}});
    }
    return json{{"folds", folds}, {"ccc_mean", r.mean}, {"ccc_std", r.std}};
}

CvResult loso_select(const Dataset& dataset, std::span<const Candidate> candidates) {
    if (candidates.empty()) throw InvalidArgument("loso_select: no candidates");
    CvResult out;
    std::vector<double> values;
    for (const auto& fold : loso_folds(dataset)) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const double score = mean_of(candidates[c].recording_ccc, fold.selection);
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        FoldResult fr;
        fr.speaker = fold.speaker;
        fr.chosen = candidates[best].id;
        fr.taus = candidates[best].taus;
        fr.ccc = mean_of(candidates[best].recording_ccc, fold.held_out);
        values.push_back(fr.ccc);
        out.folds.push_back(std::move(fr));
    }
    const auto ms = mean_std(values);
    out.mean = ms.mean;
    out.std = ms.std;
    return out;
}

std::vector<Candidate> candidates_from_runs(const Dataset& dataset, std::span<const RunRecord> runs,
                                            int config_index) {
    const auto dev = dataset.partition(Partition::Dev);
    std::vector<Candidate> out;
    for (const auto& run : runs) {
        for (std::size_t e = 0; e < run.val_recording_ccc.size(); ++e) {
            Candidate c;
            c.id = {{"config", config_index}, {"restart", run.restart}, {"epoch", e}};
            const auto& scores = run.val_recording_ccc[e];
            if (scores.size() != dev.size()) throw ShapeMismatch("run record does not match the dev partition");
            for (std::size_t i = 0; i < dev.size(); ++i) c.recording_ccc[dev[i]->id] = scores[i];
            c.taus = run.taus[e];
            out.push_back(std::move(c));
        }
    }
    return out;
}

namespace {

/// Restarts of every grid config, trained in parallel as one flat job list.
std::vector<std::vector<RunRecord>> train_grid(const Dataset& dataset, std::span<const MdsConfig> grid,
                                               const TrainConfig& train) {
    if (grid.empty()) throw InvalidArgument("hyperparameter grid is empty");
    train.validate();
    const auto restarts = static_cast<std::size_t>(train.restarts);
    std::vector<std::vector<RunRecord>> runs(grid.size(), std::vector<RunRecord>(restarts));
    parallel_for(grid.size() * restarts, train.jobs, [&](std::size_t job) {
        const std::size_t c = job / restarts;
        const std::size_t k = job % restarts;
        runs[c][k] = train_restart(dataset, grid[c], train, static_cast<int>(k));
    });
    return runs;
}

}  // namespace

CvResult loso_cv(const Dataset& dataset, std::span<const MdsConfig> grid, const TrainConfig& train) {
    (void)loso_folds(dataset);
    const auto runs = train_grid(dataset, grid, train);
    std::vector<Candidate> candidates;
    for (std::size_t c = 0; c < runs.size(); ++c) {
        auto cs = candidates_from_runs(dataset, runs[c], static_cast<int>(c));
        std::move(cs.begin(), cs.end(), std::back_inserter(candidates));
    }
    return loso_select(dataset, candidates);
}

EvalMetrics evaluate(const MdsModel& model, std::span<const Recording* const> recordings) {
    if (recordings.empty()) throw InvalidArgument("evaluate: no recordings");
    std::vector<SampledSignal> y;
    std::vector<SampledSignal> yhat;
    for (const Recording* r : recordings) {
        y.push_back(r->labels);
        yhat.push_back(predict(model, r->features));
    }
    return concat_eval(y, yhat);
}

json holdout_to_json(const HoldoutResult& r) {
    json j{{"chosen", r.chosen},
           {"taus", r.model.params.taus},
           {"dev", {{"ccc", r.dev.ccc}, {"rmse", r.dev.rmse}}}};
    if (r.test) j["test"] = {{"ccc", r.test->ccc}, {"rmse", r.test->rmse}};
    return j;
}

HoldoutResult holdout_eval(const Dataset& dataset, std::span<const MdsConfig> grid, const TrainConfig& train) {
    const auto runs = train_grid(dataset, grid, train);
    const auto dev = dataset.partition(Partition::Dev);
    std::optional<HoldoutResult> best;
    for (std::size_t c = 0; c < runs.size(); ++c) {
        for (const auto& run : runs[c]) {
            if (run.diverged || !run.best_model) continue;
            const EvalMetrics m = evaluate(*run.best_model, dev);
            if (!best || m.ccc > best->dev.ccc) {
                best = HoldoutResult{{{"config", c}, {"restart", run.restart}, {"epoch", run.best_epoch}},
                                     *run.best_model,
                                     m,
                                     std::nullopt};
            }
        }
    }
    if (!best) throw DivergenceError("holdout: every restart diverged");
    const auto test = dataset.partition(Partition::Test);
    if (!test.empty()) best->test = evaluate(best->model, test);
    return *best;
}

json curve_to_json(const Curve& c) {
    json points = json::array();
    for (const auto& p : c.points) {
        points.push_back(
            {{"parameter", p.parameter}, {"ccc_mean", p.ccc_mean}, {"ccc_std", p.ccc_std}, {"detail", p.detail}});
    }
    return json{{"name", c.name}, {"parameter", c.parameter}, {"points", points}};
}

Curve curve_from_json(const json& j) {
    Curve c;
    c.name = j.at("name").get<std::string>();
    c.parameter = j.at("parameter").get<std::string>();
    for (const auto& p : j.at("points")) {
        c.points.push_back({p.at("parameter").get<double>(), p.at("ccc_mean").get<double>(),
                            p.at("ccc_std").get<double>(), p.value("detail", json::object())});
    }
    return c;
}

namespace {

/// Runs fn for every value not already stored in the state directory.
Curve run_sweep(const std::string& name, const std::string& parameter, std::span<const double> values,
                const SweepOptions& options, const std::function<CurvePoint(double)>& fn) {
    if (values.empty()) throw InvalidArgument(name + ": empty grid");
    if (options.repeats < 1) throw InvalidArgument(name + ": repeats must be >= 1");
    Curve curve{name, parameter, {}};
    if (options.state_dir) std::filesystem::create_directories(*options.state_dir);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::optional<std::filesystem::path> file;
        if (options.state_dir) {
            file = *options.state_dir / (name + "-" + std::to_string(i) + ".json");
            if (std::filesystem::exists(*file)) {
                std::ifstream in(*file);
                const json j = json::parse(in);
                if (j.at("parameter").get<double>() == values[i]) {
                    curve.points.push_back({values[i], j.at("ccc_mean").get<double>(), j.at("ccc_std").get<double>(),
                                            j.value("detail", json::object())});
                    continue;
                }
            }
        }
        CurvePoint p = fn(values[i]);
        p.parameter = values[i];
        if (file) {
            const auto tmp = std::filesystem::path(file->string() + ".tmp");
            {
                std::ofstream out(tmp);
                if (!out) throw IoError("cannot write " + tmp.string());
                out << json{{"parameter", p.parameter}, {"ccc_mean", p.ccc_mean}, {"ccc_std", p.ccc_std},
                            {"detail", p.detail}}
                           .dump(1)
                    << '\n';
            }
            std::filesystem::rename(tmp, *file);
        }
        curve.points.push_back(std::move(p));
    }
    return curve;
}

/// LOSO over repeats with train seeds seed, seed+1, ...
CurvePoint repeated_loso(const Dataset& dataset, const MdsConfig& model, const TrainConfig& train, int repeats) {
    std::vector<double> values;
    json detail = json::array();
    for (int r = 0; r < repeats; ++r) {
        TrainConfig t = train;
        t.seed = train.seed + static_cast<std::uint64_t>(r);
        const std::vector<MdsConfig> grid{model};
        const CvResult cv = loso_cv(dataset, grid, t);
        for (const auto& f : cv.folds) values.push_back(f.ccc);
        detail.push_back(cv_to_json(cv));
    }
    const auto ms = mean_std(values);
    return CurvePoint{0.0, ms.mean, ms.std, json{{"repeats", detail}}};
}

}  // namespace

Dataset shift_features(const Dataset& dataset, double tau) {
    Dataset out = dataset;
    for (auto& r : out.recordings) {
        auto& f = r.features;
        const int half_len = static_cast<int>(std::ceil(std::abs(tau) * f.fs)) + 1;
        for (std::size_t d = 0; d < f.dims(); ++d) {
            const SampledSignal ch(f.frames.column(d), f.fs);
            const SampledSignal shifted = apply_delay(ch, tau, f.fs / 2.0, half_len);
            for (std::size_t t = 0; t < f.length(); ++t) f.frames(t, d) = shifted[t];
        }
    }
    return out;
}

MdsConfig probe_config(double fs, int input_dim) {
    MdsConfig c;
    c.clusters = 1;
    c.input_dim = input_dim;
    c.trunk_layers = 1;
    c.trunk_filters = 1;
    c.trunk_kernel_len = std::max(1, static_cast<int>(std::lround(2.0 * fs)));
    c.head_kernel_len = 1;
    c.fs = fs;
    c.fc = fs / 2.0;
    c.sinc_half_len = 1;
    c.tau_init_lo = 0.0;
    c.tau_init_hi = 0.0;
    return c;
}

Curve sweep_delay(const Dataset& dataset, std::span<const double> taus, const TrainConfig& train,
                  const SweepOptions& options) {
    if (dataset.recordings.empty()) throw InvalidArgument("sweep_delay: empty dataset");
    const auto& f0 = dataset.recordings.front().features;
    const MdsConfig probe = probe_config(f0.fs, static_cast<int>(f0.dims()));
    TrainConfig t = train;
    t.learn_tau = false;
    return run_sweep("delay", "delay", taus, options, [&](double tau) {
        return repeated_loso(shift_features(dataset, tau), probe, t, options.repeats);
    });
}

Curve sweep_bandwidth(std::span<const SampledSignal> labels, std::span<const double> fcs, int half_len) {
    if (labels.empty()) throw InvalidArgument("sweep_bandwidth: no label traces");
    if (half_len < 1) throw InvalidArgument("sweep_bandwidth: half_len must be >= 1");
    const double fs = labels.front().fs();
    for (double fc : fcs) {
        if (!(fc > 0.0) || fc > fs / 2.0) throw InvalidArgument("sweep_bandwidth: fc must lie in (0, fs/2]");
    }
    return run_sweep("bandwidth", "fc", fcs, {}, [&](double fc) {
        const SincKernel k{0.0, fc, fs, half_len};
        const auto h = make_sinc_kernel(k);
        std::vector<double> values;
        for (const auto& y : labels) {
            if (y.fs() != fs) throw ShapeMismatch("sweep_bandwidth: label traces differ in fs");
            const auto filtered = convolve_same(y.values(), h, k.center_index());
            values.push_back(ccc(y.values(), filtered));
        }
        const auto ms = mean_std(values);
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        return CurvePoint{fc, ms.mean, ms.std, json{{"min", *lo}, {"max", *hi}}};
    });
}

Curve sweep_clusters(const Dataset& dataset, const MdsConfig& base, std::span<const double> clusters,
                     const TrainConfig& train, const SweepOptions& options) {
    for (double m : clusters) {
        if (!(m >= 1.0) || m != std::floor(m)) throw InvalidArgument("sweep_clusters: M must be a positive integer");
    }
    return run_sweep("clusters", "clusters", clusters, options, [&](double m) {
        MdsConfig c = base;
        c.clusters = static_cast<int>(m);
        return repeated_loso(dataset, c, train, options.repeats);
    });
}

Curve sweep_max_delay(const Dataset& dataset, const MdsConfig& base, std::span<const double> tau_maxes,
                      const TrainConfig& train, const SweepOptions& options) {
    for (double t : tau_maxes) {
        if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("sweep_max_delay: tau_max must be positive");
    }
    return run_sweep("max_delay", "max_delay", tau_maxes, options, [&](double tau_max) {
        MdsConfig c = base;
        c.tau_init_lo = std::min(base.tau_init_lo, tau_max);
        c.tau_init_hi = tau_max;
        c.sinc_half_len = static_cast<int>(std::lround(tau_max * base.fs)) + 1;
        return repeated_loso(dataset, c, train, options.repeats);
    });
}

SampledSignal fuse_predictions(std::span<const SampledSignal> predictions) {
    if (predictions.empty()) throw InvalidArgument("fuse_predictions: nothing to fuse");
    const auto& first = predictions.front();
    std::vector<double> sum(first.size(), 0.0);
    for (const auto& p : predictions) {
        if (p.size() != first.size() || p.fs() != first.fs()) {
            throw ShapeMismatch("fuse_predictions: predictions differ in length or fs");
        }
        for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += p[t];
    }
    for (double& v : sum) v /= static_cast<double>(predictions.size());
    return SampledSignal(std::move(sum), first.fs());
}

SampledSignal fuse_predictions(const SampledSignal& a, const SampledSignal& b) {
    const std::vector<SampledSignal> both{a, b};
    return fuse_predictions(both);
}

MaskedEval eval_masked(std::span<const SampledSignal> y, std::span<const SampledSignal> yhat,
                       std::span<const std::vector<bool>> masks) {
    if (y.size() != yhat.size() || y.size() != masks.size()) {
        throw ShapeMismatch("eval_masked: need one prediction and one mask per recording");
    }
    std::vector<double> ys;
    std::vector<double> ps;
    std::vector<bool> m;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i].size() != yhat[i].size() || masks[i].size() != y[i].size()) {
            throw ShapeMismatch("eval_masked: mask does not align with its recording");
        }
        ys.insert(ys.end(), y[i].values().begin(), y[i].values().end());
        ps.insert(ps.end(), yhat[i].values().begin(), yhat[i].values().end());
        m.insert(m.end(), masks[i].begin(), masks[i].end());
    }
    MaskedEval out;
    out.selected = static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
    if (out.selected == 0) throw InvalidArgument("eval_masked: mask selects no samples");
    out.masked_ccc = masked_ccc(ys, ps, m);
    out.full_ccc = ccc(ys, ps);
    return out;
}

MaskedEval eval_masked(const MdsModel& model, std::span<const Recording* const> recordings,
                       std::span<const std::vector<bool>> masks) {
    std::vector<SampledSignal> y;
    std::vector<SampledSignal> yhat;
    for (const Recording* r : recordings) {
        y.push_back(r->labels);
        yhat.push_back(predict(model, r->features));
    }
    return eval_masked(y, yhat, masks);
}

}  // namespace mds
