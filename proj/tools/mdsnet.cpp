// mdsnet: command-line front end for training and evaluating multi-delay sinc networks.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mds/dataset_io.hpp"
#include "mds/error.hpp"
#include "mds/experiment.hpp"
#include "mds/network.hpp"
#include "mds/report.hpp"
#include "mds/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--jobs", c.jobs, "parallel training jobs")->check(CLI::PositiveNumber);
}

mds::ExperimentConfig load_config(const Common& c) {
    auto cfg = mds::load_experiment_config(c.config);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.seed) cfg.train.seed = *c.seed;
    if (c.jobs) cfg.train.jobs = *c.jobs;
    cfg.validate();
    return cfg;
}

std::vector<double> sweep_values(const mds::ExperimentConfig& cfg, const std::string& parameter) {
    if (cfg.sweep.parameter != parameter) {
        throw mds::InvalidArgument("config sweep.parameter must be '" + parameter + "'");
    }
    return cfg.sweep.values;
}

mds::SweepOptions sweep_options(const mds::ExperimentConfig& cfg) {
    return {cfg.output_dir / "points", cfg.repeats};
}

void finish(const mds::ExperimentReport& report, const fs::path& dir) {
    mds::emit_report(report, dir);
    std::cout << mds::report_to_json(report)["metrics"].dump(2) << '\n';
    for (const auto& c : report.curves) std::cout << "wrote " << (dir / (c.name + ".csv")).string() << '\n';
}

json config_summary(const mds::ExperimentConfig& cfg) {
    json j = cfg;
    j.erase("output_dir");
    return j;
}

int cmd_synth(const Common& c) {
    auto cfg = mds::load_experiment_config(c.config);
    if (!cfg.synth) throw mds::InvalidArgument("synth: config has no synth section");
    if (c.seed) cfg.synth->seed = *c.seed;
    const fs::path out = c.out.empty() ? cfg.output_dir : fs::path(c.out);
    const auto ds = mds::gen_multi_delay_task(*cfg.synth);
    mds::save_dataset(ds, out);
    std::cout << "wrote " << ds.recordings.size() << " recordings to " << out.string() << '\n';
    return 0;
}

int cmd_train(const Common& c) {
    const auto cfg = load_config(c);
    const auto ds = mds::load_experiment_dataset(cfg);
    const auto grid = cfg.model_grid();
    mds::ExperimentReport report;
    report.metrics["config"] = config_summary(cfg);
    if (cfg.scheme == "loso") {
        report.metrics["loso"] = mds::cv_to_json(mds::loso_cv(ds, grid, cfg.train));
    } else {
        const auto result = mds::holdout_eval(ds, grid, cfg.train);
        report.metrics["holdout"] = mds::holdout_to_json(result);
        fs::create_directories(cfg.output_dir);
        mds::save_model(result.model, cfg.output_dir / "model.json");
    }
    finish(report, cfg.output_dir);
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, const std::string& out) {
    const auto model = mds::load_model(model_path);
    const auto ds = mds::load_dataset(data_dir);
    mds::ExperimentReport report;
    for (auto p : {mds::Partition::Train, mds::Partition::Dev, mds::Partition::Test}) {
        const auto recs = ds.partition(p);
        if (recs.empty()) continue;
        const auto m = mds::evaluate(model, recs);
        report.metrics[mds::to_string(p)] = {{"ccc", m.ccc}, {"rmse", m.rmse}};
        if (ds.metadata.contains("label_region_masks")) {
            json regions = json::array();
            const auto n_regions = mds::region_masks(ds.metadata, recs.front()->id).size();
            for (std::size_t k = 0; k < n_regions; ++k) {
                std::vector<std::vector<bool>> masks;
                for (const auto* r : recs) masks.push_back(mds::region_masks(ds.metadata, r->id)[k]);
                try {
                    const auto e = mds::eval_masked(model, recs, masks);
                    regions.push_back({{"masked_ccc", e.masked_ccc}, {"full_ccc", e.full_ccc}, {"samples", e.selected}});
                } catch (const mds::InvalidArgument&) {
                    regions.push_back(nullptr);
                }
            }
            report.metrics[mds::to_string(p)]["regions"] = regions;
        }
    }
    report.metrics["taus"] = model.params.taus;
    if (out.empty()) {
        std::cout << report.metrics.dump(2) << '\n';
    } else {
        finish(report, out);
    }
    return 0;
}

int cmd_align(const std::string& reference, const std::string& target, double lo, double hi, double step,
              const std::string& out) {
    const auto x = mds::load_labels(reference);
    const auto y = mds::load_labels(target);
    const auto search = mds::brute_force_delay(x, y, lo, hi, step);
    std::printf("tau_star=%.6g\n", search.tau_star);
    if (!out.empty()) {
        mds::Curve curve{"align", "delay", {}};
        for (std::size_t k = 0; k < search.grid.size(); ++k) curve.points.push_back({search.grid[k], search.ccc[k], 0.0, {}});
        mds::ExperimentReport report{{{"tau_star", search.tau_star}}, {curve}};
        finish(report, out);
    }
    return 0;
}

int cmd_sweep(const Common& c, const std::string& parameter) {
    const auto cfg = load_config(c);
    const auto ds = mds::load_experiment_dataset(cfg);
    const auto values = sweep_values(cfg, parameter);
    mds::ExperimentReport report;
    report.metrics["config"] = config_summary(cfg);
    if (parameter == "delay") {
        report.curves.push_back(mds::sweep_delay(ds, values, cfg.train, sweep_options(cfg)));
    } else if (parameter == "fc") {
        std::vector<mds::SampledSignal> labels;
        for (const auto& r : ds.recordings) labels.push_back(r.labels);
        report.curves.push_back(mds::sweep_bandwidth(labels, values, cfg.model.sinc_half_len));
    } else if (parameter == "clusters") {
        report.curves.push_back(mds::sweep_clusters(ds, cfg.model, values, cfg.train, sweep_options(cfg)));
    } else {
        report.curves.push_back(mds::sweep_max_delay(ds, cfg.model, values, cfg.train, sweep_options(cfg)));
    }
    finish(report, cfg.output_dir);
    return 0;
}

int cmd_fuse(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<mds::SampledSignal> preds;
    for (const auto& p : inputs) preds.push_back(mds::load_labels(p));
    mds::save_labels(out, mds::fuse_predictions(preds));
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
    fs::path src = in;
    if (fs::is_directory(src)) src /= "metrics.json";
    finish(mds::load_report(src), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-delay sinc networks: training, evaluation and delay studies"};
    app.require_subcommand(1);

    Common synth_opts, train_opts, sweep_opts[4];
    add_common(app.add_subcommand("synth", "generate a synthetic delay dataset"), synth_opts);
    add_common(app.add_subcommand("train", "train with LOSO or holdout evaluation"), train_opts);

    std::string model_path, data_dir, eval_out;
    auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset directory");
    eval->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--out", eval_out, "report directory (default: print)");

    std::string reference, target, align_out;
    double lo = 0.0, hi = 6.0, step = 0.4;
    auto* align = app.add_subcommand("align", "brute-force delay between two label traces");
    align->add_option("--reference", reference, "label CSV treated as the undelayed signal")
        ->required()
        ->check(CLI::ExistingFile);
    align->add_option("--target", target, "label CSV to align")->required()->check(CLI::ExistingFile);
    align->add_option("--lo", lo, "smallest delay (s)");
    align->add_option("--hi", hi, "largest delay (s)");
    align->add_option("--step", step, "grid step (s)");
    align->add_option("--out", align_out, "report directory");

    const char* sweep_names[4] = {"sweep-delay", "sweep-bandwidth", "sweep-clusters", "sweep-maxdelay"};
    const char* sweep_params[4] = {"delay", "fc", "clusters", "max_delay"};
    CLI::App* sweeps[4];
    for (int i = 0; i < 4; ++i) {
        sweeps[i] = app.add_subcommand(sweep_names[i], std::string("CCC versus ") + sweep_params[i]);
        add_common(sweeps[i], sweep_opts[i]);
    }

    std::vector<std::string> fuse_in;
    std::string fuse_out;
    auto* fuse = app.add_subcommand("fuse", "average prediction traces");
    fuse->add_option("inputs", fuse_in, "prediction CSV files")->required()->expected(2, -1)->check(CLI::ExistingFile);
    fuse->add_option("--out", fuse_out, "fused CSV")->required();

    std::string report_in, report_out;
    auto* report = app.add_subcommand("report", "re-emit a report from its metrics.json");
    report->add_option("--in", report_in, "metrics.json or a report directory")->required()->check(CLI::ExistingPath);
    report->add_option("--out", report_out, "report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("synth")) return cmd_synth(synth_opts);
        if (app.got_subcommand("train")) return cmd_train(train_opts);
        if (app.got_subcommand(eval)) return cmd_eval(model_path, data_dir, eval_out);
        if (app.got_subcommand(align)) return cmd_align(reference, target, lo, hi, step, align_out);
        for (int i = 0; i < 4; ++i) {
            if (app.got_subcommand(sweeps[i])) return cmd_sweep(sweep_opts[i], sweep_params[i]);
        }
        if (app.got_subcommand(fuse)) return cmd_fuse(fuse_in, fuse_out);
        if (app.got_subcommand(report)) return cmd_report(report_in, report_out);
    } catch (const mds::Error& e) {
        std::cerr << "mdsnet: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mdsnet: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
