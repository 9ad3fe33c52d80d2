// Acceptance gate: runs every acceptance criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit status is nonzero when any criterion fails.
//
//   acceptance            run all criteria
//   acceptance 1 3 9      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mds/convolution.hpp"
#include "mds/experiment.hpp"
#include "mds/features.hpp"
#include "mds/metrics.hpp"
#include "mds/model.hpp"
#include "mds/network.hpp"
#include "mds/sinc.hpp"
#include "mds/synth.hpp"
#include "mds/train.hpp"
#include "support.hpp"

using namespace mds;
using testing_support::random_features;
using testing_support::random_vector;
using testing_support::rel_l2;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- 1: delta exactness -------------------------------------------------------

Outcome delta_exactness() {
    const auto t0 = Clock::now();
    const double fs = 25.0;
    const int half_len = 50;
    double worst_kernel = 0.0;
    double worst_shift = 0.0;
    const auto x = random_vector(300, 11);
    for (int s = -(half_len - 1); s <= half_len - 1; ++s) {
        const SincKernel k{s / fs, fs / 2.0, fs, half_len};
        const auto h = make_sinc_kernel(k);
        for (int j = 0; j < k.length(); ++j) {
            const double want = (j == k.center_index() + s) ? 1.0 : 0.0;
            worst_kernel = std::max(worst_kernel, std::abs(h[j] - want));
        }
        const auto y = convolve_same(x, h, k.center_index());
        for (long t = 0; t < static_cast<long>(x.size()); ++t) {
            const long src = t - s;
            const double want = (src >= 0 && src < static_cast<long>(x.size())) ? x[src] : 0.0;
            worst_shift = std::max(worst_shift, std::abs(y[t] - want));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_kernel < 1e-12 && worst_shift < 1e-12 && secs < 1.0,
            fmt("kernel dev %.2e, shift dev %.2e (< 1e-12), %.3f s (< 1 s)", worst_kernel, worst_shift, secs)};
}

// ---- 2: gradient fidelity -----------------------------------------------------

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> at, double step) {
    std::vector<double> g(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) {
        const double keep = at[i];
        at[i] = keep + step;
        const double up = f(at);
        at[i] = keep - step;
        const double down = f(at);
        at[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

MdsConfig tiny_model(double l2) {
    MdsConfig c;
    c.clusters = 2;
    c.input_dim = 2;
    c.trunk_layers = 2;
    c.trunk_filters = 3;
    c.trunk_kernel_len = 4;
    c.head_kernel_len = 3;
    c.fs = 10.0;
    c.fc = 3.0;
    c.sinc_half_len = 8;
    c.tau_init_lo = -0.6;
    c.tau_init_hi = 0.6;
    c.l2 = l2;
    return c;
}

Outcome gradient_fidelity() {
    const auto t0 = Clock::now();
    const int seeds = 10;
    double worst_kernel = 0.0, worst_ccc = 0.0, worst_net = 0.0;
    for (int seed = 0; seed < seeds; ++seed) {
        // dh/dtau, one tap at a time
        const double tau = random_vector(1, 500 + seed, -0.5, 0.5)[0];
        const SincKernel k{tau, 3.0, 10.0, 8};
        const auto analytic = sinc_kernel_grad_tau(k);
        std::vector<double> fd(analytic.size());
        const double h = 1e-6;
        for (std::size_t j = 0; j < fd.size(); ++j) {
            SincKernel up = k, down = k;
            up.tau += h;
            down.tau -= h;
            fd[j] = (make_sinc_kernel(up)[j] - make_sinc_kernel(down)[j]) / (2.0 * h);
        }
        worst_kernel = std::max(worst_kernel, rel_l2(analytic, fd));

        // dCCC/dyhat
        const auto y = random_vector(32, 600 + seed);
        const auto yhat = random_vector(32, 700 + seed, -0.5, 1.5);
        const auto g = ccc_grad(y, yhat);
        const auto gfd = central_difference([&](std::span<const double> v) { return ccc(y, v); }, yhat, 1e-6);
        worst_ccc = std::max(worst_ccc, rel_l2(g, gfd));

        // full network backward, M = 2, length 32
        MdsModel model = init_model(tiny_model(seed % 2 ? 0.01 : 0.0), 100 + seed);
        const auto x = random_features(32, 2, 10.0, 200 + seed);
        const SampledSignal target(random_vector(32, 300 + seed), 10.0);
        const auto grads = backward(model, x, target, forward(model, x)).params.flatten();
        const auto nfd = central_difference(
            [&](std::span<const double> flat) {
                MdsModel m = model;
                m.params.assign(flat);
                return loss(m, x, target);
            },
            model.params.flatten(), 1e-6);
        worst_net = std::max(worst_net, rel_l2(grads, nfd));
    }
    const double secs = seconds_since(t0);
    return {worst_kernel <= 1e-5 && worst_ccc <= 1e-5 && worst_net <= 1e-4 && secs < 30.0,
            fmt("%d seeds; worst rel L2: kernel %.1e, ccc %.1e (<= 1e-5), network %.1e (<= 1e-4); %.2f s", seeds,
                worst_kernel, worst_ccc, worst_net, secs)};
}

// ---- 3: CCC correctness -------------------------------------------------------

Outcome ccc_correctness() {
    const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
    const double known = ccc(a, b);
    bool ok = std::abs(known - 4.0 / 7.0) <= 1e-12;

    const auto y = random_vector(100, 1);
    ok = ok && std::abs(ccc(y, y) - 1.0) <= 1e-12;
    ok = ok && ccc(y, std::vector<double>(y.size(), 0.37)) == 0.0;

    // y + d against y: population variance s2 gives 2 s2 / (2 s2 + d^2)
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = random_vector(64, 1000 + trial, -3.0, 3.0);
        const double d = random_vector(1, 2000 + trial, -2.0, 2.0)[0];
        std::vector<double> shifted(v);
        for (double& s : shifted) s += d;
        double mu = 0.0;
        for (double s : v) mu += s;
        mu /= v.size();
        double s2 = 0.0;
        for (double s : v) s2 += (s - mu) * (s - mu);
        s2 /= v.size();
        worst = std::max(worst, std::abs(ccc(v, shifted) - 2 * s2 / (2 * s2 + d * d)));
    }
    ok = ok && worst <= 1e-12;
    return {ok, fmt("ccc([1,2,3],[2,3,4]) - 4/7 = %.1e; identity, constant exact; shift-penalty worst %.1e", known - 4.0 / 7.0,
                    worst)};
}

// ---- 4 & 5: single-delay recovery and oracle agreement -------------------------

constexpr double kFs = 25.0;
constexpr double kTrueTau = 2.0;

SynthSpec single_delay_spec() {
    SynthSpec s;
    s.fs = kFs;
    s.n_recordings = 8;
    s.n_dev = 2;
    s.duration_s = 60.0;
    s.feature_dim = 4;
    s.noise_std = 0.0;
    s.delays = {DelayRegion{{}, kTrueTau}};
    s.spectrum = Spectrum{3.0, 1.0 / 256, 64};
    s.seed = 0;
    return s;
}

MdsConfig single_delay_model() {
    MdsConfig m;
    m.clusters = 1;
    m.input_dim = 4;
    m.trunk_layers = 1;
    m.trunk_filters = 4;
    m.trunk_kernel_len = 8;
    m.head_kernel_len = 1;
    m.fs = kFs;
    m.fc = kFs / 2.0;
    m.sinc_half_len = 550;
    m.tau_init_lo = 0.0;
    m.tau_init_hi = 20.0;
    return m;
}

TrainConfig single_delay_train() {
    TrainConfig t;
    t.lr = 0.001;
    t.tau_lr = 0.02;
    t.epochs = 300;
    t.restarts = 20;
    t.seed = 0;
    return t;
}

struct Recovery {
    Dataset data;
    std::vector<RunRecord> runs;
    std::vector<double> seconds;
};

const Recovery& recovery() {
    static std::optional<Recovery> cached;
    if (!cached) {
        Recovery r{gen_single_delay_task(single_delay_spec()), {}, {}};
        const auto model = single_delay_model();
        const auto train = single_delay_train();
        for (int k = 0; k < train.restarts; ++k) {
            const auto t0 = Clock::now();
            r.runs.push_back(train_restart(r.data, model, train, k));
            r.seconds.push_back(seconds_since(t0));
        }
        cached = std::move(r);
    }
    return *cached;
}

double final_tau(const RunRecord& run) { return run.taus.back().front(); }

bool recovered(const RunRecord& run) {
    return !run.diverged && std::abs(final_tau(run) - kTrueTau) <= 2.0 / kFs + 1e-12;
}

Outcome single_delay_recovery() {
    const auto& r = recovery();
    int hits = 0;
    std::string taus;
    for (const auto& run : r.runs) {
        hits += recovered(run);
        taus += fmt(" %.2f", final_tau(run));
    }
    const double med = median(r.seconds);
    const int n = static_cast<int>(r.runs.size());
    return {hits * 10 >= n * 6 && med < 120.0,
            fmt("%d/%d restarts within %.2f s of %.1f s (need >= 60%%), median run %.1f s (< 120 s); final taus:%s", hits,
                n, 2.0 / kFs, kTrueTau, med, taus.c_str())};
}

Outcome oracle_agreement() {
    const auto& r = recovery();
    const auto train = r.data.partition(Partition::Train);

    // grid search of the labels against the undelayed latent map
    std::vector<SampledSignal> xs, ys;
    for (const auto* rec : train) {
        xs.emplace_back(latent_map(rec->features), kFs);
        ys.push_back(rec->labels);
    }
    const double step = 0.4;
    const double grid_tau = brute_force_delay(xs, ys, 0.0, 6.0, step).tau_star;

    int checked = 0, agree = 0, model_agree = 0;
    double worst = 0.0;
    for (const auto& run : r.runs) {
        if (!recovered(run)) continue;
        ++checked;
        const double gap = std::abs(final_tau(run) - grid_tau);
        worst = std::max(worst, gap);
        agree += gap <= step + 1e-9;

        // grid search of the labels against the run's own undelayed predictions
        MdsModel undelayed = *run.best_model;
        undelayed.params.taus.assign(undelayed.params.taus.size(), 0.0);
        std::vector<SampledSignal> preds;
        for (const auto* rec : train) preds.push_back(predict(undelayed, rec->features));
        const double own = brute_force_delay(preds, ys, 0.0, 6.0, step).tau_star;
        model_agree += std::abs(run.best_model->params.taus.front() - own) <= step + 1e-9;
    }
    return {checked > 0 && agree == checked && model_agree == checked,
            fmt("grid optimum %.1f s; %d/%d successful runs within %.1f s (worst gap %.3f s); "
                "%d/%d agree with a grid search on their own undelayed predictions",
                grid_tau, agree, checked, step, worst, model_agree, checked)};
}

// ---- 6: multi-delay separation ------------------------------------------------

Outcome multi_delay_separation() {
    const double lo = 1.0, hi = 3.0, tol = 0.2;
    std::vector<double> m1, m2;
    int matched = 0;
    std::string per_seed;
    for (int seed = 0; seed < 5; ++seed) {
        SynthSpec s;
        s.fs = kFs;
        s.n_recordings = 8;
        s.n_dev = 2;
        s.duration_s = 60.0;
        s.feature_dim = 4;
        s.noise_std = 0.0;
        s.spectrum = Spectrum{1.0, 1.0 / 256, 64};
        s.seed = 100 + seed;
        s.delays = {DelayRegion{{RegionSelector::Kind::Above, 0, 0.0}, lo},
                    DelayRegion{{RegionSelector::Kind::Below, 0, 0.0}, hi}};
        const auto data = gen_multi_delay_task(s);

        MdsConfig m;
        m.input_dim = 4;
        m.trunk_layers = 1;
        m.trunk_filters = 8;
        m.trunk_kernel_len = 8;
        m.head_kernel_len = 1;
        m.fs = kFs;
        m.fc = kFs / 2.0;
        m.sinc_half_len = static_cast<int>(6 * kFs);
        m.tau_init_lo = 0.0;
        m.tau_init_hi = 5.0;
        TrainConfig t;
        t.lr = 0.003;
        t.tau_lr = 0.02;
        t.epochs = 300;
        t.restarts = 3;
        t.seed = seed;

        m.clusters = 1;
        const auto one = loso_cv(data, std::vector{m}, t);
        m.clusters = 2;
        const auto two = loso_cv(data, std::vector{m}, t);
        m1.push_back(one.mean);
        m2.push_back(two.mean);

        bool all_folds = true;
        for (const auto& f : two.folds) {
            const double a = std::min(f.taus[0], f.taus[1]);
            const double b = std::max(f.taus[0], f.taus[1]);
            all_folds = all_folds && std::abs(a - lo) <= tol && std::abs(b - hi) <= tol;
        }
        matched += all_folds;
        per_seed += fmt(" [M1 %.3f M2 %.3f taus %.2f,%.2f]", one.mean, two.mean, two.folds[0].taus[0],
                        two.folds[0].taus[1]);
    }
    std::vector<double> gains(m1.size());
    for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = m2[i] - m1[i];
    const double gain = median(m2) - median(m1);
    const double median_gain = median(gains);
    return {gain >= 0.05 && median_gain >= 0.05 && matched >= 3,
            fmt("median CCC M=2 %.3f vs M=1 %.3f (gain %.3f, median per-seed gain %.3f, need >= 0.05); "
                "taus match {1,3} +/-0.2 in %d/5 seeds (need >= 3);%s",
                median(m2), median(m1), gain, median_gain, matched, per_seed.c_str())};
}

// ---- 7: bandwidth sweep -------------------------------------------------------

Outcome bandwidth_sweep() {
    const double band = 0.5;
    std::vector<SampledSignal> labels;
    for (std::uint64_t seed = 0; seed < 8; ++seed) labels.push_back(gen_bandlimited(seed, 1500, kFs, band));
    const std::vector<double> fcs{band / 4, band / 2, band, 2 * band, 4 * band, kFs / 2};
    const auto curve = sweep_bandwidth(labels, fcs, 550);
    bool ok = true;
    std::string pts;
    for (const auto& p : curve.points) {
        const double lo = p.detail.at("min").get<double>();
        const double hi = p.detail.at("max").get<double>();
        if (p.parameter >= band) ok = ok && lo >= 0.99;
        if (p.parameter == band / 4) ok = ok && hi <= 0.95;
        pts += fmt(" fc=%.3g: mean %.4f [%.4f, %.4f];", p.parameter, p.ccc_mean, lo, hi);
    }
    return {ok, "every trace: fc >= B gives >= 0.99, fc = B/4 gives <= 0.95;" + pts};
}

// ---- 8: max-delay plateau -----------------------------------------------------

Outcome max_delay_plateau() {
    const auto data = gen_single_delay_task(single_delay_spec());
    auto train = single_delay_train();
    train.restarts = 3;
    const std::vector<double> tau_maxes{0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
    const auto curve = sweep_max_delay(data, single_delay_model(), tau_maxes, train, {std::nullopt, 2});

    bool rising = true;
    double plateau_lo = 1e300, plateau_hi = -1e300;
    double prev = -1e300;
    std::string pts;
    for (const auto& p : curve.points) {
        pts += fmt(" %.1f:%.4f", p.parameter, p.ccc_mean);
        if (p.parameter <= kTrueTau) {
            rising = rising && p.ccc_mean > prev;
            prev = p.ccc_mean;
        }
        if (p.parameter >= kTrueTau) {
            plateau_lo = std::min(plateau_lo, p.ccc_mean);
            plateau_hi = std::max(plateau_hi, p.ccc_mean);
        }
    }
    const double spread = plateau_hi - plateau_lo;
    return {rising && spread <= 0.05,
            fmt("strictly rising up to 2 s: %s; spread over tau_max >= 2 s %.4f (<= 0.05); curve%s",
                rising ? "yes" : "no", spread, pts.c_str())};
}

// ---- 9: structural invariants -------------------------------------------------

Outcome structural_invariants() {
    std::vector<std::string> failed;
    auto check = [&failed](bool ok, const char* what) {
        if (!ok) failed.emplace_back(what);
    };

    // softmax rows sum to one, even with large logits
    {
        auto model = init_model(tiny_model(0.0), 3);
        for (double& w : model.params.head.weights) w *= 20.0;
        const auto tr = forward(model, random_features(32, 2, 10.0, 8));
        double worst = 0.0;
        for (std::size_t t = 0; t < tr.length(); ++t) {
            double s = 0.0;
            for (int m = 0; m < tr.clusters(); ++m) s += tr.softmax(m, t);
            worst = std::max(worst, std::abs(s - 1.0));
        }
        check(worst <= 1e-12, "softmax");
    }

    // M = 1: the weight channel has no effect
    {
        auto cfg = tiny_model(0.0);
        cfg.clusters = 1;
        auto model = init_model(cfg, 4);
        const auto x = random_features(32, 2, 10.0, 9);
        const auto before = forward(model, x).y;
        auto& head = model.params.head;
        for (int i = 0; i < head.in_channels; ++i)
            for (int k = 0; k < head.kernel_len; ++k) head.w(1, i, k) += 3.0 * (i + 1) - k;
        head.bias[1] = -7.0;
        check(forward(model, x).y == before, "single-cluster weight head");
    }

    // relabeling clusters changes nothing
    {
        auto cfg = tiny_model(0.0);
        cfg.clusters = 4;
        const auto model = init_model(cfg, 21);
        const std::vector<int> perm{2, 0, 3, 1};
        MdsModel permuted = model;
        auto& head = permuted.params.head;
        for (int m = 0; m < 4; ++m) {
            for (int half : {0, 4}) {
                for (int i = 0; i < head.in_channels; ++i)
                    for (int k = 0; k < head.kernel_len; ++k)
                        head.w(half + m, i, k) = model.params.head.w(half + perm[m], i, k);
                head.bias[half + m] = model.params.head.bias[half + perm[m]];
            }
            permuted.params.taus[m] = model.params.taus[perm[m]];
        }
        const auto x = random_features(32, 2, 10.0, 22);
        const auto a = forward(model, x).y;
        const auto b = forward(permuted, x).y;
        double worst = 0.0;
        for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, std::abs(a[t] - b[t]));
        check(worst <= 1e-12, "cluster permutation");
    }

    // z-normalizing twice equals z-normalizing once
    {
        Dataset ds;
        ds.task = "synthetic";
        for (int r = 0; r < 4; ++r) {
            auto rec = testing_support::random_recording("r" + std::to_string(r), r < 2 ? "a" : "b", Partition::Train, 50,
                                                         3, 10.0, 40 + r);
            for (double& v : rec.features.frames.data()) v = 3.0 * v + 5.0;
            ds.recordings.push_back(std::move(rec));
        }
        const auto once = znorm_per_speaker(ds);
        const auto twice = znorm_per_speaker(once);
        double worst = 0.0;
        for (std::size_t r = 0; r < once.recordings.size(); ++r) {
            const auto& a = once.recordings[r].features.frames.data();
            const auto& b = twice.recordings[r].features.frames.data();
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        }
        check(worst <= 1e-12, "znorm idempotence");
    }

    // JSON round trip is exact
    {
        auto cfg = tiny_model(0.01);
        cfg.clusters = 3;
        const auto model = init_model(cfg, 99);
        check(model_from_json(nlohmann::json::parse(model_to_json(model).dump())) == model, "model JSON round trip");
    }

    // reruns with the same seed are identical
    {
        SynthSpec s;
        s.fs = 10.0;
        s.duration_s = 12.0;
        s.n_recordings = 4;
        s.n_dev = 2;
        s.feature_dim = 2;
        s.seed = 5;
        s.delays = {DelayRegion{{RegionSelector::Kind::Above, 0, 0.0}, 0.5},
                    DelayRegion{{RegionSelector::Kind::Below, 0, 0.0}, 1.0}};
        const auto d1 = gen_multi_delay_task(s);
        const auto d2 = gen_multi_delay_task(s);
        bool same = d1.metadata == d2.metadata && d1.recordings.size() == d2.recordings.size();
        for (std::size_t r = 0; same && r < d1.recordings.size(); ++r) {
            same = d1.recordings[r].features.frames == d2.recordings[r].features.frames &&
                   d1.recordings[r].labels.vec() == d2.recordings[r].labels.vec();
        }
        check(same, "synthetic data rerun");

        auto cfg = tiny_model(0.0);
        cfg.tau_init_lo = 0.0;
        cfg.tau_init_hi = 0.5;
        TrainConfig t;
        t.epochs = 5;
        t.restarts = 2;
        t.seed = 12;
        const auto a = train_all(d1, cfg, t);
        t.jobs = 2;
        const auto b = train_all(d1, cfg, t);
        bool runs_same = a.size() == b.size();
        for (std::size_t k = 0; runs_same && k < a.size(); ++k) {
            runs_same = a[k].train_loss == b[k].train_loss && a[k].taus == b[k].taus &&
                        a[k].val_ccc == b[k].val_ccc && *a[k].best_model == *b[k].best_model;
        }
        check(runs_same, "training rerun");
    }

    std::string detail = "softmax, M=1 weight head, permutation, znorm, JSON, reruns";
    if (!failed.empty()) {
        detail = "failed:";
        for (const auto& f : failed) detail += " " + f;
    }
    return {failed.empty(), detail};
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "delta exactness", delta_exactness},
        {2, "gradient fidelity", gradient_fidelity},
        {3, "CCC correctness", ccc_correctness},
        {4, "single-delay recovery", single_delay_recovery},
        {5, "oracle agreement", oracle_agreement},
        {6, "multi-delay separation", multi_delay_separation},
        {7, "bandwidth sweep", bandwidth_sweep},
        {8, "max-delay plateau", max_delay_plateau},
        {9, "structural invariants", structural_invariants},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%s\n", failures ? "acceptance: FAILED" : "acceptance: all criteria passed");
    return failures ? 1 : 0;
}
