#include "mds/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "mds/convolution.hpp"
#include "mds/error.hpp"
#include "mds/metrics.hpp"
#include "mds/random.hpp"

namespace mds {

using nlohmann::json;

SampledSignal gen_bandlimited(std::uint64_t seed, std::size_t length, double fs, double bandwidth_hz,
                              const Spectrum& spectrum) {
    if (!(fs > 0.0)) throw InvalidArgument("gen_bandlimited: fs must be positive");
    if (!(bandwidth_hz > 0.0) || !(bandwidth_hz < fs / 2.0)) {
        throw InvalidArgument("gen_bandlimited: bandwidth must lie in (0, fs/2)");
    }
    if (length < 2) throw InvalidArgument("gen_bandlimited: need at least two samples");
    if (spectrum.components < 1 || !(spectrum.lowest_ratio > 0.0) || !(spectrum.lowest_ratio < 1.0)) {
        throw InvalidArgument("gen_bandlimited: invalid spectrum shape");
    }

    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double f_lo = spectrum.lowest_ratio * bandwidth_hz;
    const double log_span = std::log(bandwidth_hz / f_lo);

    std::vector<double> x(length, 0.0);
    for (int k = 0; k < spectrum.components; ++k) {
        const double f = f_lo * std::exp(log_span * unit(rng));
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double amp = std::pow(f / bandwidth_hz, 0.5 * (1.0 - spectrum.exponent));
        const double w = 2.0 * std::numbers::pi * f / fs;
        for (std::size_t t = 0; t < length; ++t) {
            x[t] += amp * std::sin(w * static_cast<double>(t) + phase);
        }
    }

    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(length);
    double var = 0.0;
    for (double& v : x) {
        v -= mu;
        var += v * v;
    }
    const double sd = std::sqrt(var / static_cast<double>(length));
    if (sd > 0.0) {
        for (double& v : x) v /= sd;
    }
    return SampledSignal(std::move(x), fs);
}

std::vector<bool> RegionSelector::mask(const FeatureSequence& f) const {
    std::vector<bool> m(f.length(), kind == Kind::All);
    if (kind == Kind::All) return m;
    if (channel < 0 || channel >= static_cast<int>(f.dims())) {
        throw InvalidArgument("region selector: channel out of range");
    }
    for (std::size_t t = 0; t < f.length(); ++t) {
        const double v = f.frames(t, static_cast<std::size_t>(channel));
        m[t] = kind == Kind::Above ? v >= threshold : v < threshold;
    }
    return m;
}

std::size_t SynthSpec::length() const {
    return static_cast<std::size_t>(std::llround(duration_s * fs));
}

void SynthSpec::validate() const {
    const auto fail = [](const std::string& m) { throw InvalidArgument("SynthSpec: " + m); };
    if (n_recordings < 1) fail("n_recordings must be >= 1");
    if (n_dev < 0 || n_dev > n_recordings) fail("n_dev must be in [0, n_recordings]");
    if (!(fs > 0.0)) fail("fs must be positive");
    if (!(duration_s > 0.0) || length() < 2) fail("duration too short");
    if (feature_dim < 1) fail("feature_dim must be >= 1");
    if (!(label_bandwidth_hz > 0.0) || !(label_bandwidth_hz < fs / 2.0)) fail("bandwidth must lie in (0, fs/2)");
    if (delays.empty()) fail("delays must be non-empty");
    for (const auto& d : delays) {
        if (!(std::abs(d.tau) < duration_s / 4.0)) fail("|tau| must be below duration/4");
        if (d.selector.kind != RegionSelector::Kind::All &&
            (d.selector.channel < 0 || d.selector.channel >= feature_dim)) {
            fail("region selector channel out of range");
        }
    }
    if (!(noise_std >= 0.0)) fail("noise_std must be non-negative");
}

namespace {

std::string kind_name(RegionSelector::Kind k) {
    switch (k) {
        case RegionSelector::Kind::All: return "all";
        case RegionSelector::Kind::Above: return "above";
        case RegionSelector::Kind::Below: return "below";
    }
    return "all";
}

RegionSelector::Kind kind_from(const std::string& s) {
    if (s == "all") return RegionSelector::Kind::All;
    if (s == "above") return RegionSelector::Kind::Above;
    if (s == "below") return RegionSelector::Kind::Below;
    throw InvalidArgument("unknown region selector '" + s + "'");
}

}  // namespace

void to_json(json& j, const SynthSpec& s) {
    json delays = json::array();
    for (const auto& d : s.delays) {
        delays.push_back({{"selector", kind_name(d.selector.kind)},
                          {"channel", d.selector.channel},
                          {"threshold", d.selector.threshold},
                          {"tau", d.tau}});
    }
    j = json{{"n_recordings", s.n_recordings},
             {"n_dev", s.n_dev},
             {"duration_s", s.duration_s},
             {"fs", s.fs},
             {"feature_dim", s.feature_dim},
             {"label_bandwidth_hz", s.label_bandwidth_hz},
             {"delays", delays},
             {"noise_std", s.noise_std},
             {"seed", s.seed},
             {"spectrum",
              {{"exponent", s.spectrum.exponent},
               {"lowest_ratio", s.spectrum.lowest_ratio},
               {"components", s.spectrum.components}}}};
}

void from_json(const json& j, SynthSpec& s) {
    const SynthSpec d;
    s.n_recordings = j.value("n_recordings", d.n_recordings);
    s.n_dev = j.value("n_dev", d.n_dev);
    s.duration_s = j.value("duration_s", d.duration_s);
    s.fs = j.value("fs", d.fs);
    s.feature_dim = j.value("feature_dim", d.feature_dim);
    s.label_bandwidth_hz = j.value("label_bandwidth_hz", d.label_bandwidth_hz);
    s.noise_std = j.value("noise_std", d.noise_std);
    s.seed = j.value("seed", d.seed);
    s.delays.clear();
    if (j.contains("delays")) {
        for (const auto& e : j.at("delays")) {
            DelayRegion r;
            r.selector.kind = kind_from(e.value("selector", std::string{"all"}));
            r.selector.channel = e.value("channel", 0);
            r.selector.threshold = e.value("threshold", 0.0);
            r.tau = e.value("tau", 0.0);
            s.delays.push_back(r);
        }
    } else {
        s.delays = d.delays;
    }
    if (j.contains("spectrum")) {
        const auto& sp = j.at("spectrum");
        s.spectrum.exponent = sp.value("exponent", d.spectrum.exponent);
        s.spectrum.lowest_ratio = sp.value("lowest_ratio", d.spectrum.lowest_ratio);
        s.spectrum.components = sp.value("components", d.spectrum.components);
    }
}

std::vector<double> latent_map(const FeatureSequence& f) {
    const std::size_t dims = f.dims();
    const double norm = 1.0 / std::sqrt(static_cast<double>(dims));
    std::vector<double> g(f.length(), 0.0);
    for (std::size_t t = 0; t < f.length(); ++t) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double a = (d % 2 == 0 ? 1.0 : -1.0) * norm;
            const double b = 1.0 + 0.5 * static_cast<double>(d % 2);
            g[t] += a * std::tanh(b * f.frames(t, d));
        }
    }
    return g;
}

namespace {

int delay_half_len(double tau, double fs) {
    return static_cast<int>(std::ceil(std::abs(tau) * fs)) + 1;
}

std::vector<bool> shift_mask(const std::vector<bool>& m, long shift) {
    std::vector<bool> out(m.size(), false);
    for (long n = 0; n < static_cast<long>(m.size()); ++n) {
        const long src = n - shift;
        if (src >= 0 && src < static_cast<long>(m.size())) out[static_cast<std::size_t>(n)] = m[static_cast<std::size_t>(src)];
    }
    return out;
}

json mask_json(const std::vector<bool>& m) {
    std::vector<int> v(m.begin(), m.end());
    return v;
}

FeatureSequence synth_features(const SynthSpec& spec, std::size_t rec) {
    const std::size_t len = spec.length();
    FeatureSequence f;
    f.fs = spec.fs;
    f.speaker_id = "spk" + std::to_string(rec);
    f.frames = Matrix(len, static_cast<std::size_t>(spec.feature_dim));
    for (int d = 0; d < spec.feature_dim; ++d) {
        const auto ch_seed =
            make_rng(spec.seed, {tag(RngStream::SynthFeatures), rec, static_cast<std::uint64_t>(d)})();
        const auto ch = gen_bandlimited(ch_seed, len, spec.fs, spec.label_bandwidth_hz, spec.spectrum);
        for (std::size_t t = 0; t < len; ++t) f.frames(t, static_cast<std::size_t>(d)) = ch[t];
    }
    return f;
}

}  // namespace

Dataset gen_multi_delay_task(const SynthSpec& spec) {
    spec.validate();
    const std::size_t len = spec.length();

    // Regions sharing a delay form one group so that equal delays reduce exactly to a
    // single-delay task.
    std::vector<double> group_tau;
    std::vector<std::vector<std::size_t>> group_regions;
    for (std::size_t r = 0; r < spec.delays.size(); ++r) {
        const auto it = std::find(group_tau.begin(), group_tau.end(), spec.delays[r].tau);
        if (it == group_tau.end()) {
            group_tau.push_back(spec.delays[r].tau);
            group_regions.push_back({r});
        } else {
            group_regions[static_cast<std::size_t>(it - group_tau.begin())].push_back(r);
        }
    }

    Dataset ds;
    ds.task = "synthetic";
    json region_json = json::object();
    json label_region_json = json::object();
    for (int i = 0; i < spec.n_recordings; ++i) {
        const auto rec = static_cast<std::size_t>(i);
        FeatureSequence f = synth_features(spec, rec);
        const std::vector<double> g = latent_map(f);
        const SampledSignal g_sig(g, spec.fs);

        std::vector<std::vector<bool>> masks;
        for (const auto& d : spec.delays) masks.push_back(d.selector.mask(f));
        for (std::size_t t = 0; t < len; ++t) {
            int owners = 0;
            for (const auto& m : masks) owners += m[t] ? 1 : 0;
            if (owners != 1) {
                throw InvalidArgument("gen_multi_delay_task: region selectors do not partition time");
            }
        }

        const std::size_t groups = group_tau.size();
        std::vector<std::vector<double>> delayed(groups);
        std::vector<std::vector<bool>> claims(groups);
        for (std::size_t k = 0; k < groups; ++k) {
            const double tau = group_tau[k];
            delayed[k] = apply_delay(g_sig, tau, spec.fs / 2.0, delay_half_len(tau, spec.fs)).vec();
            std::vector<bool> feature_mask(len, false);
            for (std::size_t r : group_regions[k]) {
                for (std::size_t t = 0; t < len; ++t) feature_mask[t] = feature_mask[t] || masks[r][t];
            }
            claims[k] = shift_mask(feature_mask, std::lround(tau * spec.fs));
        }

        std::vector<double> y(len, 0.0);
        std::vector<std::vector<bool>> label_masks(spec.delays.size(), std::vector<bool>(len, false));
        for (std::size_t t = 0; t < len; ++t) {
            int n_claims = 0;
            for (std::size_t k = 0; k < groups; ++k) n_claims += claims[k][t] ? 1 : 0;
            if (groups == 1) {
                y[t] = delayed[0][t];
            } else {
                for (std::size_t k = 0; k < groups; ++k) {
                    const double share = n_claims == 0 ? 1.0 / static_cast<double>(groups)
                                                       : (claims[k][t] ? 1.0 / n_claims : 0.0);
                    y[t] += share * delayed[k][t];
                }
            }
            if (n_claims == 1) {
                for (std::size_t k = 0; k < groups; ++k) {
                    if (!claims[k][t]) continue;
                    // Exclusive claim; attribute to the region whose source sample is in its mask.
                    const long src = static_cast<long>(t) - std::lround(group_tau[k] * spec.fs);
                    for (std::size_t r : group_regions[k]) {
                        if (src >= 0 && masks[r][static_cast<std::size_t>(src)]) label_masks[r][t] = true;
                    }
                }
            }
        }
        if (spec.noise_std > 0.0) {
            Rng noise_rng = make_rng(spec.seed, {tag(RngStream::SynthNoise), rec});
            std::normal_distribution<double> noise(0.0, spec.noise_std);
            for (double& v : y) v += noise(noise_rng);
        }

        Recording r;
        r.id = "rec" + std::to_string(i);
        r.features = std::move(f);
        r.labels = SampledSignal(std::move(y), spec.fs);
        r.partition = i >= spec.n_recordings - spec.n_dev ? Partition::Dev : Partition::Train;

        json rm = json::array();
        json lm = json::array();
        for (std::size_t k = 0; k < masks.size(); ++k) {
            rm.push_back(mask_json(masks[k]));
            lm.push_back(mask_json(label_masks[k]));
        }
        region_json[r.id] = rm;
        label_region_json[r.id] = lm;
        ds.recordings.push_back(std::move(r));
    }

    json taus = json::array();
    for (const auto& d : spec.delays) taus.push_back(d.tau);
    ds.metadata = json{{"generator", "synthetic-delay"},
                       {"seed", spec.seed},
                       {"true_delays", taus},
                       {"spec", spec},
                       {"region_masks", region_json},
                       {"label_region_masks", label_region_json}};
    return ds;
}

Dataset gen_single_delay_task(const SynthSpec& spec) {
    if (spec.delays.size() != 1) {
        throw InvalidArgument("gen_single_delay_task: expected exactly one delay");
    }
    SynthSpec s = spec;
    s.delays[0].selector = RegionSelector{};
    return gen_multi_delay_task(s);
}

std::vector<std::vector<bool>> region_masks(const json& metadata, const std::string& recording_id,
                                            const char* key) {
    std::vector<std::vector<bool>> out;
    if (!metadata.contains(key) || !metadata.at(key).contains(recording_id)) {
        throw InvalidArgument(std::string("metadata lacks ") + key + " for " + recording_id);
    }
    for (const auto& m : metadata.at(key).at(recording_id)) {
        std::vector<bool> mask;
        for (const auto& v : m) mask.push_back(v.get<int>() != 0);
        out.push_back(std::move(mask));
    }
    return out;
}

std::vector<double> delay_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument("delay grid is empty");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) grid[k] = lo + static_cast<double>(k) * step;
    return grid;
}

namespace {

struct SearchFrame {
    std::vector<double> grid;
    int half_len = 0;
    std::size_t edge = 0;
};

SearchFrame search_frame(double lo, double hi, double step, double fs, std::size_t len) {
    SearchFrame f;
    f.grid = delay_grid(lo, hi, step);
    f.half_len = delay_half_len(std::max(std::abs(lo), std::abs(hi)), fs);
    f.edge = static_cast<std::size_t>(f.half_len);
    if (len < 2 * f.edge + 2) {
        throw InvalidArgument("brute_force_delay: signal too short for the delay grid");
    }
    return f;
}

DelaySearch argmax(std::vector<double> grid, std::vector<double> scores) {
    DelaySearch out;
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) best = k;
    }
    out.tau_star = grid[best];
    out.grid = std::move(grid);
    out.ccc = std::move(scores);
    return out;
}

}  // namespace

DelaySearch brute_force_delay(std::span<const SampledSignal> xs, std::span<const SampledSignal> ys,
                              double lo, double hi, double step) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw ShapeMismatch("brute_force_delay: need matching, non-empty signal lists");
    }
    std::vector<double> grid = delay_grid(lo, hi, step);
    std::vector<double> scores(grid.size(), 0.0);
    for (std::size_t p = 0; p < xs.size(); ++p) {
        const auto& x = xs[p];
        const auto& y = ys[p];
        if (std::abs(x.fs() - y.fs()) > 1e-9 * x.fs()) throw ShapeMismatch("brute_force_delay: fs differs");
        if (x.size() != y.size()) throw ShapeMismatch("brute_force_delay: length differs");
        const SearchFrame fr = search_frame(lo, hi, step, x.fs(), x.size());
        const auto interior = [&](std::span<const double> v) {
            return v.subspan(fr.edge, v.size() - 2 * fr.edge);
        };
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto shifted = apply_delay(x, grid[k], x.fs() / 2.0, fr.half_len);
            scores[k] += ccc(interior(y.values()), interior(shifted.values()));
        }
    }
    for (double& s : scores) s /= static_cast<double>(xs.size());
    return argmax(std::move(grid), std::move(scores));
}

DelaySearch brute_force_delay(const SampledSignal& x, const SampledSignal& y, double lo, double hi, double step) {
    return brute_force_delay(std::span<const SampledSignal>(&x, 1), std::span<const SampledSignal>(&y, 1), lo, hi,
                             step);
}

DelaySearch brute_force_region_delay(const SampledSignal& x, const SampledSignal& y,
                                     const std::vector<bool>& feature_mask, double lo, double hi, double step) {
    if (x.size() != y.size() || feature_mask.size() != x.size()) {
        throw ShapeMismatch("brute_force_region_delay: length mismatch");
    }
    const SearchFrame fr = search_frame(lo, hi, step, x.fs(), x.size());
    std::vector<double> scores;
    for (double tau : fr.grid) {
        const auto shifted = apply_delay(x, tau, x.fs() / 2.0, fr.half_len);
        auto mask = shift_mask(feature_mask, std::lround(tau * x.fs()));
        for (std::size_t t = 0; t < mask.size(); ++t) {
            if (t < fr.edge || t >= mask.size() - fr.edge) mask[t] = false;
        }
        scores.push_back(masked_ccc(y.values(), shifted.values(), mask));
    }
    return argmax(fr.grid, std::move(scores));
}

}  // namespace mds
