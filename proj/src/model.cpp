#include "mds/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mds/error.hpp"
#include "mds/random.hpp"

namespace mds {

using nlohmann::json;

void MdsConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw InvalidArgument("MdsConfig: " + msg); };
    if (clusters < 1) fail("clusters must be >= 1");
    if (input_dim < 1) fail("input_dim must be >= 1");
    if (trunk_layers < 1) fail("trunk_layers must be >= 1");
    if (trunk_filters < 1) fail("trunk_filters must be >= 1");
    if (trunk_kernel_len < 1) fail("trunk_kernel_len must be >= 1");
    if (head_kernel_len < 1) fail("head_kernel_len must be >= 1");
    if (!(fs > 0.0)) fail("fs must be positive");
    if (!(fc > 0.0) || fc > fs / 2.0) fail("fc must lie in (0, fs/2]");
    if (sinc_half_len < 1) fail("sinc_half_len must be >= 1");
    if (!(tau_init_lo <= tau_init_hi)) fail("tau_init_lo must not exceed tau_init_hi");
    if (std::max(std::abs(tau_init_lo), std::abs(tau_init_hi)) > tau_limit()) {
        fail("tau init range exceeds (sinc_half_len - 1) / fs");
    }
    if (!(l2 >= 0.0)) fail("l2 must be non-negative");
}

MdsConfig MdsConfig::full_scale(double fs, int input_dim) {
    MdsConfig c;
    c.clusters = 32;
    c.input_dim = input_dim;
    c.trunk_layers = 5;
    c.trunk_filters = 16;
    c.trunk_kernel_len = 8;
    c.head_kernel_len = 8;
    c.fs = fs;
    c.fc = fs / 2.0;
    c.sinc_half_len = static_cast<int>(std::lround(22.0 * fs));
    c.tau_init_lo = 0.0;
    c.tau_init_hi = 20.0;
    c.l2 = 0.0;
    return c;
}

void to_json(json& j, const MdsConfig& c) {
    j = json{{"clusters", c.clusters},
             {"input_dim", c.input_dim},
             {"trunk_layers", c.trunk_layers},
             {"trunk_filters", c.trunk_filters},
             {"trunk_kernel_len", c.trunk_kernel_len},
             {"head_kernel_len", c.head_kernel_len},
             {"fs", c.fs},
             {"fc", c.fc},
             {"sinc_half_len", c.sinc_half_len},
             {"tau_init_lo", c.tau_init_lo},
             {"tau_init_hi", c.tau_init_hi},
             {"l2", c.l2}};
}

void from_json(const json& j, MdsConfig& c) {
    MdsConfig d;
    c.clusters = j.value("clusters", d.clusters);
    c.input_dim = j.value("input_dim", d.input_dim);
    c.trunk_layers = j.value("trunk_layers", d.trunk_layers);
    c.trunk_filters = j.value("trunk_filters", d.trunk_filters);
    c.trunk_kernel_len = j.value("trunk_kernel_len", d.trunk_kernel_len);
    c.head_kernel_len = j.value("head_kernel_len", c.trunk_kernel_len);
    c.fs = j.value("fs", d.fs);
    c.fc = j.value("fc", c.fs / 2.0);
    c.sinc_half_len = j.value("sinc_half_len", d.sinc_half_len);
    c.tau_init_lo = j.value("tau_init_lo", d.tau_init_lo);
    c.tau_init_hi = j.value("tau_init_hi", d.tau_init_hi);
    c.l2 = j.value("l2", d.l2);
}

ConvLayer::ConvLayer(int in_ch, int out_ch, int k)
    : in_channels(in_ch),
      out_channels(out_ch),
      kernel_len(k),
      weights(static_cast<std::size_t>(in_ch) * out_ch * k, 0.0),
      bias(static_cast<std::size_t>(out_ch), 0.0) {}

std::size_t MdsParams::size() const noexcept {
    std::size_t n = 0;
    for (const auto& l : trunk) {
        n += l.weights.size() + l.bias.size();
    }
    return n + head.weights.size() + head.bias.size() + taus.size();
}

std::vector<double> MdsParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    const auto append = [&flat](const std::vector<double>& v) { flat.insert(flat.end(), v.begin(), v.end()); };
    for (const auto& l : trunk) {
        append(l.weights);
        append(l.bias);
    }
    append(head.weights);
    append(head.bias);
    append(taus);
    return flat;
}

void MdsParams::assign(std::span<const double> flat) {
    if (flat.size() != size()) {
        throw ShapeMismatch("MdsParams::assign: flat vector has wrong length");
    }
    std::size_t pos = 0;
    const auto take = [&](std::vector<double>& v) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
        pos += v.size();
    };
    for (auto& l : trunk) {
        take(l.weights);
        take(l.bias);
    }
    take(head.weights);
    take(head.bias);
    take(taus);
}

MdsParams MdsParams::zeros_like() const {
    MdsParams z;
    for (const auto& l : trunk) {
        z.trunk.emplace_back(l.in_channels, l.out_channels, l.kernel_len);
    }
    z.head = ConvLayer(head.in_channels, head.out_channels, head.kernel_len);
    z.taus.assign(taus.size(), 0.0);
    return z;
}

void MdsModel::validate() const {
    config.validate();
    const auto fail = [](const std::string& msg) { throw ShapeMismatch("MdsModel: " + msg); };
    if (static_cast<int>(params.trunk.size()) != config.trunk_layers) fail("trunk layer count");
    int in = config.input_dim;
    const auto check_layer = [&](const ConvLayer& l, int out, int k) {
        if (l.in_channels != in || l.out_channels != out || l.kernel_len != k ||
            l.weights.size() != static_cast<std::size_t>(in) * out * k ||
            l.bias.size() != static_cast<std::size_t>(out)) {
            fail("layer shape disagrees with config");
        }
    };
    for (const auto& l : params.trunk) {
        check_layer(l, config.trunk_filters, config.trunk_kernel_len);
        in = config.trunk_filters;
    }
    check_layer(params.head, 2 * config.clusters, config.head_kernel_len);
    if (static_cast<int>(params.taus.size()) != config.clusters) fail("tau count");
    for (double t : params.taus) {
        if (!(std::abs(t) <= config.tau_limit())) {
            throw InvalidArgument("MdsModel: tau outside the sinc window");
        }
    }
}

void MdsModel::clamp_taus() {
    const double lim = config.tau_limit();
    for (double& t : params.taus) {
        t = std::clamp(t, -lim, lim);
    }
}

namespace {

void glorot_fill(ConvLayer& l, Rng& rng) {
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel_len;
    const double fan_out = static_cast<double>(l.out_channels) * l.kernel_len;
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    for (double& w : l.weights) {
        w = dist(rng);
    }
}

}  // namespace

MdsModel init_model(const MdsConfig& config, std::uint64_t seed) {
    config.validate();
    MdsModel m;
    m.config = config;

    Rng weight_rng = make_rng(seed, {tag(RngStream::ModelWeights)});
    int in = config.input_dim;
    for (int l = 0; l < config.trunk_layers; ++l) {
        ConvLayer layer(in, config.trunk_filters, config.trunk_kernel_len);
        glorot_fill(layer, weight_rng);
        m.params.trunk.push_back(std::move(layer));
        in = config.trunk_filters;
    }
    m.params.head = ConvLayer(in, 2 * config.clusters, config.head_kernel_len);
    glorot_fill(m.params.head, weight_rng);

    Rng tau_rng = make_rng(seed, {tag(RngStream::ModelTaus)});
    std::uniform_real_distribution<double> tau_dist(config.tau_init_lo, config.tau_init_hi);
    m.params.taus.resize(static_cast<std::size_t>(config.clusters));
    for (double& t : m.params.taus) {
        t = config.tau_init_lo == config.tau_init_hi ? config.tau_init_lo : tau_dist(tau_rng);
    }
    return m;
}

namespace {

json layer_to_json(const ConvLayer& l) {
    return json{{"in_channels", l.in_channels},
                {"out_channels", l.out_channels},
                {"kernel_len", l.kernel_len},
                {"weights", l.weights},
                {"bias", l.bias}};
}

ConvLayer layer_from_json(const json& j) {
    ConvLayer l(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                j.at("kernel_len").get<int>());
    auto w = j.at("weights").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != l.weights.size() || b.size() != l.bias.size()) {
        throw ShapeMismatch("model json: layer array length disagrees with its shape");
    }
    l.weights = std::move(w);
    l.bias = std::move(b);
    return l;
}

}  // namespace

json model_to_json(const MdsModel& model) {
    json trunk = json::array();
    for (const auto& l : model.params.trunk) {
        trunk.push_back(layer_to_json(l));
    }
    return json{{"format", "mds-model"},
                {"version", 1},
                {"config", model.config},
                {"parameters",
                 {{"trunk", trunk}, {"head", layer_to_json(model.params.head)}, {"taus", model.params.taus}}}};
}

MdsModel model_from_json(const json& j) {
    if (j.value("format", std::string{}) != "mds-model") {
        throw InvalidArgument("model json: missing or wrong format tag");
    }
    MdsModel m;
    m.config = j.at("config").get<MdsConfig>();
    const auto& p = j.at("parameters");
    for (const auto& l : p.at("trunk")) {
        m.params.trunk.push_back(layer_from_json(l));
    }
    m.params.head = layer_from_json(p.at("head"));
    m.params.taus = p.at("taus").get<std::vector<double>>();
    m.validate();
    return m;
}

void save_model(const MdsModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write model to " + path.string());
    }
    out << model_to_json(model).dump(1) << '\n';
}

MdsModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read model from " + path.string());
    }
    return model_from_json(json::parse(in));
}

}  // namespace mds
