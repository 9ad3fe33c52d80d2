#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mds {

/// Architecture and initialization hyperparameters of an MDS network.
struct MdsConfig {
    int clusters = 1;           ///< M, number of delayed sinc branches
    int input_dim = 1;
    int trunk_layers = 1;
    int trunk_filters = 16;
    int trunk_kernel_len = 8;   ///< samples
    int head_kernel_len = 8;    ///< samples; usually equal to trunk_kernel_len
    double fs = 25.0;           ///< label / frame rate in Hz
    double fc = 12.5;           ///< sinc cutoff in Hz
    int sinc_half_len = 550;    ///< samples; sinc kernels have 2*sinc_half_len taps
    double tau_init_lo = 0.0;   ///< seconds
    double tau_init_hi = 20.0;  ///< seconds
    double l2 = 0.0;            ///< weight on the sum of squared conv weights

    /// Largest |tau| a model may hold: (sinc_half_len - 1) / fs.
    double tau_limit() const noexcept { return (sinc_half_len - 1) / fs; }

    /// Throws InvalidArgument when any field is out of range.
    void validate() const;

    /// Full-size speech setup: 5 layers of 16 filters of length 8, 32 clusters,
    /// fc = fs/2, 44 s sinc window, tau initialized in [0, 20] s.
    static MdsConfig full_scale(double fs, int input_dim);

    bool operator==(const MdsConfig&) const = default;
};

void to_json(nlohmann::json& j, const MdsConfig& c);
void from_json(const nlohmann::json& j, MdsConfig& c);

/// One-dimensional convolution layer, cross-correlation form with same padding:
///
///   out[o][t] = bias[o] + sum_i sum_k weights[o][i][k] * in[i][t + k - center]
///
/// with center = (kernel_len - 1) / 2 and zero padding. Weights are row-major [o][i][k].
struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_len = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    ConvLayer() = default;
    ConvLayer(int in_ch, int out_ch, int k);

    int center() const noexcept { return (kernel_len - 1) / 2; }
    double& w(int o, int i, int k) noexcept {
        return weights[(static_cast<std::size_t>(o) * in_channels + i) * kernel_len + k];
    }
    double w(int o, int i, int k) const noexcept {
        return weights[(static_cast<std::size_t>(o) * in_channels + i) * kernel_len + k];
    }

    bool operator==(const ConvLayer&) const = default;
};

/// Trainable tensors of an MDS network. Also used, with identical shapes, to hold gradients.
///
/// Flattened order: for each trunk layer its weights then bias, then head weights,
/// head bias, then taus. The head emits 2M channels: 0..M-1 are cluster labels,
/// M..2M-1 are cluster weights.
struct MdsParams {
    std::vector<ConvLayer> trunk;
    ConvLayer head;
    std::vector<double> taus;  ///< seconds

    std::size_t size() const noexcept;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    /// Same shapes, every entry zero.
    MdsParams zeros_like() const;

    bool operator==(const MdsParams&) const = default;
};

struct MdsModel {
    MdsConfig config;
    MdsParams params;

    /// Checks parameter shapes against the config and taus against tau_limit.
    void validate() const;
    /// Clamps every tau into [-tau_limit, tau_limit].
    void clamp_taus();

    bool operator==(const MdsModel&) const = default;
};

/// Fresh model: taus uniform in [tau_init_lo, tau_init_hi], conv weights uniform in
/// [-s, s] with s = sqrt(6 / (fan_in + fan_out)), zero biases. Deterministic per seed.
MdsModel init_model(const MdsConfig& config, std::uint64_t seed);

nlohmann::json model_to_json(const MdsModel& model);
MdsModel model_from_json(const nlohmann::json& j);
void save_model(const MdsModel& model, const std::filesystem::path& path);
MdsModel load_model(const std::filesystem::path& path);

}  // namespace mds
