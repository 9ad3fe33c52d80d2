#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mds/feature_sequence.hpp"
#include "mds/features.hpp"
#include "mds/signal.hpp"

namespace mds {

/// Shape of the sum-of-sinusoids spectrum used by gen_bandlimited.
///
/// Component frequencies are log-uniform in [lowest_ratio * B, B); component power
/// scales as f^(1 - exponent), so the power spectral density falls off as f^-exponent
/// (0 = white, 1 = pink).
struct Spectrum {
    double exponent = 1.0;
    double lowest_ratio = 1.0 / 64.0;
    int components = 64;

    bool operator==(const Spectrum&) const = default;
};

/// Zero-mean, unit-variance signal made of sinusoids strictly below bandwidth_hz with
/// random phases. Throws InvalidArgument unless 0 < bandwidth_hz < fs/2.
SampledSignal gen_bandlimited(std::uint64_t seed, std::size_t length, double fs, double bandwidth_hz,
                              const Spectrum& spectrum = {});

/// Feature-derived indicator choosing which samples belong to a delay region.
struct RegionSelector {
    enum class Kind { All, Above, Below };
    Kind kind = Kind::All;
    int channel = 0;
    double threshold = 0.0;

    std::vector<bool> mask(const FeatureSequence& f) const;
};

struct DelayRegion {
    RegionSelector selector;
    double tau = 0.0;  ///< seconds
};

struct SynthSpec {
    int n_recordings = 8;
    int n_dev = 2;                  ///< trailing recordings tagged dev, the rest train
    double duration_s = 60.0;
    double fs = 25.0;
    int feature_dim = 4;
    double label_bandwidth_hz = 0.5;
    std::vector<DelayRegion> delays{DelayRegion{}};
    double noise_std = 0.05;
    std::uint64_t seed = 0;
    Spectrum spectrum;

    std::size_t length() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

/// The fixed latent map from features to undelayed labels:
///     g[t] = sum_d a_d * tanh(b_d * x[t][d]),  a_d = (-1)^d / sqrt(D),  b_d = 1 + 0.5 * (d mod 2)
std::vector<double> latent_map(const FeatureSequence& f);

/// Labels are g(features) delayed by the single region's tau (fc = fs/2) plus Gaussian noise.
Dataset gen_single_delay_task(const SynthSpec& spec);

/// Per region, labels follow g(features) delayed by that region's tau. At label time n
/// region r claims n when its feature-time mask is true at n - tau_r; claims are shared
/// equally (all regions share when none claims).
///
/// metadata: "true_delays", "seed", "spec", and per recording "region_masks" (feature
/// time) and "label_region_masks" (label times claimed by exactly that region).
Dataset gen_multi_delay_task(const SynthSpec& spec);

std::vector<std::vector<bool>> region_masks(const nlohmann::json& metadata, const std::string& recording_id,
                                            const char* key = "label_region_masks");

struct DelaySearch {
    double tau_star = 0.0;
    std::vector<double> grid;
    std::vector<double> ccc;
};

/// Grid [lo, hi] with the given step (both ends inclusive when hi - lo is a multiple of step).
std::vector<double> delay_grid(double lo, double hi, double step);

/// Exhaustive search for the delay of y relative to x: maximizes
/// ccc(apply_delay(x, tau, fs/2), y) over the grid, ignoring ceil(max|tau| fs)+1
/// samples at each end. Ties go to the smallest tau.
DelaySearch brute_force_delay(const SampledSignal& x, const SampledSignal& y, double lo = 0.0,
                              double hi = 6.0, double step = 0.4);

/// Same search with the CCC averaged over several (x, y) pairs.
DelaySearch brute_force_delay(std::span<const SampledSignal> xs, std::span<const SampledSignal> ys,
                              double lo = 0.0, double hi = 6.0, double step = 0.4);

/// Search restricted to one region: for candidate tau the score is the masked CCC over
/// label times n whose source sample n - tau lies in feature_mask.
DelaySearch brute_force_region_delay(const SampledSignal& x, const SampledSignal& y,
                                     const std::vector<bool>& feature_mask, double lo, double hi, double step);

}  // namespace mds
