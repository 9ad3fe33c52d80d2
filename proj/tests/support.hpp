#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mds/features.hpp"

namespace testing_support {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

/// ||a - b|| / max(||b||, tiny)
inline double rel_l2(std::span<const double> a, std::span<const double> b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline mds::FeatureSequence random_features(std::size_t length, std::size_t dims, double fs, std::uint64_t seed,
                                            std::string speaker = "spk") {
    mds::FeatureSequence f;
    f.fs = fs;
    f.speaker_id = std::move(speaker);
    f.frames = mds::Matrix(length, dims, random_vector(length * dims, seed));
    return f;
}

/// Recording with random features and labels.
inline mds::Recording random_recording(const std::string& id, const std::string& speaker, mds::Partition p,
                                       std::size_t length, std::size_t dims, double fs, std::uint64_t seed) {
    mds::Recording r;
    r.id = id;
    r.features = random_features(length, dims, fs, seed, speaker);
    r.labels = mds::SampledSignal(random_vector(length, seed + 1000), fs);
    r.partition = p;
    return r;
}

}  // namespace testing_support
