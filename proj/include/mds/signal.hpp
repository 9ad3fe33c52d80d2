#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "mds/error.hpp"

namespace mds {

/// One-dimensional real sequence sampled at a fixed rate.
///
/// Used for annotation traces, network predictions and sinc-layer outputs.
/// Construction validates fs > 0, non-empty values and finiteness.
class SampledSignal {
public:
    SampledSignal(std::vector<double> values, double fs) : values_(std::move(values)), fs_(fs) {
        if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
            throw InvalidArgument("SampledSignal: sampling frequency must be positive");
        }
        if (values_.empty()) {
            throw InvalidArgument("SampledSignal: empty signal");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("SampledSignal: non-finite value");
            }
        }
    }

    std::size_t size() const noexcept { return values_.size(); }
    double fs() const noexcept { return fs_; }
    double duration() const noexcept { return static_cast<double>(values_.size()) / fs_; }

    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vec() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    std::vector<double> values_;
    double fs_;
};

}  // namespace mds
