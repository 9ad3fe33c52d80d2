#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mds {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// First and second moment estimates, one entry per parameter.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update, elementwise, in place.
/// t is the 1-based step index. Throws ShapeMismatch if the sizes disagree.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::int64_t t, const AdamConfig& cfg);

}  // namespace mds
