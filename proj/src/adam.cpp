#include "mds/adam.hpp"

#include <cmath>

#include "mds/error.hpp"

namespace mds {

void AdamConfig::validate() const {
    if (!(lr >= 0.0)) throw InvalidArgument("Adam: lr must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("Adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("Adam: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw InvalidArgument("Adam: eps must be positive");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               std::int64_t t, const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw ShapeMismatch("adam_step: parameter, gradient and state sizes differ");
    }
    if (t < 1) {
        throw InvalidArgument("adam_step: step index starts at 1");
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace mds
