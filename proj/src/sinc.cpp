#include "mds/sinc.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mds/error.hpp"

namespace mds {

void SincKernel::validate() const {
    if (!(fs > 0.0) || !std::isfinite(fs)) {
        throw InvalidArgument("sinc kernel: fs must be positive");
    }
    if (!(fc > 0.0) || fc > fs / 2.0) {
        throw InvalidArgument("sinc kernel: cutoff must satisfy 0 < fc <= fs/2, got fc=" +
                              std::to_string(fc));
    }
    if (half_len < 1) {
        throw InvalidArgument("sinc kernel: half_len must be at least 1");
    }
    if (!std::isfinite(tau) || !(std::abs(tau) < half_len / fs)) {
        throw InvalidArgument("sinc kernel: |tau| must be below half_len/fs, got tau=" +
                              std::to_string(tau));
    }
}

namespace {

// Below this magnitude the closed forms lose precision to cancellation.
constexpr double kSeriesThreshold = 1e-4;

bool is_nonzero_integer(double u) noexcept { return u != 0.0 && std::nearbyint(u) == u; }

// Argument 2 fc (n/fs - tau) written as (2 fc/fs)(n - tau fs) so that integer-sample
// delays at fc = fs/2 land exactly on integers.
double sinc_argument(const SincKernel& k, int n) noexcept {
    return (2.0 * k.fc / k.fs) * (static_cast<double>(n) - k.tau * k.fs);
}

}  // namespace

double sinc(double u) noexcept {
    if (std::abs(u) < kSeriesThreshold) {
        const double pu = std::numbers::pi * u;
        return 1.0 - pu * pu / 6.0;
    }
    if (is_nonzero_integer(u)) {
        return 0.0;
    }
    const double pu = std::numbers::pi * u;
    return std::sin(pu) / pu;
}

double sinc_derivative(double u) noexcept {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    if (std::abs(u) < kSeriesThreshold) {
        return -pi2 * u / 3.0 + pi2 * pi2 * u * u * u / 30.0;
    }
    if (is_nonzero_integer(u)) {
        const bool odd = std::fmod(std::abs(u), 2.0) == 1.0;
        return (odd ? -1.0 : 1.0) / u;
    }
    return (std::cos(std::numbers::pi * u) - sinc(u)) / u;
}

std::vector<double> make_sinc_kernel(const SincKernel& k) {
    k.validate();
    const double gain = 2.0 * k.fc / k.fs;
    std::vector<double> taps(static_cast<std::size_t>(k.length()));
    for (int j = 0; j < k.length(); ++j) {
        taps[j] = gain * sinc(sinc_argument(k, j - k.half_len));
    }
    return taps;
}

std::vector<double> sinc_kernel_grad_tau(const SincKernel& k) {
    k.validate();
    // d/dtau of gain * sinc(u) with du/dtau = -2 fc.
    const double scale = -(2.0 * k.fc / k.fs) * 2.0 * k.fc;
    std::vector<double> grad(static_cast<std::size_t>(k.length()));
    for (int j = 0; j < k.length(); ++j) {
        grad[j] = scale * sinc_derivative(sinc_argument(k, j - k.half_len));
    }
    return grad;
}

}  // namespace mds
