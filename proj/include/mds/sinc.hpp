#pragma once

#include <vector>

namespace mds {

/// Parameters of a rectangular-windowed, time-shifted sinc low-pass kernel.
///
/// The kernel has 2*half_len taps covering sample offsets n = -half_len .. half_len-1;
/// tap index j corresponds to n = j - half_len. A positive tau moves the main lobe to
/// positive n, which delays the filtered signal by tau seconds.
struct SincKernel {
    double tau = 0.0;      ///< delay in seconds
    double fc = 0.0;       ///< cutoff frequency in Hz
    double fs = 0.0;       ///< sampling frequency in Hz
    int half_len = 0;      ///< half window length in samples

    int length() const noexcept { return 2 * half_len; }
    int center_index() const noexcept { return half_len; }

    /// Throws InvalidArgument unless 0 < fc <= fs/2, half_len >= 1 and |tau| < half_len/fs.
    void validate() const;
};

/// Normalized sinc, sin(pi u) / (pi u), exactly 0 at nonzero integers.
double sinc(double u) noexcept;

/// Derivative of the normalized sinc with respect to its argument.
double sinc_derivative(double u) noexcept;

/// Taps (2 fc / fs) * sinc(2 fc (n / fs - tau)), n = -half_len .. half_len-1.
std::vector<double> make_sinc_kernel(const SincKernel& k);

/// Elementwise derivative of make_sinc_kernel(k) with respect to tau.
std::vector<double> sinc_kernel_grad_tau(const SincKernel& k);

}  // namespace mds
