#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mds/signal.hpp"

namespace mds {

// Same-length convolution with zero padding outside the input support:
//
//   out[t] = sum_j x[t - (j - center)] * h[j]
//
// The raw-span overloads are the building blocks of the network passes; the
// accumulate variants add into an existing buffer.

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h,
                                  std::size_t center);

SampledSignal convolve_same(const SampledSignal& x, std::span<const double> h, std::size_t center);

void convolve_same_accumulate(std::span<const double> x, std::span<const double> h,
                              std::size_t center, std::span<double> out);

/// Adds dL/dx into dx given upstream dL/dout for out = convolve_same(x, h, center).
void convolve_same_backward_input(std::span<const double> grad_out, std::span<const double> h,
                                  std::size_t center, std::span<double> dx);

/// dL/dh for out = convolve_same(x, h, center); result has kernel_len entries.
std::vector<double> convolve_same_backward_kernel(std::span<const double> grad_out,
                                                  std::span<const double> x,
                                                  std::size_t kernel_len, std::size_t center);

/// Delays x by tau seconds through a windowed sinc low-pass with cutoff fc.
SampledSignal apply_delay(const SampledSignal& x, double tau, double fc, int half_len);

}  // namespace mds
