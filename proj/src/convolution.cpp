#include "mds/convolution.hpp"

#include <algorithm>
#include <cstddef>

#include "mds/error.hpp"
#include "mds/sinc.hpp"

namespace mds {

namespace {

void check_kernel(std::span<const double> h, std::size_t center) {
    if (h.empty()) {
        throw InvalidArgument("convolution: empty kernel");
    }
    if (center >= h.size()) {
        throw InvalidArgument("convolution: center index outside kernel");
    }
}

}  // namespace

void convolve_same_accumulate(std::span<const double> x, std::span<const double> h,
                              std::size_t center, std::span<double> out) {
    check_kernel(h, center);
    if (out.size() != x.size()) {
        throw ShapeMismatch("convolution: output length differs from input length");
    }
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto c = static_cast<std::ptrdiff_t>(center);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(h.size()); ++j) {
        const double w = h[j];
        if (w == 0.0) {
            continue;
        }
        const std::ptrdiff_t shift = j - c;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, shift);
        const std::ptrdiff_t hi = std::min(n, n + shift);
        if (hi <= lo) {
            continue;
        }
        const double* src = x.data() + (lo - shift);
        double* dst = out.data() + lo;
        for (std::ptrdiff_t t = 0; t < hi - lo; ++t) {
            dst[t] += w * src[t];
        }
    }
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h,
                                  std::size_t center) {
    if (x.empty()) {
        throw InvalidArgument("convolution: empty input");
    }
    std::vector<double> out(x.size(), 0.0);
    convolve_same_accumulate(x, h, center, out);
    return out;
}

SampledSignal convolve_same(const SampledSignal& x, std::span<const double> h, std::size_t center) {
    return SampledSignal(convolve_same(x.values(), h, center), x.fs());
}

void convolve_same_backward_input(std::span<const double> grad_out, std::span<const double> h,
                                  std::size_t center, std::span<double> dx) {
    check_kernel(h, center);
    if (dx.size() != grad_out.size()) {
        throw ShapeMismatch("convolution backward: gradient length mismatch");
    }
    const auto n = static_cast<std::ptrdiff_t>(grad_out.size());
    const auto c = static_cast<std::ptrdiff_t>(center);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(h.size()); ++j) {
        const double w = h[j];
        if (w == 0.0) {
            continue;
        }
        // dx[i] += h[j] * g[i + shift]
        const std::ptrdiff_t shift = j - c;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t hi = std::min(n, n - shift);
        if (hi <= lo) {
            continue;
        }
        const double* src = grad_out.data() + (lo + shift);
        double* dst = dx.data() + lo;
        for (std::ptrdiff_t i = 0; i < hi - lo; ++i) {
            dst[i] += w * src[i];
        }
    }
}

std::vector<double> convolve_same_backward_kernel(std::span<const double> grad_out,
                                                  std::span<const double> x,
                                                  std::size_t kernel_len, std::size_t center) {
    if (kernel_len == 0 || center >= kernel_len) {
        throw InvalidArgument("convolution backward: invalid kernel geometry");
    }
    if (grad_out.size() != x.size()) {
        throw ShapeMismatch("convolution backward: gradient length mismatch");
    }
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto c = static_cast<std::ptrdiff_t>(center);
    std::vector<double> dh(kernel_len, 0.0);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(kernel_len); ++j) {
        const std::ptrdiff_t shift = j - c;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, shift);
        const std::ptrdiff_t hi = std::min(n, n + shift);
        if (hi <= lo) {
            continue;
        }
        const double* g = grad_out.data() + lo;
        const double* src = x.data() + (lo - shift);
        const std::ptrdiff_t count = hi - lo;
        double acc0 = 0.0;
        double acc1 = 0.0;
        std::ptrdiff_t t = 0;
        for (; t + 1 < count; t += 2) {
            acc0 += g[t] * src[t];
            acc1 += g[t + 1] * src[t + 1];
        }
        if (t < count) {
            acc0 += g[t] * src[t];
        }
        dh[j] = acc0 + acc1;
    }
    return dh;
}

SampledSignal apply_delay(const SampledSignal& x, double tau, double fc, int half_len) {
    const SincKernel k{tau, fc, x.fs(), half_len};
    const auto taps = make_sinc_kernel(k);
    return convolve_same(x, taps, static_cast<std::size_t>(k.center_index()));
}

}  // namespace mds
