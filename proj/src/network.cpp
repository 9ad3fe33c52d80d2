#include "mds/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mds/convolution.hpp"
#include "mds/error.hpp"
#include "mds/metrics.hpp"
#include "mds/sinc.hpp"

namespace mds {

namespace {

void check_input(const MdsModel& model, const FeatureSequence& x) {
    if (static_cast<int>(x.dims()) != model.config.input_dim) {
        throw ShapeMismatch("forward: input has " + std::to_string(x.dims()) +
                            " dims, model expects " + std::to_string(model.config.input_dim));
    }
    if (x.length() < 1) {
        throw ShapeMismatch("forward: empty input");
    }
    if (std::abs(x.fs - model.config.fs) > 1e-9 * model.config.fs) {
        throw ShapeMismatch("forward: input frame rate differs from model fs");
    }
}

Matrix to_channel_major(const Matrix& frames) {
    Matrix out(frames.cols(), frames.rows());
    for (std::size_t t = 0; t < frames.rows(); ++t) {
        for (std::size_t d = 0; d < frames.cols(); ++d) {
            out(d, t) = frames(t, d);
        }
    }
    return out;
}

Matrix conv_forward(const ConvLayer& layer, const Matrix& in) {
    const auto n = static_cast<std::ptrdiff_t>(in.cols());
    Matrix out(static_cast<std::size_t>(layer.out_channels), in.cols());
    for (int o = 0; o < layer.out_channels; ++o) {
        auto dst = out.row(static_cast<std::size_t>(o));
        std::fill(dst.begin(), dst.end(), layer.bias[o]);
        for (int i = 0; i < layer.in_channels; ++i) {
            const auto src = in.row(static_cast<std::size_t>(i));
            for (int k = 0; k < layer.kernel_len; ++k) {
                const double w = layer.w(o, i, k);
                const std::ptrdiff_t s = k - layer.center();
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -s);
                const std::ptrdiff_t hi = std::min(n, n - s);
                for (std::ptrdiff_t t = lo; t < hi; ++t) {
                    dst[t] += w * src[t + s];
                }
            }
        }
    }
    return out;
}

// Accumulates weight/bias gradients into grad and returns dL/din.
Matrix conv_backward(const ConvLayer& layer, const Matrix& in, const Matrix& dout, ConvLayer& grad) {
    const auto n = static_cast<std::ptrdiff_t>(in.cols());
    Matrix din(in.rows(), in.cols());
    for (int o = 0; o < layer.out_channels; ++o) {
        const auto g = dout.row(static_cast<std::size_t>(o));
        double db = 0.0;
        for (double v : g) {
            db += v;
        }
        grad.bias[o] += db;
        for (int i = 0; i < layer.in_channels; ++i) {
            const auto src = in.row(static_cast<std::size_t>(i));
            auto dsrc = din.row(static_cast<std::size_t>(i));
            for (int k = 0; k < layer.kernel_len; ++k) {
                const double w = layer.w(o, i, k);
                const std::ptrdiff_t s = k - layer.center();
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -s);
                const std::ptrdiff_t hi = std::min(n, n - s);
                double dw = 0.0;
                for (std::ptrdiff_t t = lo; t < hi; ++t) {
                    dw += g[t] * src[t + s];
                    dsrc[t + s] += w * g[t];
                }
                grad.w(o, i, k) += dw;
            }
        }
    }
    return din;
}

SincKernel cluster_kernel(const MdsConfig& c, double tau) {
    return SincKernel{tau, c.fc, c.fs, c.sinc_half_len};
}

}  // namespace

ForwardTrace forward(const MdsModel& model, const FeatureSequence& x) {
    check_input(model, x);
    const MdsConfig& cfg = model.config;
    const int m_count = cfg.clusters;
    const std::size_t len = x.length();

    ForwardTrace tr;
    tr.fs = cfg.fs;
    tr.taus = model.params.taus;
    tr.activations.reserve(model.params.trunk.size() + 1);
    tr.activations.push_back(to_channel_major(x.frames));
    for (const auto& layer : model.params.trunk) {
        Matrix a = conv_forward(layer, tr.activations.back());
        for (double& v : a.data()) {
            v = std::tanh(v);
        }
        tr.activations.push_back(std::move(a));
    }
    tr.head = conv_forward(model.params.head, tr.activations.back());

    tr.delayed = Matrix(static_cast<std::size_t>(2 * m_count), len);
    const auto center = static_cast<std::size_t>(cfg.sinc_half_len);
    for (int m = 0; m < m_count; ++m) {
        const auto taps = make_sinc_kernel(cluster_kernel(cfg, model.params.taus[m]));
        for (int ch : {m, m + m_count}) {
            const auto r = static_cast<std::size_t>(ch);
            convolve_same_accumulate(tr.head.row(r), taps, center, tr.delayed.row(r));
        }
    }

    tr.softmax = Matrix(static_cast<std::size_t>(m_count), len);
    tr.y.assign(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double mx = tr.delayed(static_cast<std::size_t>(m_count), t);
        for (int m = 1; m < m_count; ++m) {
            mx = std::max(mx, tr.delayed(static_cast<std::size_t>(m_count + m), t));
        }
        double z = 0.0;
        for (int m = 0; m < m_count; ++m) {
            const double e = std::exp(tr.delayed(static_cast<std::size_t>(m_count + m), t) - mx);
            tr.softmax(static_cast<std::size_t>(m), t) = e;
            z += e;
        }
        double y = 0.0;
        for (int m = 0; m < m_count; ++m) {
            double& s = tr.softmax(static_cast<std::size_t>(m), t);
            s /= z;
            y += s * tr.delayed(static_cast<std::size_t>(m), t);
        }
        tr.y[t] = y;
    }
    return tr;
}

SampledSignal predict(const MdsModel& model, const FeatureSequence& x) {
    auto tr = forward(model, x);
    return SampledSignal(std::move(tr.y), x.fs);
}

SampledSignal hard_select(const ForwardTrace& trace) {
    const int m_count = trace.clusters();
    if (m_count < 1 || trace.delayed.rows() != static_cast<std::size_t>(2 * m_count) ||
        trace.delayed.cols() != trace.length()) {
        throw ShapeMismatch("hard_select: malformed trace");
    }
    std::vector<double> y(trace.length());
    for (std::size_t t = 0; t < y.size(); ++t) {
        int best = 0;
        double best_w = trace.delayed(static_cast<std::size_t>(m_count), t);
        for (int m = 1; m < m_count; ++m) {
            const double w = trace.delayed(static_cast<std::size_t>(m_count + m), t);
            if (w > best_w) {
                best_w = w;
                best = m;
            }
        }
        y[t] = trace.delayed(static_cast<std::size_t>(best), t);
    }
    return SampledSignal(std::move(y), trace.fs);
}

Gradients backward(const MdsModel& model, const FeatureSequence& x, const SampledSignal& y_true,
                   const ForwardTrace& trace) {
    check_input(model, x);
    const MdsConfig& cfg = model.config;
    const int m_count = cfg.clusters;
    const std::size_t len = x.length();
    if (trace.length() != len || trace.clusters() != m_count ||
        trace.activations.size() != model.params.trunk.size() + 1 ||
        trace.taus != model.params.taus) {
        throw ShapeMismatch("backward: trace does not belong to this model and input");
    }
    if (y_true.size() != len) {
        throw ShapeMismatch("backward: label length differs from input length");
    }

    Gradients out;
    out.params = model.params.zeros_like();

    const CccStats stats = ccc_stats(y_true.values(), trace.y);
    out.ccc = stats.value();
    double reg = 0.0;
    const auto add_l2 = [&](const ConvLayer& l, ConvLayer& g) {
        for (std::size_t i = 0; i < l.weights.size(); ++i) {
            reg += l.weights[i] * l.weights[i];
            g.weights[i] += 2.0 * cfg.l2 * l.weights[i];
        }
    };
    if (cfg.l2 > 0.0) {
        for (std::size_t l = 0; l < model.params.trunk.size(); ++l) {
            add_l2(model.params.trunk[l], out.params.trunk[l]);
        }
        add_l2(model.params.head, out.params.head);
    }
    out.loss = 1.0 - out.ccc + cfg.l2 * reg;

    // dL/dy = -dCCC/dy
    std::vector<double> gy = ccc_grad(y_true.values(), trace.y);
    for (double& v : gy) {
        v = -v;
    }

    // Soft average: y = sum_m s_m * Fd_m, s = softmax(wd).
    Matrix d_delayed(static_cast<std::size_t>(2 * m_count), len);
    for (std::size_t t = 0; t < len; ++t) {
        for (int m = 0; m < m_count; ++m) {
            const double s = trace.softmax(static_cast<std::size_t>(m), t);
            const double fd = trace.delayed(static_cast<std::size_t>(m), t);
            d_delayed(static_cast<std::size_t>(m), t) = gy[t] * s;
            d_delayed(static_cast<std::size_t>(m_count + m), t) = gy[t] * s * (fd - trace.y[t]);
        }
    }

    // Delayed sinc layers: gradients to the head outputs and to each tau.
    Matrix d_head(static_cast<std::size_t>(2 * m_count), len);
    const auto center = static_cast<std::size_t>(cfg.sinc_half_len);
    const auto klen = static_cast<std::size_t>(2 * cfg.sinc_half_len);
    for (int m = 0; m < m_count; ++m) {
        const SincKernel k = cluster_kernel(cfg, model.params.taus[m]);
        const auto taps = make_sinc_kernel(k);
        const auto dtaps = sinc_kernel_grad_tau(k);
        double dtau = 0.0;
        for (int ch : {m, m + m_count}) {
            // With a single cluster the weight path is constant and its gradient vanishes.
            if (m_count == 1 && ch == m_count) {
                continue;
            }
            const auto r = static_cast<std::size_t>(ch);
            convolve_same_backward_input(d_delayed.row(r), taps, center, d_head.row(r));
            const auto dh = convolve_same_backward_kernel(d_delayed.row(r), trace.head.row(r), klen, center);
            for (std::size_t j = 0; j < klen; ++j) {
                dtau += dh[j] * dtaps[j];
            }
        }
        out.params.taus[m] = dtau;
    }

    Matrix d_act = conv_backward(model.params.head, trace.activations.back(), d_head, out.params.head);
    for (std::size_t l = model.params.trunk.size(); l-- > 0;) {
        const Matrix& a = trace.activations[l + 1];
        for (std::size_t i = 0; i < d_act.data().size(); ++i) {
            const double v = a.data()[i];
            d_act.data()[i] *= 1.0 - v * v;
        }
        d_act = conv_backward(model.params.trunk[l], trace.activations[l], d_act, out.params.trunk[l]);
    }
    return out;
}

double loss(const MdsModel& model, const FeatureSequence& x, const SampledSignal& y_true) {
    const auto tr = forward(model, x);
    double reg = 0.0;
    if (model.config.l2 > 0.0) {
        for (const auto& l : model.params.trunk) {
            for (double w : l.weights) reg += w * w;
        }
        for (double w : model.params.head.weights) reg += w * w;
    }
    return 1.0 - ccc(y_true.values(), tr.y) + model.config.l2 * reg;
}

}  // namespace mds
