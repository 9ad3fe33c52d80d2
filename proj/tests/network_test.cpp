#include <cmath>

#include <gtest/gtest.h>

#include "mds/error.hpp"
#include "mds/network.hpp"
#include "mds/sinc.hpp"
#include "support.hpp"

using namespace mds;
using testing_support::random_features;
using testing_support::random_vector;

namespace {

MdsConfig tiny(int clusters, double l2 = 0.0) {
    MdsConfig c;
    c.clusters = clusters;
    c.input_dim = 2;
    c.trunk_layers = 2;
    c.trunk_filters = 3;
    c.trunk_kernel_len = 4;
    c.head_kernel_len = 3;
    c.fs = 10.0;
    c.fc = 3.0;
    c.sinc_half_len = 8;
    c.tau_init_lo = -0.6;
    c.tau_init_hi = 0.6;
    c.l2 = l2;
    return c;
}

// Straight-line forward pass written from the layer definitions.
std::vector<double> reference_forward(const MdsModel& model, const FeatureSequence& x) {
    const long n = static_cast<long>(x.length());
    std::vector<std::vector<double>> act(x.dims(), std::vector<double>(n));
    for (long t = 0; t < n; ++t)
        for (std::size_t d = 0; d < x.dims(); ++d) act[d][t] = x.frames(t, d);

    auto conv = [n](const ConvLayer& l, const std::vector<std::vector<double>>& in) {
        std::vector<std::vector<double>> out(l.out_channels, std::vector<double>(n));
        for (int o = 0; o < l.out_channels; ++o)
            for (long t = 0; t < n; ++t) {
                double s = l.bias[o];
                for (int i = 0; i < l.in_channels; ++i)
                    for (int k = 0; k < l.kernel_len; ++k) {
                        const long src = t + k - l.center();
                        if (src >= 0 && src < n) s += l.w(o, i, k) * in[i][src];
                    }
                out[o][t] = s;
            }
        return out;
    };
    for (const auto& l : model.params.trunk) {
        act = conv(l, act);
        for (auto& ch : act)
            for (double& v : ch) v = std::tanh(v);
    }
    const auto head = conv(model.params.head, act);
    const int m_count = model.config.clusters;
    std::vector<std::vector<double>> delayed(2 * m_count, std::vector<double>(n, 0.0));
    for (int m = 0; m < m_count; ++m) {
        const SincKernel k{model.params.taus[m], model.config.fc, model.config.fs, model.config.sinc_half_len};
        const auto h = make_sinc_kernel(k);
        for (int ch : {m, m + m_count})
            for (long t = 0; t < n; ++t)
                for (long j = 0; j < static_cast<long>(h.size()); ++j) {
                    const long src = t - (j - k.half_len);
                    if (src >= 0 && src < n) delayed[ch][t] += h[j] * head[ch][src];
                }
    }
    std::vector<double> y(n, 0.0);
    for (long t = 0; t < n; ++t) {
        double z = 0.0;
        for (int m = 0; m < m_count; ++m) z += std::exp(delayed[m_count + m][t]);
        for (int m = 0; m < m_count; ++m) y[t] += std::exp(delayed[m_count + m][t]) / z * delayed[m][t];
    }
    return y;
}

}  // namespace

TEST(Network, ForwardMatchesReferenceImplementation) {
    for (int clusters : {1, 2, 4}) {
        const auto model = init_model(tiny(clusters), 17 + clusters);
        const auto x = random_features(32, 2, 10.0, 5 + clusters);
        const auto want = reference_forward(model, x);
        const auto got = forward(model, x).y;
        for (std::size_t t = 0; t < want.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12);
    }
}

TEST(Network, SoftmaxColumnsSumToOne) {
    auto model = init_model(tiny(5), 3);
    for (double& w : model.params.head.weights) w *= 20.0;  // large logits
    const auto tr = forward(model, random_features(32, 2, 10.0, 8));
    for (std::size_t t = 0; t < tr.length(); ++t) {
        double s = 0.0;
        for (int m = 0; m < 5; ++m) {
            EXPECT_GE(tr.softmax(m, t), 0.0);
            s += tr.softmax(m, t);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Network, BackwardMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        MdsModel model = init_model(tiny(2, seed % 2 ? 0.01 : 0.0), 100 + seed);
        const auto x = random_features(32, 2, 10.0, 200 + seed);
        const SampledSignal y(random_vector(32, 300 + seed), 10.0);

        const auto grads = backward(model, x, y, forward(model, x)).params.flatten();
        auto flat = model.params.flatten();
        std::vector<double> fd(flat.size());
        const double step = 1e-6;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double keep = flat[i];
            flat[i] = keep + step;
            model.params.assign(flat);
            const double up = loss(model, x, y);
            flat[i] = keep - step;
            model.params.assign(flat);
            const double down = loss(model, x, y);
            flat[i] = keep;
            fd[i] = (up - down) / (2 * step);
        }
        model.params.assign(flat);
        EXPECT_LE(testing_support::rel_l2(grads, fd), 1e-4) << "seed " << seed;

        // the delay parameters on their own
        const std::size_t nt = model.params.taus.size();
        const std::vector<double> gt(grads.end() - nt, grads.end()), ft(fd.end() - nt, fd.end());
        EXPECT_LE(testing_support::rel_l2(gt, ft), 1e-4) << "seed " << seed;
    }
}

TEST(Network, SingleClusterIgnoresWeightHead) {
    auto model = init_model(tiny(1), 4);
    const auto x = random_features(32, 2, 10.0, 9);
    const auto before = forward(model, x).y;
    auto& head = model.params.head;
    for (int i = 0; i < head.in_channels; ++i)
        for (int k = 0; k < head.kernel_len; ++k) head.w(1, i, k) += 3.0 * (i + 1) - k;
    head.bias[1] = -7.0;
    EXPECT_EQ(forward(model, x).y, before);

    const SampledSignal y(random_vector(32, 10), 10.0);
    const auto g = backward(model, x, y, forward(model, x));
    for (int i = 0; i < head.in_channels; ++i)
        for (int k = 0; k < head.kernel_len; ++k) EXPECT_EQ(g.params.head.w(1, i, k), 0.0);
    EXPECT_EQ(g.params.head.bias[1], 0.0);
}

TEST(Network, ClusterPermutationInvariance) {
    const int m_count = 4;
    const auto model = init_model(tiny(m_count), 21);
    const std::vector<int> perm{2, 0, 3, 1};
    MdsModel permuted = model;
    auto& head = permuted.params.head;
    for (int m = 0; m < m_count; ++m) {
        for (int half : {0, m_count}) {
            const int dst = half + m;
            const int src = half + perm[m];
            for (int i = 0; i < head.in_channels; ++i)
                for (int k = 0; k < head.kernel_len; ++k) head.w(dst, i, k) = model.params.head.w(src, i, k);
            head.bias[dst] = model.params.head.bias[src];
        }
        permuted.params.taus[m] = model.params.taus[perm[m]];
    }
    const auto x = random_features(32, 2, 10.0, 22);
    const auto a = forward(model, x).y;
    const auto b = forward(permuted, x).y;
    for (std::size_t t = 0; t < a.size(); ++t) EXPECT_LE(std::abs(a[t] - b[t]), 1e-12);
}

TEST(Network, HardSelectPicksLargestWeight) {
    auto model = init_model(tiny(3), 5);
    const auto tr = forward(model, random_features(32, 2, 10.0, 6));
    const auto hard = hard_select(tr);
    for (std::size_t t = 0; t < tr.length(); ++t) {
        int best = 0;
        for (int m = 1; m < 3; ++m)
            if (tr.delayed(3 + m, t) > tr.delayed(3 + best, t)) best = m;
        EXPECT_EQ(hard[t], tr.delayed(best, t));
    }
}

TEST(Network, ShapeErrors) {
    const auto model = init_model(tiny(2), 1);
    EXPECT_THROW(forward(model, random_features(32, 3, 10.0, 1)), ShapeMismatch);
    EXPECT_THROW(forward(model, random_features(32, 2, 25.0, 1)), ShapeMismatch);
    const auto x = random_features(32, 2, 10.0, 1);
    const auto tr = forward(model, x);
    EXPECT_THROW(backward(model, x, SampledSignal(random_vector(31, 1), 10.0), tr), ShapeMismatch);
    MdsModel moved = model;
    moved.params.taus[0] += 0.1;
    EXPECT_THROW(backward(moved, x, SampledSignal(random_vector(32, 1), 10.0), tr), ShapeMismatch);
}
