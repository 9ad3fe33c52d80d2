#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "mds/error.hpp"
#include "mds/model.hpp"

using namespace mds;

namespace {

MdsConfig small_config() {
    MdsConfig c;
    c.clusters = 3;
    c.input_dim = 2;
    c.trunk_layers = 2;
    c.trunk_filters = 4;
    c.trunk_kernel_len = 5;
    c.head_kernel_len = 3;
    c.fs = 10.0;
    c.fc = 5.0;
    c.sinc_half_len = 40;
    c.tau_init_lo = 0.0;
    c.tau_init_hi = 3.0;
    return c;
}

}  // namespace

TEST(Model, ShapesFollowConfig) {
    const auto m = init_model(small_config(), 1);
    ASSERT_EQ(m.params.trunk.size(), 2u);
    EXPECT_EQ(m.params.trunk[0].in_channels, 2);
    EXPECT_EQ(m.params.trunk[0].out_channels, 4);
    EXPECT_EQ(m.params.trunk[1].in_channels, 4);
    EXPECT_EQ(m.params.head.out_channels, 6);
    EXPECT_EQ(m.params.head.kernel_len, 3);
    EXPECT_EQ(m.params.taus.size(), 3u);
    const std::size_t expected = (2 * 4 * 5 + 4) + (4 * 4 * 5 + 4) + (4 * 6 * 3 + 6) + 3;
    EXPECT_EQ(m.params.size(), expected);
    EXPECT_EQ(m.params.flatten().size(), expected);
}

TEST(Model, InitIsDeterministicPerSeed) {
    EXPECT_EQ(init_model(small_config(), 42), init_model(small_config(), 42));
    EXPECT_NE(init_model(small_config(), 42).params, init_model(small_config(), 43).params);
}

TEST(Model, GlorotBoundsAndZeroBiases) {
    const auto m = init_model(small_config(), 3);
    for (const auto& l : m.params.trunk) {
        const double s = std::sqrt(6.0 / (l.in_channels * l.kernel_len + l.out_channels * l.kernel_len));
        for (double w : l.weights) EXPECT_LE(std::abs(w), s);
        for (double b : l.bias) EXPECT_EQ(b, 0.0);
    }
}

TEST(Model, TauInitIsUniformOverRange) {
    // Kolmogorov-Smirnov against U[0, 3], alpha = 0.01.
    MdsConfig c = small_config();
    c.clusters = 8;
    c.trunk_layers = 1;
    c.trunk_filters = 1;
    std::vector<double> taus;
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        const auto m = init_model(c, seed);
        taus.insert(taus.end(), m.params.taus.begin(), m.params.taus.end());
    }
    std::sort(taus.begin(), taus.end());
    const double n = static_cast<double>(taus.size());
    double d = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double cdf = taus[i] / 3.0;
        d = std::max({d, std::abs(cdf - i / n), std::abs((i + 1) / n - cdf)});
    }
    EXPECT_LT(d, 1.63 / std::sqrt(n));
    EXPECT_GE(taus.front(), 0.0);
    EXPECT_LE(taus.back(), 3.0);
}

TEST(Model, FlattenAssignRoundTrip) {
    auto m = init_model(small_config(), 5);
    auto flat = m.params.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = 0.25 * static_cast<double>(i);
    m.params.assign(flat);
    EXPECT_EQ(m.params.flatten(), flat);
    EXPECT_EQ(m.params.taus.back(), flat.back());
    EXPECT_THROW(m.params.assign(std::vector<double>(flat.size() - 1)), ShapeMismatch);
    const auto z = m.params.zeros_like().flatten();
    EXPECT_TRUE(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
}

TEST(Model, JsonRoundTripIsExact) {
    auto m = init_model(small_config(), 9);
    m.params.taus[1] = 0.1 + 0.2;  // not representable in short decimal form
    const auto back = model_from_json(model_to_json(m));
    EXPECT_EQ(back, m);

    const auto path = std::filesystem::temp_directory_path() / "mds_model_roundtrip.json";
    save_model(m, path);
    EXPECT_EQ(load_model(path), m);
    std::filesystem::remove(path);
}

TEST(Model, JsonRejectsMismatchedParameters) {
    auto j = model_to_json(init_model(small_config(), 1));
    j["parameters"]["taus"].push_back(0.0);
    EXPECT_THROW(model_from_json(j), ShapeMismatch);
    auto k = model_to_json(init_model(small_config(), 1));
    k["format"] = "something-else";
    EXPECT_THROW(model_from_json(k), InvalidArgument);
}

TEST(Model, ClampKeepsTausInsideWindow) {
    auto m = init_model(small_config(), 2);
    m.params.taus = {10.0, -10.0, 1.0};
    m.clamp_taus();
    const double lim = small_config().tau_limit();
    EXPECT_DOUBLE_EQ(lim, 3.9);
    EXPECT_EQ(m.params.taus, (std::vector<double>{lim, -lim, 1.0}));
}

TEST(Model, ConfigValidation) {
    auto bad = [](auto edit) {
        MdsConfig c = small_config();
        edit(c);
        return c;
    };
    EXPECT_THROW(bad([](MdsConfig& c) { c.clusters = 0; }).validate(), InvalidArgument);
    EXPECT_THROW(bad([](MdsConfig& c) { c.fc = 5.1; }).validate(), InvalidArgument);
    EXPECT_THROW(bad([](MdsConfig& c) { c.tau_init_hi = 4.0; }).validate(), InvalidArgument);
    EXPECT_THROW(bad([](MdsConfig& c) { c.trunk_kernel_len = 0; }).validate(), InvalidArgument);
    EXPECT_THROW(bad([](MdsConfig& c) { c.l2 = -1.0; }).validate(), InvalidArgument);
    EXPECT_NO_THROW(small_config().validate());
}

TEST(Model, FullScaleArchitecture) {
    const auto c = MdsConfig::full_scale(25.0, 40);
    EXPECT_EQ(c.clusters, 32);
    EXPECT_EQ(c.trunk_layers, 5);
    EXPECT_EQ(c.trunk_filters, 16);
    EXPECT_EQ(c.trunk_kernel_len, 8);
    EXPECT_EQ(c.sinc_half_len, 550);
    EXPECT_DOUBLE_EQ(c.fc, 12.5);
    EXPECT_NO_THROW(c.validate());
}
