#include <cmath>

#include <gtest/gtest.h>

#include "mds/error.hpp"
#include "mds/metrics.hpp"
#include "support.hpp"

using namespace mds;
using testing_support::random_vector;

namespace {

double naive_ccc(const std::vector<double>& y, const std::vector<double>& p) {
    const double n = static_cast<double>(y.size());
    double my = 0, mp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i] / n;
        mp += p[i] / n;
    }
    double vy = 0, vp = 0, c = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        vy += (y[i] - my) * (y[i] - my) / n;
        vp += (p[i] - mp) * (p[i] - mp) / n;
        c += (y[i] - my) * (p[i] - mp) / n;
    }
    return 2 * c / (vy + vp + (my - mp) * (my - mp));
}

}  // namespace

TEST(Ccc, SmallHandComputedCase) {
    const std::vector<double> y{1, 2, 3}, p{2, 3, 4};
    EXPECT_NEAR(ccc(y, p), 4.0 / 7.0, 1e-12);
}

TEST(Ccc, IdentityAndConstant) {
    const auto y = random_vector(100, 4);
    EXPECT_NEAR(ccc(y, y), 1.0, 1e-15);
    EXPECT_EQ(ccc(y, std::vector<double>(100, 0.3)), 0.0);
    // constant on both sides: guard keeps the value finite
    EXPECT_EQ(ccc(std::vector<double>(5, 2.0), std::vector<double>(5, 2.0)), 0.0);
}

TEST(Ccc, MeanShiftPenalty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto y = random_vector(64, 100 + trial, -2.0, 2.0);
        const double shift = d(rng);
        std::vector<double> p(y);
        for (double& v : p) v += shift;
        double mu = 0;
        for (double v : y) mu += v / 64.0;
        double var = 0;
        for (double v : y) var += (v - mu) * (v - mu) / 64.0;
        EXPECT_NEAR(ccc(y, p), 2 * var / (2 * var + shift * shift), 1e-12);
        EXPECT_NEAR(ccc(y, p), naive_ccc(y, p), 1e-12);
    }
}

TEST(Ccc, SymmetricAndBounded) {
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = random_vector(40, trial);
        const auto p = random_vector(40, trial + 50, -3.0, 1.0);
        const double a = ccc(y, p);
        EXPECT_NEAR(a, ccc(p, y), 1e-14);
        EXPECT_LE(std::abs(a), std::abs(pearson(y, p)) + 1e-14);
        EXPECT_NEAR(a, naive_ccc(y, p), 1e-12);
    }
}

TEST(Ccc, GradientMatchesCentralDifferences) {
    for (int trial = 0; trial < 12; ++trial) {
        const auto y = random_vector(32, 200 + trial);
        auto p = random_vector(32, 300 + trial, -0.5, 1.5);
        const auto g = ccc_grad(y, p);
        std::vector<double> fd(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double keep = p[i];
            p[i] = keep + 1e-6;
            const double up = ccc(y, p);
            p[i] = keep - 1e-6;
            const double down = ccc(y, p);
            p[i] = keep;
            fd[i] = (up - down) / 2e-6;
        }
        EXPECT_LE(testing_support::rel_l2(g, fd), 1e-5) << "trial " << trial;
    }
}

TEST(Ccc, GradientIsZeroAtPerfectPrediction) {
    const auto y = random_vector(20, 9);
    for (double g : ccc_grad(y, y)) EXPECT_NEAR(g, 0.0, 1e-14);
}

TEST(Ccc, RejectsBadInput) {
    EXPECT_THROW(ccc(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), ShapeMismatch);
    EXPECT_THROW(ccc(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
    EXPECT_THROW(ccc(SampledSignal({1, 2}, 25.0), SampledSignal({1, 2, 3}, 25.0)), ShapeMismatch);
}

TEST(MaskedCcc, SelectsSubset) {
    const auto y = random_vector(30, 1);
    const auto p = random_vector(30, 2);
    std::vector<bool> mask(30, false);
    std::vector<double> ys, ps;
    for (std::size_t i = 0; i < 30; i += 3) {
        mask[i] = true;
        ys.push_back(y[i]);
        ps.push_back(p[i]);
    }
    EXPECT_NEAR(masked_ccc(y, p, mask), ccc(ys, ps), 1e-14);
    EXPECT_NEAR(masked_ccc(y, p, std::vector<bool>(30, true)), ccc(y, p), 1e-14);
    std::vector<bool> one(30, false);
    one[4] = true;
    EXPECT_THROW(masked_ccc(y, p, one), InvalidArgument);
    EXPECT_THROW(masked_ccc(y, p, std::vector<bool>(29, true)), ShapeMismatch);
}

TEST(Rmse, KnownValue) {
    EXPECT_NEAR(rmse(std::vector<double>{0, 0, 0, 0}, std::vector<double>{1, -1, 1, -1}), 1.0, 1e-15);
    EXPECT_NEAR(rmse(std::vector<double>{1, 2}, std::vector<double>{1, 4}), std::sqrt(2.0), 1e-15);
}

TEST(ConcatEval, UsesConcatenationNotMeanOfRecordings) {
    const std::vector<SampledSignal> y{SampledSignal({1, 2, 3}, 1.0), SampledSignal({10, 11, 13, 12}, 1.0)};
    const std::vector<SampledSignal> p{SampledSignal({1.5, 2, 2}, 1.0), SampledSignal({9, 12, 12, 14}, 1.0)};
    const std::vector<double> ya{1, 2, 3, 10, 11, 13, 12};
    const std::vector<double> pa{1.5, 2, 2, 9, 12, 12, 14};
    const auto m = concat_eval(y, p);
    EXPECT_NEAR(m.ccc, naive_ccc(ya, pa), 1e-12);
    EXPECT_NEAR(m.rmse, rmse(ya, pa), 1e-12);
    const double mean_of_recs = 0.5 * (ccc(y[0], p[0]) + ccc(y[1], p[1]));
    EXPECT_GT(std::abs(m.ccc - mean_of_recs), 1e-3);
}
