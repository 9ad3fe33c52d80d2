#include "mds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mds/error.hpp"

namespace mds {

namespace {

void check_pair(std::size_t ny, std::size_t nyhat, std::size_t min_len, const char* who) {
    if (ny != nyhat) {
        throw ShapeMismatch(std::string(who) + ": length mismatch (" + std::to_string(ny) +
                            " vs " + std::to_string(nyhat) + ")");
    }
    if (ny < min_len) {
        throw InvalidArgument(std::string(who) + ": need at least " + std::to_string(min_len) +
                              " samples");
    }
}

// Exact for constant input, so a constant side has exactly zero deviations.
double mean(std::span<const double> v) {
    double s = 0.0;
    bool constant = true;
    for (double x : v) {
        s += x;
        constant = constant && x == v.front();
    }
    return constant ? v.front() : s / static_cast<double>(v.size());
}

}  // namespace

double CccStats::denominator() const noexcept {
    const double gap = mu_y - mu_yhat;
    return std::max(var_y + var_yhat + gap * gap, kCccGuard);
}

double CccStats::value() const noexcept { return 2.0 * cov / denominator(); }

CccStats ccc_stats(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y.size(), yhat.size(), 2, "ccc");
    CccStats s;
    s.mu_y = mean(y);
    s.mu_yhat = mean(yhat);
    double vy = 0.0;
    double vh = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dy = y[i] - s.mu_y;
        const double dh = yhat[i] - s.mu_yhat;
        vy += dy * dy;
        vh += dh * dh;
        c += dy * dh;
    }
    const auto n = static_cast<double>(y.size());
    s.var_y = vy / n;
    s.var_yhat = vh / n;
    s.cov = c / n;
    return s;
}

double ccc(std::span<const double> y, std::span<const double> yhat) {
    return ccc_stats(y, yhat).value();
}

double ccc(const SampledSignal& y, const SampledSignal& yhat) { return ccc(y.values(), yhat.values()); }

std::vector<double> ccc_grad(std::span<const double> y, std::span<const double> yhat) {
    const CccStats s = ccc_stats(y, yhat);
    const auto n = static_cast<double>(y.size());
    const double gap = s.mu_y - s.mu_yhat;
    const double raw_den = s.var_y + s.var_yhat + gap * gap;
    const bool guarded = raw_den < kCccGuard;
    const double den = s.denominator();

    // d cov / d yhat_i = (y_i - mu_y) / N
    // d den / d yhat_i = 2 (yhat_i - mu_y) / N   (zero while the guard is active)
    std::vector<double> g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dcov = (y[i] - s.mu_y) / n;
        double v = 2.0 * dcov / den;
        if (!guarded) {
            const double dden = 2.0 * (yhat[i] - s.mu_y) / n;
            v -= 2.0 * s.cov * dden / (den * den);
        }
        g[i] = v;
    }
    return g;
}

std::vector<double> ccc_grad(const SampledSignal& y, const SampledSignal& yhat) {
    return ccc_grad(y.values(), yhat.values());
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y.size(), yhat.size(), 1, "rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double rmse(const SampledSignal& y, const SampledSignal& yhat) { return rmse(y.values(), yhat.values()); }

double masked_ccc(std::span<const double> y, std::span<const double> yhat,
                  const std::vector<bool>& mask) {
    check_pair(y.size(), yhat.size(), 1, "masked_ccc");
    if (mask.size() != y.size()) {
        throw ShapeMismatch("masked_ccc: mask length differs from signal length");
    }
    std::vector<double> ys;
    std::vector<double> hs;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (mask[i]) {
            ys.push_back(y[i]);
            hs.push_back(yhat[i]);
        }
    }
    if (ys.size() < 2) {
        throw InvalidArgument("masked_ccc: mask selects fewer than two samples");
    }
    return ccc(ys, hs);
}

EvalMetrics concat_eval(std::span<const SampledSignal> y, std::span<const SampledSignal> yhat) {
    if (y.size() != yhat.size()) {
        throw ShapeMismatch("concat_eval: recording count mismatch");
    }
    if (y.empty()) {
        throw InvalidArgument("concat_eval: no recordings");
    }
    std::vector<double> ys;
    std::vector<double> hs;
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (y[r].size() != yhat[r].size()) {
            throw ShapeMismatch("concat_eval: recording " + std::to_string(r) + " length mismatch");
        }
        ys.insert(ys.end(), y[r].vec().begin(), y[r].vec().end());
        hs.insert(hs.end(), yhat[r].vec().begin(), yhat[r].vec().end());
    }
    return {ccc(ys, hs), rmse(ys, hs)};
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
    const CccStats s = ccc_stats(y, yhat);
    if (s.var_y <= 0.0 || s.var_yhat <= 0.0) {
        return 0.0;
    }
    return s.cov / std::sqrt(s.var_y * s.var_yhat);
}

}  // namespace mds
