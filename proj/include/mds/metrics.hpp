#pragma once

#include <span>
#include <vector>

#include "mds/signal.hpp"

namespace mds {

/// Floor applied to the CCC denominator in both the value and its gradient.
inline constexpr double kCccGuard = 1e-8;

/// Population moments entering the concordance correlation coefficient.
struct CccStats {
    double mu_y = 0.0;
    double mu_yhat = 0.0;
    double var_y = 0.0;
    double var_yhat = 0.0;
    double cov = 0.0;

    double denominator() const noexcept;
    double value() const noexcept;
};

CccStats ccc_stats(std::span<const double> y, std::span<const double> yhat);

/// Concordance correlation coefficient with population (divide-by-N) moments.
///
///     2 cov / max(var_y + var_yhat + (mu_y - mu_yhat)^2, kCccGuard)
///
/// Throws ShapeMismatch for unequal lengths and InvalidArgument for fewer than two samples.
double ccc(std::span<const double> y, std::span<const double> yhat);
double ccc(const SampledSignal& y, const SampledSignal& yhat);

/// dCCC/dyhat[i]. The guard is treated as a constant whenever it is active.
std::vector<double> ccc_grad(std::span<const double> y, std::span<const double> yhat);
std::vector<double> ccc_grad(const SampledSignal& y, const SampledSignal& yhat);

double rmse(std::span<const double> y, std::span<const double> yhat);
double rmse(const SampledSignal& y, const SampledSignal& yhat);

/// CCC over the indices where mask is true. Needs at least two selected samples.
double masked_ccc(std::span<const double> y, std::span<const double> yhat,
                  const std::vector<bool>& mask);

struct EvalMetrics {
    double ccc = 0.0;
    double rmse = 0.0;
};

/// Metrics on the concatenation of all recordings (not the mean of per-recording values).
EvalMetrics concat_eval(std::span<const SampledSignal> y, std::span<const SampledSignal> yhat);

/// Pearson correlation, population moments. Returns 0 when either side is constant.
double pearson(std::span<const double> y, std::span<const double> yhat);

}  // namespace mds
