#pragma once

#include <span>
#include <utility>
#include <vector>

namespace powmfg {

struct FitResult {
    std::vector<double> coefficients;
    std::vector<double> confidence_halfwidths;  // 95% bounds, per coefficient
    double residual_norm = 0.0;
};

using DataPoint = std::pair<double, double>;

// Power law y = a * x^b via linear least squares on (log x, log y).
// Coefficients come back as {a, b}. Requires two samples with distinct
// positive x and positive y.
FitResult fit_power_law(std::span<const DataPoint> samples);

// Log revenue y = t1 * log(x + t2) + t3 via Gauss-Newton, seeded by a grid
// search over t2 with the linear pair (t1, t3) solved exactly at each
// candidate. Coefficients are {t1, t2, t3}; residual_norm is in data space.
FitResult fit_log_revenue(std::span<const DataPoint> samples);

// Exponential y = exp(intercept + rate * x) via linear least squares on
// log y. Coefficients are {rate, intercept}; residual_norm is in log space.
FitResult fit_exponential(std::span<const DataPoint> samples);

}  // namespace powmfg
