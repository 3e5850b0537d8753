#include "powmfg/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "powmfg/errors.hpp"

namespace powmfg {

namespace {

// Upper 97.5% Student-t quantile via the Cornish-Fisher expansion around the
// normal quantile. Adequate for confidence reporting; not a full inverse-CDF.
double t_quantile_975(int df) {
    if (df <= 0) return std::numeric_limits<double>::infinity();
    const double z = 1.959963984540054;
    const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z;
    const double nu = static_cast<double>(df);
    return z + (z3 + z) / (4.0 * nu) +
           (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu) +
           (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * nu * nu * nu);
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_halfwidth = 0.0;
    double slope_halfwidth = 0.0;
    double residual_norm = 0.0;
};

// Least squares for y = intercept + slope * x with 95% halfwidths.
LinearFit linear_least_squares(const std::vector<double>& x,
                               const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = static_cast<double>(n) * sxx - sx * sx;
    const double scale = static_cast<double>(n) * sxx + sx * sx;
    if (!(det > 1e-14 * std::max(1.0, scale))) {
        throw FitError("fit: regressors are rank deficient");
    }
    LinearFit f;
    f.slope = (static_cast<double>(n) * sxy - sx * sy) / det;
    f.intercept = (sy * sxx - sx * sxy) / det;
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += r * r;
    }
    f.residual_norm = std::sqrt(ssr);
    const int df = static_cast<int>(n) - 2;
    if (df > 0 && ssr > 0.0) {
        const double s2 = ssr / df;
        const double tq = t_quantile_975(df);
        f.slope_halfwidth = tq * std::sqrt(s2 * static_cast<double>(n) / det);
        f.intercept_halfwidth = tq * std::sqrt(s2 * sxx / det);
    }
    return f;
}

// In-place Gaussian elimination with partial pivoting for an n x n system.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        }
        if (std::fabs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * b[c];
        b[r] = acc / a[r * n + r];
    }
    return true;
}

double log_revenue_ssr(std::span<const DataPoint> s, const std::array<double, 3>& c) {
    double ssr = 0;
    for (const auto& [x, y] : s) {
        const double r = y - (c[0] * std::log(x + c[1]) + c[2]);
        ssr += r * r;
    }
    return ssr;
}

void require_samples(std::span<const DataPoint> s, bool positive_x,
                     bool positive_y) {
    if (s.size() < 2) {
        throw FitError("fit: need at least two samples");
    }
    for (const auto& [x, y] : s) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw FitError("fit: samples must be finite");
        }
        if (positive_x && !(x > 0.0)) throw FitError("fit: abscissae must be positive");
        if (positive_y && !(y > 0.0)) throw FitError("fit: ordinates must be positive");
    }
}

}  // namespace

FitResult fit_power_law(std::span<const DataPoint> samples) {
    require_samples(samples, true, true);
    std::vector<double> lx, ly;
    lx.reserve(samples.size());
    ly.reserve(samples.size());
    for (const auto& [x, y] : samples) {
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
    }
    const LinearFit f = linear_least_squares(lx, ly);
    FitResult out;
    const double a = std::exp(f.intercept);
    out.coefficients = {a, f.slope};
    // Halfwidth of a = exp(intercept) by the delta method.
    out.confidence_halfwidths = {a * f.intercept_halfwidth, f.slope_halfwidth};
    out.residual_norm = f.residual_norm;
    return out;
}

FitResult fit_exponential(std::span<const DataPoint> samples) {
    require_samples(samples, false, true);
    std::vector<double> x, ly;
    x.reserve(samples.size());
    ly.reserve(samples.size());
    for (const auto& [t, y] : samples) {
        x.push_back(t);
        ly.push_back(std::log(y));
    }
    const LinearFit f = linear_least_squares(x, ly);
    FitResult out;
    out.coefficients = {f.slope, f.intercept};
    out.confidence_halfwidths = {f.slope_halfwidth, f.intercept_halfwidth};
    out.residual_norm = f.residual_norm;
    return out;
}

FitResult fit_log_revenue(std::span<const DataPoint> samples) {
    require_samples(samples, false, false);
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = 0.0;
    for (const auto& [x, y] : samples) {
        if (x < 0.0) throw FitError("fit: hashrates must be nonnegative");
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
    }
    if (!(x_max > x_min)) {
        throw FitError("fit: regressors are rank deficient");
    }
    const double t2_floor = 1e-15 * std::max(1.0, x_max);

    // Seed: scan t2 over a wide log grid, solving the linear (t1, t3) pair
    // exactly at each candidate.
    std::array<double, 3> best{0.0, std::max(1.0, x_max), 0.0};
    double best_ssr = std::numeric_limits<double>::infinity();
    const double lo = std::log10(std::max(t2_floor, x_max * 1e-12));
    const double hi = std::log10(x_max * 1e2 + 10.0);
    for (int k = 0; k <= 60; ++k) {
        const double t2 = std::pow(10.0, lo + (hi - lo) * k / 60.0);
        std::vector<double> reg, ord;
        reg.reserve(samples.size());
        ord.reserve(samples.size());
        for (const auto& [x, y] : samples) {
            reg.push_back(std::log(x + t2));
            ord.push_back(y);
        }
        try {
            const LinearFit f = linear_least_squares(reg, ord);
            const std::array<double, 3> cand{f.slope, t2, f.intercept};
            const double ssr = log_revenue_ssr(samples, cand);
            if (ssr < best_ssr) {
                best_ssr = ssr;
                best = cand;
            }
        } catch (const FitError&) {
            // log(x + t2) collapsed to a constant at this candidate; skip it.
        }
    }
    if (!std::isfinite(best_ssr)) {
        throw FitError("fit: no usable starting point for the nonlinear solve");
    }

    // Gauss-Newton with a Levenberg fallback when the normal matrix turns
    // singular (e.g. t1 ~ 0 kills the t2 column).
    std::array<double, 3> c = best;
    double ssr = best_ssr;
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> jtj(9, 0.0), jtr(3, 0.0);
        for (const auto& [x, y] : samples) {
            const double arg = x + c[1];
            const double ji0 = std::log(arg);
            const double ji1 = c[0] / arg;
            const double r = y - (c[0] * ji0 + c[2]);
            const double j[3] = {ji0, ji1, 1.0};
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) jtj[a * 3 + b] += j[a] * j[b];
                jtr[a] += j[a] * r;
            }
        }
        double trace = jtj[0] + jtj[4] + jtj[8];
        double mu = 0.0;
        std::vector<double> a_work, b_work;
        bool solved = false;
        for (int attempt = 0; attempt < 12 && !solved; ++attempt) {
            a_work = jtj;
            b_work = jtr;
            for (int d = 0; d < 3; ++d) a_work[d * 3 + d] += mu;
            solved = solve_dense(a_work, b_work, 3);
            mu = (mu == 0.0) ? 1e-10 * std::max(trace, 1.0) : mu * 100.0;
        }
        if (!solved) break;

        double scale = 1.0;
        bool improved = false;
        for (int half = 0; half < 25; ++half) {
            std::array<double, 3> next{c[0] + scale * b_work[0],
                                       std::max(c[1] + scale * b_work[1], t2_floor),
                                       c[2] + scale * b_work[2]};
            const double next_ssr = log_revenue_ssr(samples, next);
            if (next_ssr <= ssr) {
                const double gain = ssr - next_ssr;
                c = next;
                ssr = next_ssr;
                improved = gain > 1e-14 * (1.0 + ssr);
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;
    }

    FitResult out;
    out.coefficients = {c[0], c[1], c[2]};
    out.residual_norm = std::sqrt(ssr);
    out.confidence_halfwidths = {0.0, 0.0, 0.0};
    const int df = static_cast<int>(samples.size()) - 3;
    if (df > 0 && ssr > 0.0) {
        // Covariance from the (possibly damped) normal matrix at the optimum.
        std::vector<double> jtj(9, 0.0);
        for (const auto& [x, y] : samples) {
            const double arg = x + c[1];
            const double j[3] = {std::log(arg), c[0] / arg, 1.0};
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) jtj[a * 3 + b] += j[a] * j[b];
        }
        const double s2 = ssr / df;
        const double tq = t_quantile_975(df);
        for (int d = 0; d < 3; ++d) {
            std::vector<double> a_work = jtj, e(3, 0.0);
            e[d] = 1.0;
            if (solve_dense(a_work, e, 3) && e[d] > 0.0) {
                out.confidence_halfwidths[d] = tq * std::sqrt(s2 * e[d]);
            } else {
                out.confidence_halfwidths[d] =
                    std::numeric_limits<double>::infinity();
            }
        }
    }
    return out;
}

}  // namespace powmfg
