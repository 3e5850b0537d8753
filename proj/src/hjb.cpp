#include "powmfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powmfg/errors.hpp"

namespace powmfg {

void HjbParams::validate() const {
    market.validate();
    if (!(h_total > 0.0)) throw std::domain_error("hjb: total hashrate must be positive");
    if (!(lambda >= 0.0)) throw std::domain_error("hjb: arrival rate must be nonnegative");
    if (!(k_reward >= 0.0)) throw std::domain_error("hjb: block reward must be nonnegative");
    if (!(b_hat >= 0.0)) throw std::domain_error("hjb: price anchor must be nonnegative");
    if (!(dt > 0.0)) throw std::domain_error("hjb: dt must be positive");
    if (!(tol > 0.0)) throw std::domain_error("hjb: tol must be positive");
}

namespace {

// Forward difference in wealth with a zero-slope top boundary; this is the
// derivative entering the first-order condition.
inline double dvdx_forward(const ScalarField& v, int i, int j) {
    const Grid2D& g = v.grid();
    if (i >= g.nx - 1) return 0.0;
    return (v(i + 1, j) - v(i, j)) / g.dx;
}

inline double jump_value(const ScalarField& v, const WealthSplit& w, int j) {
    double acc = 0.0;
    for (int n = 0; n < w.count; ++n) acc += w.weight[n] * v(w.index[n], j);
    return acc;
}

std::vector<WealthSplit> destination_table(const Grid2D& g, double k) {
    std::vector<WealthSplit> table(g.cells());
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            table[static_cast<std::size_t>(i) * g.ny + j] =
                jump_destination_index(i, j, k, g);
        }
    }
    return table;
}


ControlField control_with_table(const ScalarField& v, const HjbParams& p,
                                const std::vector<WealthSplit>& dest) {
    const Grid2D& g = v.grid();
    const MarketParams& m = p.market;
    const double rate = p.lambda / p.h_total;

    ControlField out{ScalarField(g), {}};
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const WealthSplit& w = dest[static_cast<std::size_t>(i) * g.ny + j];
            const double jump_loss = v(i, j) - jump_value(v, w, j);
            const double denom =
                m.unit_cost * (1.0 + dvdx_forward(v, i, j)) + rate * jump_loss;
            if (!(denom > 0.0)) {
                out.denominator_violations.push_back({i, j});
                continue;
            }
            out.alpha(i, j) = std::max(0.0, m.theta1 / denom - m.theta2);
        }
    }
    return out;
}

}  // namespace

ControlField optimal_control(const ScalarField& v, const HjbParams& p) {
    p.validate();
    return control_with_table(v, p, destination_table(v.grid(), p.k_reward));
}

ScalarField apply_generator(const ScalarField& v, const ScalarField& alpha,
                            const HjbParams& p) {
    p.validate();
    const Grid2D& g = v.grid();
    const MarketParams& m = p.market;
    const double rate = p.lambda / p.h_total;
    const double diff = 0.5 * m.sigma * m.sigma / (g.db * g.db);
    const auto dest = destination_table(g, p.k_reward);

    ScalarField out(g);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double a = m.discount * g.x(i) - m.unit_cost * alpha(i, j);
            double acc = 0.0;
            if (a > 0.0 && i < g.nx - 1) {
                acc += a * (v(i + 1, j) - v(i, j)) / g.dx;
            } else if (a < 0.0 && i > 0) {
                acc += a * (v(i, j) - v(i - 1, j)) / g.dx;
            }
            const double gdrift = p.b_hat - g.b(j);
            if (gdrift > 0.0 && j < g.ny - 1) {
                acc += gdrift * (v(i, j + 1) - v(i, j)) / g.db;
            } else if (gdrift < 0.0 && j > 0) {
                acc += gdrift * (v(i, j) - v(i, j - 1)) / g.db;
            }
            if (j > 0) acc += diff * (v(i, j - 1) - v(i, j));
            if (j < g.ny - 1) acc += diff * (v(i, j + 1) - v(i, j));
            const double s = rate * alpha(i, j);
            if (s > 0.0) {
                const WealthSplit& w =
                    dest[static_cast<std::size_t>(i) * g.ny + j];
                acc += s * (jump_value(v, w, j) - v(i, j));
            }
            out(i, j) = acc;
        }
    }
    return out;
}

namespace {

// Backward step of size dt with the control frozen from v_next. Shared by
// the transient step and the stationary iteration.
ScalarField backward_step_frozen(const ScalarField& v_next,
                                 const ScalarField& alpha, const HjbParams& p,
                                 double dt, const std::vector<WealthSplit>& dest) {
    const Grid2D& g = v_next.grid();
    const MarketParams& m = p.market;
    const double rate = p.lambda / p.h_total;
    const double diff = 0.5 * m.sigma * m.sigma / (g.db * g.db);

    ScalarField v(g);
    std::vector<double> lower(g.ny), diag(g.ny), upper(g.ny), rhs(g.ny);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double a_ij = m.discount * g.x(i) - m.unit_cost * alpha(i, j);
            double expl = utility(alpha(i, j), m) + v_next(i, j) / dt;
            if (a_ij > 0.0 && i < g.nx - 1) {
                expl += a_ij * (v_next(i + 1, j) - v_next(i, j)) / g.dx;
            } else if (a_ij < 0.0 && i > 0) {
                expl += a_ij * (v_next(i, j) - v_next(i - 1, j)) / g.dx;
            }
            const double s = rate * alpha(i, j);
            if (s > 0.0) {
                const WealthSplit& w =
                    dest[static_cast<std::size_t>(i) * g.ny + j];
                expl += s * (jump_value(v_next, w, j) - v_next(i, j));
            }
            rhs[j] = expl;

            const double gdrift = p.b_hat - g.b(j);
            const double up =
                (j < g.ny - 1) ? std::max(gdrift, 0.0) / g.db + diff : 0.0;
            const double lo =
                (j > 0) ? std::max(-gdrift, 0.0) / g.db + diff : 0.0;
            upper[j] = -up;
            lower[j] = -lo;
            diag[j] = m.discount + 1.0 / dt + up + lo;
        }
        // Thomas sweep over the price line.
        for (int j = 1; j < g.ny; ++j) {
            const double w = lower[j] / diag[j - 1];
            diag[j] -= w * upper[j - 1];
            rhs[j] -= w * rhs[j - 1];
        }
        rhs[g.ny - 1] /= diag[g.ny - 1];
        for (int j = g.ny - 2; j >= 0; --j) {
            rhs[j] = (rhs[j] - upper[j] * rhs[j + 1]) / diag[j];
        }
        for (int j = 0; j < g.ny; ++j) v(i, j) = rhs[j];
    }

    for (double x : v.data()) {
        if (!std::isfinite(x)) {
            throw SolverError("hjb: backward step produced a non-finite value");
        }
    }
    return v;
}

// Stability bound of the explicit (wealth drift + jump) part.
double explicit_rate_bound(const ScalarField& alpha, const HjbParams& p) {
    const Grid2D& g = alpha.grid();
    const MarketParams& m = p.market;
    const double rate = p.lambda / p.h_total;
    double worst = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double a = m.discount * g.x(i) - m.unit_cost * alpha(i, j);
            worst = std::max(worst, std::fabs(a) / g.dx + rate * alpha(i, j));
        }
    }
    return worst;
}

}  // namespace

HjbStepResult hjb_backward_step(const ScalarField& v_next, const HjbParams& p) {
    p.validate();
    const auto dest = destination_table(v_next.grid(), p.k_reward);
    ControlField frozen = control_with_table(v_next, p, dest);
    ScalarField v = backward_step_frozen(v_next, frozen.alpha, p, p.dt, dest);
    ControlField refreshed = control_with_table(v, p, dest);
    return {std::move(v), std::move(refreshed.alpha),
            std::move(refreshed.denominator_violations)};
}

StationaryHjbResult solve_stationary_hjb(const Grid2D& g, const HjbParams& p,
                                         const ScalarField* v0) {
    p.validate();
    g.validate();
    ScalarField v = v0 ? *v0 : ScalarField(g);

    const auto dest = destination_table(g, p.k_reward);
    StationaryHjbResult out{v, ScalarField(v.grid()), 0, {}, {}};
    for (int iter = 0; iter < p.max_iter; ++iter) {
        ControlField control = control_with_table(v, p, dest);
        const double bound = explicit_rate_bound(control.alpha, p);
        const double dt = bound > 0.0 ? std::min(p.dt, 0.9 / bound) : p.dt;
        ScalarField v_new = backward_step_frozen(v, control.alpha, p, dt, dest);
        const double change = max_abs_diff(v_new, v);
        out.residuals.push_back(change);
        v = std::move(v_new);
        if (change < p.tol) {
            ControlField final_control = control_with_table(v, p, dest);
            out.v = std::move(v);
            out.alpha = std::move(final_control.alpha);
            out.denominator_violations =
                std::move(final_control.denominator_violations);
            out.iterations = iter + 1;
            return out;
        }
    }
    throw SolverError("hjb: stationary solve did not converge", out.residuals);
}

}  // namespace powmfg
