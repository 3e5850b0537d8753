#include "powmfg/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "powmfg/errors.hpp"

namespace powmfg {

double DensityState::total_mass() const {
    const Grid2D& g = grid();
    double line = 0.0;
    for (double e : eta) line += e;
    return integrate(interior) + line * g.db;
}

void DensityState::validate() const {
    const Grid2D& g = grid();
    for (int j = 0; j < g.ny; ++j) {
        if (interior(0, j) != 0.0) {
            throw std::domain_error("density: interior row 0 must be empty; that mass lives in eta");
        }
        if (eta[j] < 0.0) throw std::domain_error("density: eta must be nonnegative");
    }
    for (double x : interior.data()) {
        if (!(x >= 0.0)) throw std::domain_error("density: interior must be nonnegative");
    }
}

std::vector<double> to_mass_vector(const DensityState& s) {
    const Grid2D& g = s.grid();
    std::vector<double> mass(g.cells(), 0.0);
    for (int j = 0; j < g.ny; ++j) mass[j] = s.eta[j] * g.db;
    const double cell = g.dx * g.db;
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            mass[static_cast<std::size_t>(i) * g.ny + j] = s.interior(i, j) * cell;
        }
    }
    return mass;
}

DensityState state_from_mass_vector(const Grid2D& g,
                                    const std::vector<double>& mass) {
    DensityState s(g);
    for (int j = 0; j < g.ny; ++j) s.eta[j] = mass[j] / g.db;
    const double cell = g.dx * g.db;
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            s.interior(i, j) = mass[static_cast<std::size_t>(i) * g.ny + j] / cell;
        }
    }
    return s;
}

namespace {

struct StepTables {
    std::vector<double> drift;        // r x - c alpha per cell
    std::vector<double> jump_rate;    // (lambda/h) alpha per cell
    std::vector<WealthSplit> dest;    // post-jump wealth split per cell
    std::vector<double> price_drift;  // b_hat - b per column
    double diff = 0.0;                // sigma^2 / (2 db^2)
};

StepTables build_tables(const ScalarField& alpha, const HjbParams& p) {
    const Grid2D& g = alpha.grid();
    const MarketParams& m = p.market;
    const double rate = p.lambda / p.h_total;
    StepTables t;
    t.drift.resize(g.cells());
    t.jump_rate.resize(g.cells());
    t.dest.resize(g.cells());
    t.price_drift.resize(g.ny);
    t.diff = 0.5 * m.sigma * m.sigma / (g.db * g.db);
    for (int j = 0; j < g.ny; ++j) t.price_drift[j] = p.b_hat - g.b(j);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * g.ny + j;
            t.drift[c] = m.discount * g.x(i) - m.unit_cost * alpha(i, j);
            t.jump_rate[c] = rate * alpha(i, j);
            t.dest[c] = jump_destination_index(i, j, p.k_reward, g);
        }
    }
    return t;
}

void wealth_transport(const Grid2D& g, const StepTables& t, double dt,
                      std::vector<double>& mass) {
    const std::vector<double> in = mass;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * g.ny + j;
            const double a = t.drift[c];
            if (a > 0.0 && i < g.nx - 1) {
                const double move = dt * (a / g.dx) * in[c];
                mass[c] -= move;
                mass[c + g.ny] += move;
            } else if (a < 0.0 && i > 0) {
                const double move = dt * (-a / g.dx) * in[c];
                mass[c] -= move;
                mass[c - g.ny] += move;
            }
        }
    }
}

void price_transport_and_diffusion(const Grid2D& g, const StepTables& t,
                                   double dt, std::vector<double>& mass) {
    // Explicit upwind transport toward the anchor.
    const std::vector<double> in = mass;
    for (int i = 0; i < g.nx; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * g.ny;
        for (int j = 0; j < g.ny; ++j) {
            const double gd = t.price_drift[j];
            if (gd > 0.0 && j < g.ny - 1) {
                const double move = dt * (gd / g.db) * in[row + j];
                mass[row + j] -= move;
                mass[row + j + 1] += move;
            } else if (gd < 0.0 && j > 0) {
                const double move = dt * (-gd / g.db) * in[row + j];
                mass[row + j] -= move;
                mass[row + j - 1] += move;
            }
        }
    }
    if (t.diff == 0.0) return;

    // Implicit diffusion along each price line (reflecting ends).
    const double w = dt * t.diff;
    std::vector<double> diag(g.ny), rhs(g.ny);
    for (int i = 0; i < g.nx; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * g.ny;
        for (int j = 0; j < g.ny; ++j) {
            const int links = (j > 0 ? 1 : 0) + (j < g.ny - 1 ? 1 : 0);
            diag[j] = 1.0 + w * links;
            rhs[j] = mass[row + j];
        }
        for (int j = 1; j < g.ny; ++j) {
            const double f = -w / diag[j - 1];
            diag[j] -= f * -w;
            rhs[j] -= f * rhs[j - 1];
        }
        rhs[g.ny - 1] /= diag[g.ny - 1];
        for (int j = g.ny - 2; j >= 0; --j) {
            rhs[j] = (rhs[j] + w * rhs[j + 1]) / diag[j];
        }
        for (int j = 0; j < g.ny; ++j) mass[row + j] = rhs[j];
    }
}

void jump_transfer(const Grid2D& g, const StepTables& t, double dt,
                   std::vector<double>& mass) {
    const std::vector<double> in = mass;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * g.ny + j;
            const double s = t.jump_rate[c];
            if (s <= 0.0) continue;
            const double move = dt * s * in[c];
            mass[c] -= move;
            const WealthSplit& w = t.dest[c];
            for (int n = 0; n < w.count; ++n) {
                mass[static_cast<std::size_t>(w.index[n]) * g.ny + j] +=
                    move * w.weight[n];
            }
        }
    }
}

double rate_bound(const Grid2D& g, const StepTables& t) {
    double wealth = 0.0, jump = 0.0;
    for (std::size_t c = 0; c < t.drift.size(); ++c) {
        wealth = std::max(wealth, std::fabs(t.drift[c]) / g.dx);
        jump = std::max(jump, t.jump_rate[c]);
    }
    double price = 0.0;
    for (double gd : t.price_drift) price = std::max(price, std::fabs(gd) / g.db);
    return wealth + price + jump;
}

// Step-rate bound over occupied cells only. Positivity of the explicit
// sweeps concerns cells that actually carry mass; empty rows far from the
// price anchor would otherwise force absurdly small steps. The implicit
// diffusion is unconditionally stable but still counts here: the operator
// splitting has to resolve the fastest occupied process or one oversized
// step smears the profile.
double active_rate_bound(const Grid2D& g, const StepTables& t,
                         const std::vector<double>& mass) {
    double bound = 0.0;
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * g.ny + j;
            if (mass[c] == 0.0) continue;
            double rate = t.jump_rate[c] + 2.0 * t.diff;
            const double a = t.drift[c];
            if ((a > 0.0 && i < g.nx - 1) || (a < 0.0 && i > 0)) {
                rate += std::fabs(a) / g.dx;
            }
            const double gd = t.price_drift[j];
            if ((gd > 0.0 && j < g.ny - 1) || (gd < 0.0 && j > 0)) {
                rate += std::fabs(gd) / g.db;
            }
            bound = std::max(bound, rate);
        }
    }
    return bound;
}

void step_mass(const Grid2D& g, const StepTables& t, double dt,
               std::vector<double>& mass) {
    wealth_transport(g, t, dt, mass);
    price_transport_and_diffusion(g, t, dt, mass);
    jump_transfer(g, t, dt, mass);
}

// Zero out dust far below any tested tolerance, donating it to the largest
// cell so the total is untouched. Without this, the implicit diffusion
// seeds every price row with ~1e-34 mass and those rows pin the occupied
// stability bound forever.
void flush_dust(std::vector<double>& mass) {
    double total = 0.0;
    std::size_t biggest = 0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        total += mass[c];
        if (mass[c] > mass[biggest]) biggest = c;
    }
    const double threshold = 1e-30 * total;
    if (!(threshold > 0.0)) return;
    double dust = 0.0;
    for (double& m : mass) {
        if (m != 0.0 && m < threshold) {
            dust += m;
            m = 0.0;
        }
    }
    mass[biggest] += dust;
}

}  // namespace

std::vector<double> apply_adjoint_generator(const std::vector<double>& mass,
                                            const ScalarField& alpha,
                                            const HjbParams& p) {
    p.validate();
    const Grid2D& g = alpha.grid();
    const StepTables t = build_tables(alpha, p);
    std::vector<double> out(mass.size(), 0.0);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * g.ny + j;
            const double m_c = mass[c];
            const double a = t.drift[c];
            if (a > 0.0 && i < g.nx - 1) {
                const double f = (a / g.dx) * m_c;
                out[c] -= f;
                out[c + g.ny] += f;
            } else if (a < 0.0 && i > 0) {
                const double f = (-a / g.dx) * m_c;
                out[c] -= f;
                out[c - g.ny] += f;
            }
            const double gd = t.price_drift[j];
            if (gd > 0.0 && j < g.ny - 1) {
                const double f = (gd / g.db) * m_c;
                out[c] -= f;
                out[c + 1] += f;
            } else if (gd < 0.0 && j > 0) {
                const double f = (-gd / g.db) * m_c;
                out[c] -= f;
                out[c - 1] += f;
            }
            if (j > 0) {
                const double f = t.diff * m_c;
                out[c] -= f;
                out[c - 1] += f;
            }
            if (j < g.ny - 1) {
                const double f = t.diff * m_c;
                out[c] -= f;
                out[c + 1] += f;
            }
            const double s = t.jump_rate[c];
            if (s > 0.0) {
                out[c] -= s * m_c;
                const WealthSplit& w = t.dest[c];
                for (int n = 0; n < w.count; ++n) {
                    out[static_cast<std::size_t>(w.index[n]) * g.ny + j] +=
                        s * w.weight[n] * m_c;
                }
            }
        }
    }
    return out;
}

double fp_max_stable_dt(const ScalarField& alpha, const HjbParams& p) {
    p.validate();
    const StepTables t = build_tables(alpha, p);
    const double bound = rate_bound(alpha.grid(), t);
    return bound > 0.0 ? 0.9 / bound : std::numeric_limits<double>::infinity();
}

DensityState fp_forward_step(const DensityState& state,
                             const ScalarField& alpha, const HjbParams& p) {
    p.validate();
    const Grid2D& g = state.grid();
    if (!(alpha.grid() == g)) {
        throw std::invalid_argument("fp: control and density grids differ");
    }
    const StepTables t = build_tables(alpha, p);
    const double bound = rate_bound(g, t);
    if (bound > 0.0 && p.dt * bound > 1.0) {
        throw CflError("fp: step size exceeds the transport stability bound",
                       p.dt, 1.0 / bound);
    }
    std::vector<double> mass = to_mass_vector(state);
    step_mass(g, t, p.dt, mass);
    return state_from_mass_vector(g, mass);
}

DensityState fp_evolve(const DensityState& state, const ScalarField& alpha,
                       const HjbParams& p, double duration) {
    p.validate();
    if (!(duration > 0.0)) return state;
    const Grid2D& g = state.grid();
    const StepTables t = build_tables(alpha, p);
    std::vector<double> mass = to_mass_vector(state);
    double remaining = duration;
    for (long sub = 0; remaining > 0.0; ++sub) {
        if (sub >= 5'000'000) {
            throw SolverError(
                "fp: step subdivision exploded; transport or jump rates are "
                "far out of scale for this grid");
        }
        const double bound = active_rate_bound(g, t, mass);
        const double dt =
            bound > 0.0 ? std::min(remaining, 0.9 / bound) : remaining;
        step_mass(g, t, dt, mass);
        flush_dust(mass);
        remaining -= dt;
    }
    return state_from_mass_vector(g, mass);
}

StationaryFpResult solve_stationary_fp(const ScalarField& alpha,
                                       const HjbParams& p,
                                       const DensityState* init) {
    p.validate();
    const Grid2D& g = alpha.grid();
    DensityState state(g);
    if (init) {
        state = *init;
    } else {
        const double fill = 1.0 / ((g.nx - 1) * g.dx * g.ny * g.db);
        for (int i = 1; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) state.interior(i, j) = fill;
        }
    }

    const StepTables t = build_tables(alpha, p);

    StationaryFpResult out{state, 0, {}, 1.0, 1.0};
    std::vector<double> mass = to_mass_vector(state);
    std::vector<double> prev(mass.size());
    for (int iter = 0; iter < p.max_iter; ++iter) {
        const double bound = active_rate_bound(g, t, mass);
        const double dt = bound > 0.0 ? std::min(p.dt, 0.9 / bound) : p.dt;
        prev = mass;
        step_mass(g, t, dt, mass);
        flush_dust(mass);
        double total = 0.0;
        for (double m : mass) total += m;
        if (!(total > 0.0)) {
            throw SolverError("fp: stationary iteration lost all mass");
        }
        const double factor = 1.0 / total;
        out.renorm_min = std::min(out.renorm_min, factor);
        out.renorm_max = std::max(out.renorm_max, factor);
        for (double& m : mass) m *= factor;
        double change = 0.0;
        for (std::size_t c = 0; c < mass.size(); ++c) {
            change = std::max(change, std::fabs(mass[c] - prev[c]));
        }
        const double residual = change / dt;
        out.residuals.push_back(residual);
        if (residual < p.tol) {
            out.state = state_from_mass_vector(g, mass);
            out.iterations = iter + 1;
            return out;
        }
    }
    throw SolverError("fp: stationary solve did not converge", out.residuals);
}

std::vector<double> wealth_marginal(const DensityState& s) {
    const Grid2D& g = s.grid();
    std::vector<double> out(static_cast<std::size_t>(g.nx), 0.0);
    double line = 0.0;
    for (double e : s.eta) line += e;
    out[0] = line * g.db;
    for (int i = 1; i < g.nx; ++i) {
        double acc = 0.0;
        for (int j = 0; j < g.ny; ++j) acc += s.interior(i, j);
        out[i] = acc * g.db * g.dx;
    }
    return out;
}

}  // namespace powmfg
