#pragma once

#include <string>
#include <vector>

#include "powmfg/fokker_planck.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/hjb.hpp"
#include "powmfg/market.hpp"
#include "powmfg/protocol.hpp"

namespace powmfg {

enum class IntensityMode {
    asymptotic,  // steady arrival rate, one block per target interval
    segment,     // arrival rate recomputed from realized window hash totals
};

enum class InertiaMode { fixed, adaptive };

struct EquilibriumConfig {
    double horizon = 3328.0;  // fortnights; far enough for the halvings to end
    int n_time_steps = 256;
    double fp_tol = 1e-12;
    double hjb_tol = 1e-6;
    double fixed_point_tol = 1e-6;  // relative change of the mean hashrate
    int max_outer_iter = 200;
    double initial_alpha_bar = 0.0;  // <= 0 selects the protocol seed value
    IntensityMode intensity_mode = IntensityMode::asymptotic;
    InertiaMode inertia_mode = InertiaMode::fixed;
    double inertia_w = 0.5;
    double inertia_w_max = 0.95;  // cap for the adaptive weight
    double alpha_bar_floor = 1.0;
    int thin_every = 16;  // store every k-th time slice
    double stationary_dt = 32.0;

    void validate() const;
};

struct EquilibriumDiagnostics {
    std::vector<double> outer_residuals;
    std::vector<double> inertia_weights;
    int floor_events = 0;
    double renorm_min = 1.0;
    double renorm_max = 1.0;
    int denominator_violations = 0;
    bool residuals_nonincreasing = true;  // over the last three iterations
    bool converged = false;
};

struct SteadyState {
    explicit SteadyState(const Grid2D& g) : v(g), alpha(g), m(g) {}

    ScalarField v;
    ScalarField alpha;
    DensityState m;
    double alpha_bar = 0.0;
    EquilibriumDiagnostics diagnostics;
};

struct EquilibriumSolution {
    explicit EquilibriumSolution(const Grid2D& g)
        : v_inf(g), alpha_inf(g), m_inf(g) {}

    std::vector<double> times;           // n_time_steps + 1 nodes
    std::vector<double> alpha_bar_path;  // per time node
    std::vector<int> stored_steps;
    std::vector<ScalarField> v_slices;
    std::vector<ScalarField> alpha_slices;
    std::vector<DensityState> m_slices;
    ScalarField v_inf;
    ScalarField alpha_inf;
    DensityState m_inf;
    double alpha_bar_inf = 0.0;
    EquilibriumDiagnostics diagnostics;
};

// Population-mean hashrate under a control surface; the boundary measure
// never mines, so only interior mass contributes.
double mean_hashrate(const ScalarField& alpha, const DensityState& state);

// Damped fixed-point update w*old + (1-w)*candidate, w in [0, 1).
double inertia_update(double alpha_bar_old, double alpha_bar_candidate,
                      double w);

// Damping weight from the update direction: RMS-to-sup ratio of the path
// change, capped at w_max. Returns 0 for a zero change.
double adaptive_inertia_weight(const std::vector<double>& old_path,
                               const std::vector<double>& new_path,
                               double w_max);

// Exponential wealth profile concentrated on the zero-price column.
DensityState default_initial_density(const Grid2D& g);

// Designed network seed: the difficulty-one window hash total per node,
// per fortnight.
double initial_alpha_bar_from_protocol(double node_count,
                                       const ProtocolParams& pp);

// Protocol environment along a time grid for a given mean-hashrate path.
struct EnvPoint {
    double t = 0.0;
    double lambda = 0.0;  // blocks per fortnight
    double k_reward = 0.0;
    double supply = 0.0;
    double nodes = 1.0;
    double h_total = 0.0;
    double b_hat = 0.0;
};
std::vector<EnvPoint> build_environment(const EquilibriumConfig& cfg,
                                        const ProtocolParams& pp,
                                        const MarketParams& mp,
                                        const std::vector<double>& times,
                                        const std::vector<double>& alpha_bar);

// Long-run fixed point: alternate the stationary value solve, control
// recovery, stationary density solve, and the damped mean-hashrate update.
SteadyState solve_steady_state(const EquilibriumConfig& cfg,
                               const ProtocolParams& pp, const MarketParams& mp,
                               const Grid2D& g);

// Backward-forward sweeps from the steady terminal surface with the damped
// path update of the mean hashrate until the path stops moving.
EquilibriumSolution solve_transient(const EquilibriumConfig& cfg,
                                    const DensityState& m0,
                                    const SteadyState& steady,
                                    const ProtocolParams& pp,
                                    const MarketParams& mp, const Grid2D& g);

}  // namespace powmfg
