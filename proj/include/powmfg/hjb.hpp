#pragma once

#include <vector>

#include "powmfg/grid.hpp"
#include "powmfg/market.hpp"

namespace powmfg {

// Coefficients of one control step: block arrival rate (per fortnight),
// tokens per block, total network hashrate h = M * mean hashrate, the price
// anchor, and the time step / stopping controls.
struct HjbParams {
    double lambda = 2016.0;
    double k_reward = 0.0;
    double h_total = 1.0;
    double b_hat = 0.0;
    MarketParams market{};
    double dt = 1.0;
    double tol = 1e-8;
    int max_iter = 2000000;

    void validate() const;
};

struct CellRef {
    int i = 0;
    int j = 0;
};

struct ControlField {
    ScalarField alpha;
    // Cells where the first-order condition produced a nonpositive
    // denominator (the value surface failed monotonicity there); the control
    // is clamped to zero at those cells.
    std::vector<CellRef> denominator_violations;
};

// Recover the pointwise optimal hashrate from a value surface. The x = 0 row
// is pinned to zero spend, and cells whose unconstrained optimum is
// nonpositive are inactive.
ControlField optimal_control(const ScalarField& v, const HjbParams& p);

// Spatial generator applied to a value surface for a frozen control: upwind
// drift in wealth, upwind drift plus diffusion in price (reflecting ends),
// and the reward jump with interpolation at the destination. Constants are
// annihilated exactly.
ScalarField apply_generator(const ScalarField& v, const ScalarField& alpha,
                            const HjbParams& p);

struct HjbStepResult {
    ScalarField v;
    ScalarField alpha;
    std::vector<CellRef> denominator_violations;
};

// One backward Euler step of size p.dt from the later-time surface v_next:
// implicit in the price drift/diffusion, explicit upwind in the wealth drift
// and jump. The control is frozen from v_next for the solve and refreshed
// from the returned surface, so result.alpha == optimal_control(result.v).
HjbStepResult hjb_backward_step(const ScalarField& v_next, const HjbParams& p);

struct StationaryHjbResult {
    ScalarField v;
    ScalarField alpha;
    int iterations = 0;
    std::vector<double> residuals;
    std::vector<CellRef> denominator_violations;
};

// Damped fixed point of the backward step (time derivative -> 0), iterated
// until the sup-norm change falls below p.tol. The pseudo-time step is
// capped by the explicit-term stability bound each iteration.
StationaryHjbResult solve_stationary_hjb(const Grid2D& g, const HjbParams& p,
                                         const ScalarField* v0 = nullptr);

}  // namespace powmfg
