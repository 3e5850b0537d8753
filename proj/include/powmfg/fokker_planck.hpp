#pragma once

#include <vector>

#include "powmfg/grid.hpp"
#include "powmfg/hjb.hpp"

namespace powmfg {

// Population distribution: an areal density on x > 0 (row 0 of the field is
// kept at zero) plus a line density eta on the x = 0 boundary where broke
// nodes accumulate. Total mass integrate(interior) + sum(eta)*db stays 1.
struct DensityState {
    ScalarField interior;
    std::vector<double> eta;

    explicit DensityState(const Grid2D& g)
        : interior(g), eta(static_cast<std::size_t>(g.ny), 0.0) {}

    const Grid2D& grid() const { return interior.grid(); }
    double total_mass() const;
    void validate() const;
};

// Per-cell probability masses, row-major with the x = 0 row holding the
// boundary measure. The forward dynamics are linear in this vector.
std::vector<double> to_mass_vector(const DensityState& s);
DensityState state_from_mass_vector(const Grid2D& g,
                                    const std::vector<double>& mass);

// Adjoint of the value-side generator, acting on per-cell masses: flux-form
// upwind transport, reflecting price diffusion, and the jump transfer that
// scatters outflow to the post-jump wealth nodes. Column sums vanish, so
// total mass is conserved exactly.
std::vector<double> apply_adjoint_generator(const std::vector<double>& mass,
                                            const ScalarField& alpha,
                                            const HjbParams& p);

// Largest forward step the explicit transport and jump parts tolerate.
double fp_max_stable_dt(const ScalarField& alpha, const HjbParams& p);

// One forward step of size p.dt: explicit upwind wealth transport (mass
// crossing x = 0 lands in eta), explicit upwind price transport with
// implicit price diffusion, then the jump transfer. Throws CflError when
// p.dt exceeds the stability bound.
DensityState fp_forward_step(const DensityState& state,
                             const ScalarField& alpha, const HjbParams& p);

// Forward evolution over an arbitrary duration, subdividing into stable
// steps as needed.
DensityState fp_evolve(const DensityState& state, const ScalarField& alpha,
                       const HjbParams& p, double duration);

struct StationaryFpResult {
    DensityState state;
    int iterations = 0;
    std::vector<double> residuals;  // sup-norm mass change per unit time
    double renorm_min = 1.0;
    double renorm_max = 1.0;
};

// Long-run forward iteration with per-step renormalization until the mass
// change rate falls below p.tol.
StationaryFpResult solve_stationary_fp(const ScalarField& alpha,
                                       const HjbParams& p,
                                       const DensityState* init = nullptr);

// Probability mass per wealth node; index 0 carries the boundary measure.
std::vector<double> wealth_marginal(const DensityState& s);

}  // namespace powmfg
