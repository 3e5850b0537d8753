#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>
#include <random>
#include <vector>

#include "powmfg/errors.hpp"
#include "powmfg/fokker_planck.hpp"
#include "powmfg/rng.hpp"
#include "test_helpers.hpp"

using namespace powmfg;
using namespace powmfg::testing;

namespace {

DensityState random_state(const Grid2D& g, std::mt19937& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mass(g.cells());
    double total = 0.0;
    for (double& m : mass) {
        m = u(gen);
        total += m;
    }
    for (double& m : mass) m /= total;
    return state_from_mass_vector(g, mass);
}

ScalarField random_control(const Grid2D& g, std::mt19937& gen, double scale) {
    std::uniform_real_distribution<double> u(0.0, scale);
    ScalarField a(g);
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) a(i, j) = u(gen);
    }
    return a;
}

}  // namespace

TEST_CASE("state with all coefficients switched off is a fixed point") {
    // Mass sits on the boundary line at the price anchor: no wealth drift,
    // no price drift there, no diffusion, no jumps.
    const Grid2D g = toy_grid();
    HjbParams p = toy_hjb(toy_market(), 0.05);
    p.b_hat = g.b(4);
    p.market.sigma = 0.0;
    const DensityState s0 = unit_mass_at(g, 0, 4);
    const ScalarField idle(g);
    const DensityState s1 = fp_forward_step(s0, idle, p);
    for (int j = 0; j < g.ny; ++j) CHECK(s1.eta[j] == s0.eta[j]);
    for (std::size_t c = 0; c < s1.interior.data().size(); ++c) {
        CHECK(s1.interior.data()[c] == 0.0);
    }
}

TEST_CASE("mass conservation over random steps") {
    const Grid2D g = toy_grid(9, 8);
    HjbParams p = toy_hjb(toy_market(), 1.0);
    std::mt19937 gen(5);
    DensityState s = random_state(g, gen);
    for (int n = 0; n < 200; ++n) {
        const ScalarField a = random_control(g, gen, 2.5);
        p.dt = 0.8 * fp_max_stable_dt(a, p);
        s = fp_forward_step(s, a, p);
        CHECK(s.total_mass() == doctest::Approx(1.0).epsilon(1e-10));
        for (double m : to_mass_vector(s)) CHECK(m >= -1e-15);
    }
}

TEST_CASE("single-step stability violation is reported") {
    const Grid2D g = toy_grid();
    HjbParams p = toy_hjb(toy_market(), 1e9);
    const ScalarField a(g, 1.0);
    const DensityState s = unit_mass_at(g, 3, 3);
    try {
        fp_forward_step(s, a, p);
        FAIL("expected a stability error");
    } catch (const CflError& e) {
        CHECK(e.offending_dt() == 1e9);
        CHECK(e.max_stable_dt() > 0.0);
        CHECK(e.max_stable_dt() < 1e9);
    }
}

TEST_CASE("pure jump column matches a hand-built Markov chain") {
    // Mass confined to the price column at the anchor: no price drift there,
    // no diffusion, negligible wealth drift, so one step is the 3-state jump
    // chain over the wealth rows (the top row jumps onto itself).
    const Grid2D g(3, 3, 1.0, 1.0);
    MarketParams m = toy_market();
    m.sigma = 0.0;
    m.discount = 1e-300;
    m.unit_cost = 1e-300;
    HjbParams p = toy_hjb(m, 0.1);
    p.k_reward = 1.0;
    p.b_hat = g.b(1);
    p.lambda = 1.0;
    p.h_total = 1.0;

    ScalarField alpha(g);
    alpha(1, 1) = 0.6;
    alpha(2, 1) = 0.9;

    // Column j=1: row 1 jumps one cell up, row 2 jumps onto itself.
    const double q1 = p.dt * alpha(1, 1);
    // Hand transition on masses (row index = wealth node).
    auto evolve = [&](std::array<double, 3> in) {
        std::array<double, 3> out{};
        out[0] = in[0];
        out[1] = in[1] * (1.0 - q1);
        out[2] = in[2] + in[1] * q1;
        return out;
    };

    std::mt19937 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<double, 3> w{u(gen), u(gen), u(gen)};
        const double total = w[0] + w[1] + w[2];
        for (double& x : w) x /= total;

        DensityState s(g);
        s.eta[1] = w[0] / g.db;
        s.interior(1, 1) = w[1] / (g.dx * g.db);
        s.interior(2, 1) = w[2] / (g.dx * g.db);

        const DensityState next = fp_forward_step(s, alpha, p);
        const std::array<double, 3> expect = evolve(w);
        CHECK(next.eta[1] * g.db == doctest::Approx(expect[0]).epsilon(1e-13));
        CHECK(next.interior(1, 1) * g.dx * g.db ==
              doctest::Approx(expect[1]).epsilon(1e-13));
        CHECK(next.interior(2, 1) * g.dx * g.db ==
              doctest::Approx(expect[2]).epsilon(1e-13));
    }
}

TEST_CASE("forward generator is the transpose of the value generator") {
    const Grid2D g(5, 4, 1.5, 0.8);
    MarketParams m = toy_market();
    HjbParams p = toy_hjb(m);
    p.k_reward = 0.9;
    p.b_hat = 1.7;

    std::mt19937 gen(13);
    const ScalarField alpha = random_control(g, gen, 2.0);

    const std::size_t n = g.cells();
    std::vector<std::vector<double>> fwd(n), bwd(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> basis(n, 0.0);
        basis[c] = 1.0;
        fwd[c] = apply_adjoint_generator(basis, alpha, p);

        ScalarField e(g);
        e.data()[c] = 1.0;
        bwd[c] = apply_generator(e, alpha, p).data();
    }
    // fwd[c][d] is (A* e_c)_d = A*[d][c]; bwd[c][d] is A[d][c] as well once
    // transposed, so A*[d][c] must equal A[c][d].
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t d = 0; d < n; ++d) {
            CHECK(fwd[c][d] ==
                  doctest::Approx(bwd[d][c]).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("stationary price marginal matches a reflected mean-reverting sample") {
    const Grid2D g(4, 41, 1.0, 1.0);
    MarketParams m = toy_market();
    m.sigma = 6.0;
    m.discount = 1e-300;
    HjbParams p = toy_hjb(m, 0.02);
    p.k_reward = 0.0;
    p.b_hat = g.b(20);
    p.tol = 1e-10;
    p.max_iter = 2000000;

    const ScalarField idle(g);
    const DensityState start = unit_mass_at(g, 2, 20);
    const StationaryFpResult fp = solve_stationary_fp(idle, p, &start);
    CHECK(fp.renorm_min > 1.0 - 1e-8);
    CHECK(fp.renorm_max < 1.0 + 1e-8);

    std::vector<double> pde_marginal(g.ny, 0.0);
    for (int j = 0; j < g.ny; ++j) {
        pde_marginal[j] += fp.state.eta[j] * g.db;
        for (int i = 1; i < g.nx; ++i) {
            pde_marginal[j] += fp.state.interior(i, j) * g.dx * g.db;
        }
    }

    // Long independent sample of the clamped price recursion.
    const CounterRng rng{99};
    std::vector<double> histo(g.ny, 0.0);
    const double dt_mc = 0.05;
    const int n_paths = 3000, n_steps = 2000, burn = 600;
    for (int path = 0; path < n_paths; ++path) {
        double b = p.b_hat;
        for (int step = 0; step < n_steps; ++step) {
            b = ou_step(b, p.b_hat, dt_mc, rng.normal(path, step, 0), m,
                        g.b_max());
            if (step >= burn) {
                const int j = std::clamp(
                    static_cast<int>(std::floor(b / g.db + 0.5)), 0, g.ny - 1);
                histo[j] += 1.0;
            }
        }
    }
    const double total = n_paths * static_cast<double>(n_steps - burn);
    double tv = 0.0;
    for (int j = 0; j < g.ny; ++j) tv += std::fabs(histo[j] / total - pde_marginal[j]);
    CHECK(0.5 * tv < 0.05);
}

TEST_CASE("wealth marginal conventions") {
    const Grid2D g = toy_grid(6, 5);

    // Uniform interior density gives a flat marginal beyond the boundary bin.
    DensityState uni(g);
    const double fill = 1.0 / ((g.nx - 1) * g.dx * g.ny * g.db);
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) uni.interior(i, j) = fill;
    }
    const std::vector<double> w = wealth_marginal(uni);
    CHECK(w[0] == 0.0);
    for (int i = 2; i < g.nx; ++i) CHECK(w[i] == doctest::Approx(w[1]));
    double total = 0.0;
    for (double x : w) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // All mass on the boundary line: a unit spike at index zero.
    DensityState broke(g);
    for (int j = 0; j < g.ny; ++j) broke.eta[j] = 0.2 / g.db / g.ny * 5.0;
    std::vector<double> wb = wealth_marginal(broke);
    CHECK(wb[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 1; i < g.nx; ++i) CHECK(wb[i] == 0.0);
}

TEST_CASE("no jump inflow lands below the jump height") {
    const Grid2D g = toy_grid(9, 7);
    MarketParams m = toy_market();
    m.sigma = 0.0;
    m.discount = 1e-300;
    m.unit_cost = 1e-300;
    HjbParams p = toy_hjb(m, 0.01);
    p.k_reward = 1.3;
    p.lambda = 1.0;
    p.b_hat = 100.0;  // price drift points up everywhere; jumps are the only
                      // way mass can appear at a wealth node from below

    ScalarField alpha(g);
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) alpha(i, j) = 0.5 + 0.1 * i;
    }
    for (std::size_t src = 0; src < g.cells(); ++src) {
        std::vector<double> basis(g.cells(), 0.0);
        basis[src] = 1.0;
        const std::vector<double> out = apply_adjoint_generator(basis, alpha, p);
        const int i_src = static_cast<int>(src) / g.ny;
        const int j_src = static_cast<int>(src) % g.ny;
        for (int i = 0; i < g.nx; ++i) {
            if (out[static_cast<std::size_t>(i) * g.ny + j_src] <= 0.0) continue;
            if (i == i_src || i == i_src + 1) continue;  // diagonal, price flux
            // Any other positive entry in the column is jump inflow; it must
            // sit at or above the jump height, up to one split cell.
            CHECK(g.x(i) > p.k_reward * g.b(j_src) - g.dx * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("wealth dynamics freeze when drift and jumps vanish") {
    const Grid2D g = toy_grid(8, 6);
    MarketParams m = toy_market();
    m.discount = 1e-300;
    m.sigma = 1.0;
    HjbParams p = toy_hjb(m, 0.05);
    p.k_reward = 0.0;
    p.b_hat = g.b(2);

    std::mt19937 gen(31);
    DensityState s = random_state(g, gen);
    const std::vector<double> before = wealth_marginal(s);
    const ScalarField idle(g);
    for (int step = 0; step < 40; ++step) s = fp_forward_step(s, idle, p);
    const std::vector<double> after = wealth_marginal(s);
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-10));
    }
}
