#pragma once

#include "powmfg/fokker_planck.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/hjb.hpp"
#include "powmfg/market.hpp"

namespace powmfg::testing {

// Unit-spacing toy problem: cheap to solve and every term of the dynamics
// is active at grid scale (the production-scale defaults are so far apart
// that several terms are numerically inert).
inline Grid2D toy_grid(int nx = 12, int ny = 11) {
    return Grid2D(nx, ny, 1.0, 1.0);
}

inline MarketParams toy_market() {
    MarketParams m;
    m.theta1 = 3.0;
    m.theta2 = 1.0;
    m.theta3 = 0.5;
    m.unit_cost = 1.0;  // static maximizer theta1/c - theta2 = 2
    m.sigma = 0.8;
    m.beta = 1.0;
    m.discount = 0.37;
    m.node_growth_a = 1.0;
    m.node_growth_b = 1.0;
    return m;
}

// Toy market whose optimal hashrate is zero and whose idle utility vanishes.
inline MarketParams idle_market() {
    MarketParams m = toy_market();
    m.theta1 = 1.0;
    m.theta2 = 2.0;
    m.theta3 = -0.6931471805599453;  // -ln 2
    m.sigma = 0.0;
    return m;
}

inline HjbParams toy_hjb(const MarketParams& m, double dt = 0.05) {
    HjbParams p;
    p.lambda = 0.05;
    p.h_total = 1.0;
    p.k_reward = 0.7;
    p.b_hat = 5.0;
    p.market = m;
    p.dt = dt;
    p.tol = 1e-11;
    p.max_iter = 400000;
    return p;
}

inline DensityState unit_mass_at(const Grid2D& g, int i, int j) {
    DensityState s(g);
    if (i == 0) {
        s.eta[j] = 1.0 / g.db;
    } else {
        s.interior(i, j) = 1.0 / (g.dx * g.db);
    }
    return s;
}

}  // namespace powmfg::testing
