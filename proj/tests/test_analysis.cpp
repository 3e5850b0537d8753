#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>

#include "powmfg/analysis.hpp"
#include "test_helpers.hpp"

using namespace powmfg;
using namespace powmfg::testing;

TEST_CASE("active node count") {
    const Grid2D g = toy_grid(6, 5);

    // Everyone mining: the whole population.
    DensityState uni(g);
    const double fill = 1.0 / ((g.nx - 1) * g.dx * g.ny * g.db);
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) uni.interior(i, j) = fill;
    }
    ScalarField mining(g, 0.0);
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) mining(i, j) = 2.0;
    }
    CHECK(active_node_count(uni, mining, 1000.0) ==
          doctest::Approx(1000.0).epsilon(1e-12));

    // Broke population: nobody mines.
    DensityState broke(g);
    broke.eta[1] = 1.0 / g.db;
    CHECK(active_node_count(broke, mining, 1000.0) == 0.0);

    // Half the mass on active cells.
    DensityState half(g);
    half.interior(1, 1) = 0.5 / (g.dx * g.db);
    half.interior(3, 3) = 0.5 / (g.dx * g.db);
    ScalarField partial(g, 0.0);
    partial(1, 1) = 1.0;  // only one of the two cells is active
    CHECK(active_node_count(half, partial, 1000.0) ==
          doctest::Approx(500.0).epsilon(1e-12));

    // Active plus inactive is the whole population.
    const double active = active_node_count(half, partial, 1000.0);
    CHECK(active + (1000.0 - active) == 1000.0);
}

TEST_CASE("profitability wraps the utility") {
    MarketParams mp;  // production coefficients
    CHECK(profitability(1.58e15, mp) == doctest::Approx(2963.14145).epsilon(2e-7));
    CHECK(profitability(0.0, mp) == doctest::Approx(0.3912451).epsilon(2e-5));
}

TEST_CASE("attack cost formula") {
    MarketParams mp;
    CHECK(attack_cost(0.5, 1000.0, 1e15, mp) ==
          doctest::Approx(0.5 * 1000.0 * 8.43e-14 * 1e15).epsilon(1e-12));
    CHECK(attack_cost(0.5, 1000.0, 1e15, mp) == doctest::Approx(42150.0));
    CHECK_THROWS_AS(attack_cost(0.0, 1.0, 1.0, mp), std::domain_error);
    CHECK_THROWS_AS(attack_cost(1.0, 1.0, 1.0, mp), std::domain_error);

    // Vanishes with the fraction and grows linearly in it.
    const double c1 = attack_cost(0.1, 500.0, 1e15, mp);
    const double c2 = attack_cost(0.2, 500.0, 1e15, mp);
    CHECK(c2 == doctest::Approx(2.0 * c1).epsilon(1e-12));
    CHECK(attack_cost(1e-12, 500.0, 1e15, mp) < 1e-3);
}

TEST_CASE("inflation trajectory decays across epochs") {
    ProtocolParams pp;
    std::vector<std::int64_t> blocks;
    std::vector<double> lam;
    for (int k = 0; k <= 32; ++k) {
        blocks.push_back(k * 105);  // one halving roughly every 105 windows
        lam.push_back(1.0 / 600.0);
    }
    const std::vector<double> infl = inflation_curve(blocks, lam, pp);
    for (std::size_t k = 0; k + 1 < infl.size(); ++k) {
        CHECK(infl[k + 1] <= infl[k]);
    }
    CHECK(infl[0] ==
          doctest::Approx(inflation_rate(block_reward(0, pp), 1.0 / 600.0,
                                         cumulative_supply(0, pp))));
    // With no fee floor the tail hits exactly zero.
    std::vector<std::int64_t> tail{4000};
    std::vector<double> lam1{1.0 / 600.0};
    CHECK(inflation_curve(tail, lam1, pp)[0] == 0.0);

    std::vector<std::int64_t> bad{5, 3};
    std::vector<double> lam2{1.0, 1.0};
    CHECK_THROWS_AS(inflation_curve(bad, lam2, pp), std::domain_error);
}

TEST_CASE("security report sweeps the standard fractions") {
    MarketParams mp;
    const std::vector<double> fr = default_attack_fractions();
    REQUIRE(fr.size() == 8);
    CHECK(fr.front() == 0.10);
    CHECK(fr.back() == 0.45);

    const std::vector<double> times{0.0, 10.0, 20.0};
    const std::vector<double> nodes{100.0, 200.0, 400.0};
    const std::vector<double> abar{1e14, 2e14, 3e14};
    const SecurityReport r = build_security_report(times, fr, nodes, abar, mp);
    REQUIRE(r.cost.size() == 3);
    for (const auto& row : r.cost) {
        for (std::size_t f = 0; f + 1 < row.size(); ++f) {
            CHECK(row[f] < row[f + 1]);
        }
    }
    // Nondecreasing inputs give nondecreasing cost in time at any fraction.
    for (std::size_t f = 0; f < fr.size(); ++f) {
        CHECK(r.cost[0][f] <= r.cost[1][f]);
        CHECK(r.cost[1][f] <= r.cost[2][f]);
    }
}
