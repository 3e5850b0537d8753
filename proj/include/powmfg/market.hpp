#pragma once

#include <limits>

namespace powmfg {

// Fitted mining-economy coefficients. Revenue per fortnight is
// theta1*log(alpha + theta2) + theta3 for a hashrate alpha (TeraHash per
// fortnight, discounted by technological progress); unit_cost prices one
// TeraHash; discount is the per-fortnight interest rate; node_growth_a/b give
// the power-law node population a*t^b.
struct MarketParams {
    double theta1 = 132.82;
    double theta2 = 1.19e5;
    double theta3 = -1551.86;
    double unit_cost = 8.43e-14;
    double sigma = 0.005;
    double beta = 2e4;
    double discount = 7.67e-4;
    double node_growth_a = 6.58e-3;
    double node_growth_b = 4.00;

    void validate() const;
};

// Production-cost anchor for the token price: beta * cost(h) / supply.
double production_price(double total_hashrate, double supply,
                        const MarketParams& p);

// One Euler-Maruyama step of the mean-reverting price process, reflected
// into [0, b_max] by clamping.
double ou_step(double b, double b_hat, double dt, double noise,
               const MarketParams& p,
               double b_max = std::numeric_limits<double>::infinity());

// Flow utility (revenue minus cost) of mining at hashrate alpha.
double utility(double alpha, const MarketParams& p);

// Linear mining cost c * alpha.
double cost(double alpha, const MarketParams& p);

// Node population at time t (fortnights), floored at one node.
double node_count(double t, const MarketParams& p);

// Hashrate maximizing the flow utility alone: theta1/c - theta2, clamped
// at zero when the cost slope dominates.
double static_optimal_hashrate(const MarketParams& p);

}  // namespace powmfg
