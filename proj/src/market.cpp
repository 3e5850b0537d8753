#include "powmfg/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace powmfg {

void MarketParams::validate() const {
    if (!(theta1 > 0.0)) throw std::domain_error("market: theta1 must be positive");
    if (!(theta2 > 0.0)) throw std::domain_error("market: theta2 must be positive");
    if (!(unit_cost > 0.0)) throw std::domain_error("market: unit_cost must be positive");
    if (!(sigma >= 0.0)) throw std::domain_error("market: sigma must be nonnegative");
    if (!(beta > 0.0)) throw std::domain_error("market: beta must be positive");
    if (!(discount > 0.0)) throw std::domain_error("market: discount must be positive");
    if (!(node_growth_a > 0.0)) throw std::domain_error("market: node_growth_a must be positive");
}

double production_price(double total_hashrate, double supply,
                        const MarketParams& p) {
    if (!(supply > 0.0)) {
        throw std::domain_error("market: supply must be positive");
    }
    if (total_hashrate < 0.0) {
        throw std::domain_error("market: total hashrate must be nonnegative");
    }
    return p.beta * (p.unit_cost * total_hashrate) / supply;
}

double ou_step(double b, double b_hat, double dt, double noise,
               const MarketParams& p, double b_max) {
    if (!(dt > 0.0)) {
        throw std::domain_error("market: dt must be positive");
    }
    const double next = b + (b_hat - b) * dt + p.sigma * std::sqrt(dt) * noise;
    return std::clamp(next, 0.0, b_max);
}

double utility(double alpha, const MarketParams& p) {
    if (alpha < 0.0) {
        throw std::domain_error("market: hashrate must be nonnegative");
    }
    return p.theta1 * std::log(alpha + p.theta2) + p.theta3 -
           p.unit_cost * alpha;
}

double cost(double alpha, const MarketParams& p) {
    return p.unit_cost * alpha;
}

double node_count(double t, const MarketParams& p) {
    if (t < 0.0) {
        throw std::domain_error("market: time must be nonnegative");
    }
    return std::max(1.0, p.node_growth_a * std::pow(t, p.node_growth_b));
}

double static_optimal_hashrate(const MarketParams& p) {
    return std::max(0.0, p.theta1 / p.unit_cost - p.theta2);
}

}  // namespace powmfg
