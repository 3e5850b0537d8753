#include "powmfg/analysis.hpp"

#include <stdexcept>

namespace powmfg {

double active_node_count(const DensityState& state, const ScalarField& alpha,
                         double population) {
    if (!(alpha.grid() == state.grid())) {
        throw std::invalid_argument("analysis: control and density grids differ");
    }
    const Grid2D& g = alpha.grid();
    double active_mass = 0.0;
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            if (alpha(i, j) > 0.0) active_mass += state.interior(i, j);
        }
    }
    return population * active_mass * g.dx * g.db;
}

double profitability(double alpha_star, const MarketParams& mp) {
    return utility(alpha_star, mp);
}

double attack_cost(double fraction, double n_active, double alpha_bar,
                   const MarketParams& mp) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::domain_error("analysis: attacker fraction must lie in (0, 1)");
    }
    if (n_active < 0.0) {
        throw std::domain_error("analysis: active-node count must be nonnegative");
    }
    return fraction * n_active * mp.unit_cost * alpha_bar;
}

std::vector<double> inflation_curve(const std::vector<std::int64_t>& block_path,
                                    const std::vector<double>& intensity_path,
                                    const ProtocolParams& pp) {
    if (block_path.size() != intensity_path.size()) {
        throw std::invalid_argument("analysis: block and intensity paths differ in length");
    }
    std::vector<double> out(block_path.size());
    std::int64_t prev = 0;
    for (std::size_t k = 0; k < block_path.size(); ++k) {
        if (block_path[k] < prev) {
            throw std::domain_error("analysis: block path must be nondecreasing");
        }
        prev = block_path[k];
        const double reward = block_reward(block_path[k], pp);
        const double supply = cumulative_supply(block_path[k], pp);
        out[k] = inflation_rate(reward, intensity_path[k], supply);
    }
    return out;
}

std::vector<double> default_attack_fractions() {
    return {0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45};
}

SecurityReport build_security_report(const std::vector<double>& times,
                                     const std::vector<double>& fractions,
                                     const std::vector<double>& active_nodes,
                                     const std::vector<double>& alpha_bar,
                                     const MarketParams& mp) {
    if (times.size() != active_nodes.size() || times.size() != alpha_bar.size()) {
        throw std::invalid_argument("analysis: report inputs differ in length");
    }
    SecurityReport r;
    r.times = times;
    r.fractions = fractions;
    r.active_nodes = active_nodes;
    r.cost.resize(times.size());
    for (std::size_t t = 0; t < times.size(); ++t) {
        r.cost[t].reserve(fractions.size());
        for (double f : fractions) {
            r.cost[t].push_back(attack_cost(f, active_nodes[t], alpha_bar[t], mp));
        }
    }
    return r;
}

}  // namespace powmfg
