#pragma once

#include <cstdint>
#include <vector>

#include "powmfg/fokker_planck.hpp"
#include "powmfg/market.hpp"
#include "powmfg/protocol.hpp"

namespace powmfg {

// Attack-cost sweep: cost[t][f] is the fortnightly spend needed to command
// fractions[f] of the network at times[t].
struct SecurityReport {
    std::vector<double> times;
    std::vector<double> fractions;
    std::vector<double> active_nodes;
    std::vector<std::vector<double>> cost;
};

// Nodes whose control is strictly positive, scaled by the population size.
// The boundary measure never mines, so it counts as inactive.
double active_node_count(const DensityState& state, const ScalarField& alpha,
                         double population);

// Instantaneous utility of mining at the given hashrate.
double profitability(double alpha_star, const MarketParams& mp);

// Fortnightly spend for an attacker commanding the given hashrate fraction.
double attack_cost(double fraction, double n_active, double alpha_bar,
                   const MarketParams& mp);

// Inflation trajectory along a realized block path (retarget windows found
// per time point) and matching arrival intensities (blocks per second).
std::vector<double> inflation_curve(const std::vector<std::int64_t>& block_path,
                                    const std::vector<double>& intensity_path,
                                    const ProtocolParams& pp);

// The standard attacker-share sweep 10% .. 45%.
std::vector<double> default_attack_fractions();

SecurityReport build_security_report(const std::vector<double>& times,
                                     const std::vector<double>& fractions,
                                     const std::vector<double>& active_nodes,
                                     const std::vector<double>& alpha_bar,
                                     const MarketParams& mp);

}  // namespace powmfg
