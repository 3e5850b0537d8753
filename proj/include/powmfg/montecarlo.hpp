#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "powmfg/fokker_planck.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/market.hpp"

namespace powmfg {

// One simulated node. Wealth stays nonnegative; price stays inside
// [0, b_max]; a node whose wealth hits zero stops mining for good.
struct AgentState {
    double wealth = 0.0;
    double price = 0.0;
    bool active = true;
};

// Mining policy the agents follow: either a tabulated control surface
// (bilinear lookup) or the closed-form static maximizer.
class Policy {
public:
    static Policy from_field(ScalarField field) {
        Policy p;
        p.field_ = std::move(field);
        return p;
    }
    static Policy static_maximizer() { return Policy{}; }

    double hashrate(double x, double b, const MarketParams& m) const {
        if (field_) return std::max(0.0, interpolate(*field_, x, b));
        return static_optimal_hashrate(m);
    }

private:
    std::optional<ScalarField> field_;
};

// Protocol environment seen by the agents over one step.
struct EnvStep {
    double lambda = 2016.0;   // blocks per fortnight
    double k_reward = 0.0;    // tokens per block
    double h_total = 1.0;     // network hashrate, TeraHash per fortnight
    double b_hat = 0.0;       // price anchor
};

struct SimConfig {
    int n_agents = 1000;
    double dt = 0.05;
    double horizon = 50.0;
    std::uint64_t seed = 1;
    Policy policy = Policy::static_maximizer();
    std::vector<double> sample_times;  // defaults to {horizon}
    double b_max = std::numeric_limits<double>::infinity();
    int threads = 1;  // agents partition across workers; results identical

    void validate() const;
};

struct Snapshot {
    double t = 0.0;
    std::vector<AgentState> agents;
};

struct SimResult {
    std::vector<Snapshot> snapshots;
    std::int64_t total_jumps = 0;
    int steps = 0;
};

// Euler scheme for the wealth/price pair with first-order jump thinning.
// The jump probability per step must stay below 0.1 for every agent or the
// run aborts asking for a smaller dt. env holds one entry per step or a
// single entry reused throughout. Fully deterministic for a given config.
SimResult simulate_agents(const SimConfig& cfg, const MarketParams& mp,
                          const std::vector<EnvStep>& env,
                          const std::vector<AgentState>& initial);

// Draw agents from a density (inverse CDF over cell masses); agents land
// exactly on grid nodes. Boundary mass spawns inactive zero-wealth agents.
std::vector<AgentState> sample_agents_from_density(const DensityState& m0,
                                                   int n_agents,
                                                   std::uint64_t seed);

// Nearest-node histogram normalized to unit mass. Inactive agents and any
// agent in the first half-cell accumulate into the boundary measure.
DensityState empirical_density(const std::vector<AgentState>& agents,
                               const Grid2D& g);

// Total-variation distance between the per-cell masses of two states.
double density_distance(const DensityState& a, const DensityState& b);

}  // namespace powmfg
