#include "powmfg/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "powmfg/errors.hpp"
#include "powmfg/rng.hpp"

namespace powmfg {

double CounterRng::normal(std::uint64_t stream, std::uint64_t step,
                          std::uint64_t draw) const {
    const double u1 = uniform(stream, step, 2 * draw);
    const double u2 = uniform(stream, step, 2 * draw + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

void SimConfig::validate() const {
    if (n_agents < 1) throw std::domain_error("sim: need at least one agent");
    if (!(dt > 0.0)) throw std::domain_error("sim: dt must be positive");
    if (!(horizon > 0.0)) throw std::domain_error("sim: horizon must be positive");
}

SimResult simulate_agents(const SimConfig& cfg, const MarketParams& mp,
                          const std::vector<EnvStep>& env,
                          const std::vector<AgentState>& initial) {
    cfg.validate();
    mp.validate();
    if (env.empty()) throw std::invalid_argument("sim: environment path is empty");
    if (static_cast<int>(initial.size()) != cfg.n_agents) {
        throw std::invalid_argument("sim: initial states do not match n_agents");
    }

    const int n_steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
    if (!(n_steps >= 1)) throw std::domain_error("sim: horizon shorter than dt");
    if (env.size() != 1 && static_cast<int>(env.size()) < n_steps) {
        throw std::invalid_argument("sim: environment path shorter than the run");
    }

    std::vector<double> sample_times = cfg.sample_times;
    if (sample_times.empty()) sample_times.push_back(cfg.horizon);
    std::sort(sample_times.begin(), sample_times.end());

    const CounterRng rng{cfg.seed};
    std::vector<AgentState> agents = initial;
    SimResult out;
    out.steps = n_steps;
    std::size_t next_sample = 0;

    auto record_due = [&](double t, double dt) {
        while (next_sample < sample_times.size() &&
               sample_times[next_sample] <= t + 0.5 * dt) {
            out.snapshots.push_back({sample_times[next_sample], agents});
            ++next_sample;
        }
    };
    record_due(0.0, cfg.dt);

    const int workers = std::clamp(cfg.threads, 1, cfg.n_agents);
    std::vector<std::int64_t> jumps(static_cast<std::size_t>(workers), 0);
    // One flag per worker; vector<bool> would pack bits and race.
    std::vector<std::uint8_t> thinning_violation(
        static_cast<std::size_t>(workers), 0);

    for (int step = 0; step < n_steps; ++step) {
        const EnvStep& e = env.size() == 1 ? env[0] : env[step];
        const double jump_scale = e.lambda / e.h_total;

        auto advance = [&](int lo, int hi, int worker) {
            for (int a = lo; a < hi; ++a) {
                AgentState& s = agents[a];
                const std::uint64_t stream = static_cast<std::uint64_t>(a);
                if (s.active) {
                    const double alpha =
                        cfg.policy.hashrate(s.wealth, s.price, mp);
                    const double p_jump = jump_scale * alpha * cfg.dt;
                    if (p_jump >= 0.1) {
                        thinning_violation[worker] = 1;
                        return;
                    }
                    const double x_drift =
                        (mp.discount * s.wealth - mp.unit_cost * alpha) * cfg.dt;
                    bool jumped = false;
                    if (p_jump > 0.0 &&
                        rng.uniform(stream, static_cast<std::uint64_t>(step), 0) <
                            p_jump) {
                        jumped = true;
                        ++jumps[worker];
                    }
                    s.wealth += x_drift;
                    if (jumped) s.wealth += e.k_reward * s.price;
                    if (s.wealth <= 0.0) {
                        s.wealth = 0.0;
                        s.active = false;
                    }
                }
                const double noise =
                    rng.normal(stream, static_cast<std::uint64_t>(step), 1);
                s.price = ou_step(s.price, e.b_hat, cfg.dt, noise, mp, cfg.b_max);
            }
        };

        if (workers == 1) {
            advance(0, cfg.n_agents, 0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            const int chunk = (cfg.n_agents + workers - 1) / workers;
            for (int w = 0; w < workers; ++w) {
                const int lo = w * chunk;
                const int hi = std::min(cfg.n_agents, lo + chunk);
                if (lo >= hi) break;
                pool.emplace_back(advance, lo, hi, w);
            }
            for (auto& th : pool) th.join();
        }
        for (std::uint8_t bad : thinning_violation) {
            if (bad) {
                throw SolverError(
                    "sim: jump probability per step reached 0.1; shrink dt");
            }
        }
        record_due((step + 1) * cfg.dt, cfg.dt);
    }
    for (std::int64_t j : jumps) out.total_jumps += j;
    return out;
}

std::vector<AgentState> sample_agents_from_density(const DensityState& m0,
                                                   int n_agents,
                                                   std::uint64_t seed) {
    const Grid2D& g = m0.grid();
    const std::vector<double> mass = to_mass_vector(m0);
    std::vector<double> cdf(mass.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        acc += mass[c];
        cdf[c] = acc;
    }
    if (!(acc > 0.0)) throw std::domain_error("sim: initial density has no mass");

    const CounterRng rng{seed};
    std::vector<AgentState> agents(static_cast<std::size_t>(n_agents));
    for (int a = 0; a < n_agents; ++a) {
        const double u = rng.uniform(static_cast<std::uint64_t>(a), ~0ULL, 0) * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::size_t c = static_cast<std::size_t>(it - cdf.begin());
        const int i = static_cast<int>(c) / g.ny;
        const int j = static_cast<int>(c) % g.ny;
        agents[a] = {g.x(i), g.b(j), i > 0};
    }
    return agents;
}

DensityState empirical_density(const std::vector<AgentState>& agents,
                               const Grid2D& g) {
    if (agents.empty()) throw std::domain_error("sim: no agents to bin");
    std::vector<double> mass(g.cells(), 0.0);
    const double w = 1.0 / static_cast<double>(agents.size());
    for (const AgentState& s : agents) {
        const int i = std::clamp(
            static_cast<int>(std::floor(s.wealth / g.dx + 0.5)), 0, g.nx - 1);
        const int j = std::clamp(
            static_cast<int>(std::floor(s.price / g.db + 0.5)), 0, g.ny - 1);
        mass[static_cast<std::size_t>(i) * g.ny + j] += w;
    }
    return state_from_mass_vector(g, mass);
}

double density_distance(const DensityState& a, const DensityState& b) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("sim: density grids differ");
    }
    const std::vector<double> ma = to_mass_vector(a);
    const std::vector<double> mb = to_mass_vector(b);
    double acc = 0.0;
    for (std::size_t c = 0; c < ma.size(); ++c) acc += std::fabs(ma[c] - mb[c]);
    return 0.5 * acc;
}

}  // namespace powmfg
