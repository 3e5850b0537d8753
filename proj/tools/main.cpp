#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "powmfg/analysis.hpp"
#include "powmfg/config.hpp"
#include "powmfg/equilibrium.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/fit.hpp"
#include "powmfg/io.hpp"
#include "powmfg/montecarlo.hpp"
#include "powmfg/protocol.hpp"

namespace fs = std::filesystem;
using namespace powmfg;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

std::string resolve_out_dir(const std::string& out, const std::string& stem) {
    if (!out.empty()) return out;
    const char* root = std::getenv("MFG_RUN_DIR");
    return (fs::path(root ? root : ".") / stem).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir);
}

nlohmann::json diagnostics_json(const EquilibriumDiagnostics& d) {
    return {{"outer_residuals", d.outer_residuals},
            {"inertia_weights", d.inertia_weights},
            {"floor_events", d.floor_events},
            {"renormalization", {{"min", d.renorm_min}, {"max", d.renorm_max}}},
            {"denominator_violations", d.denominator_violations},
            {"residuals_nonincreasing", d.residuals_nonincreasing},
            {"converged", d.converged}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    return nlohmann::json::parse(in);
}

DensityState read_density_slice(const std::string& dir, int step,
                                const Grid2D& g) {
    const std::string tag = "_t" + std::to_string(step);
    DensityState s(g);
    s.interior = read_field_csv(dir + "/m" + tag + ".csv", g);
    s.eta = read_eta_csv(dir + "/eta" + tag + ".csv");
    return s;
}

int cmd_protocol(std::int64_t blocks, bool sweep, double fee_floor,
                 double nodes, const std::string& out_path) {
    ProtocolParams pp;
    pp.fee_floor = fee_floor;
    pp.validate();
    const double lam = 1.0 / pp.target_block_seconds;
    const double d0 = difficulty_from_hashes(
        {0, initial_hash_target(nodes, pp), 0.0}, nodes, pp);

    std::ostringstream table;
    table << "windows,epoch,reward_tokens,supply_tokens,lambda_blocks_per_s,"
             "difficulty,inflation_per_s\n";
    auto emit = [&](std::int64_t n) {
        const double k = block_reward(n, pp);
        const double supply = cumulative_supply(n, pp);
        table << n << "," << halving_epoch(n, pp) << "," << format_double(k)
              << "," << format_double(supply) << "," << format_double(lam)
              << "," << format_double(d0) << ","
              << format_double(inflation_rate(k, lam, supply)) << "\n";
    };
    if (sweep) {
        for (std::int64_t l = 0; l <= pp.max_halvings; ++l) {
            // First window of each halving epoch.
            const std::int64_t n =
                (l * pp.halving_blocks + pp.retarget_blocks - 1) /
                pp.retarget_blocks;
            emit(n);
        }
    } else {
        emit(blocks);
    }
    std::cout << table.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot write " + out_path);
        out << table.str();
    }
    return 0;
}

void write_steady_outputs(const std::string& dir, const RunConfig& cfg,
                          const SteadyState& s, RunManifest& manifest) {
    write_field_csv(dir + "/v_inf.csv", s.v);
    write_field_csv(dir + "/alpha_inf.csv", s.alpha);
    write_field_csv(dir + "/m_inf.csv", s.m.interior);
    write_eta_csv(dir + "/eta_inf.csv", s.m.eta);
    nlohmann::json diag = diagnostics_json(s.diagnostics);
    diag["alpha_bar_inf"] = s.alpha_bar;
    diag["grid"] = {{"nx", cfg.grid.nx},
                    {"ny", cfg.grid.ny},
                    {"dx", cfg.grid.dx},
                    {"db", cfg.grid.db}};
    write_json(dir + "/diagnostics.json", diag);
    manifest.outputs.insert(manifest.outputs.end(),
                            {"v_inf.csv", "alpha_inf.csv", "m_inf.csv",
                             "eta_inf.csv", "diagnostics.json"});
    manifest.converged = s.diagnostics.converged;
    manifest.final_residual = s.diagnostics.outer_residuals.empty()
                                  ? 0.0
                                  : s.diagnostics.outer_residuals.back();
}

int cmd_steady(const std::string& config_path, const std::string& out) {
    const RunConfig cfg = load_run_config(config_path);
    const std::string dir = resolve_out_dir(out, "steady_run");
    ensure_dir(dir);
    RunManifest manifest;
    manifest.command = "steady";
    manifest.config = config_to_json(cfg);
    manifest.started_at = iso_timestamp();

    const SteadyState s =
        solve_steady_state(cfg.equilibrium, cfg.protocol, cfg.market, cfg.grid);
    write_steady_outputs(dir, cfg, s, manifest);
    manifest.finished_at = iso_timestamp();
    write_manifest(dir, manifest);
    std::cout << "steady: alpha_bar_inf = " << format_double(s.alpha_bar)
              << " after " << s.diagnostics.outer_residuals.size()
              << " outer iterations\n";
    return 0;
}

int cmd_transient(const std::string& config_path, const std::string& out) {
    const RunConfig cfg = load_run_config(config_path);
    const std::string dir = resolve_out_dir(out, "transient_run");
    ensure_dir(dir);
    RunManifest manifest;
    manifest.command = "transient";
    manifest.config = config_to_json(cfg);
    manifest.started_at = iso_timestamp();

    const SteadyState s =
        solve_steady_state(cfg.equilibrium, cfg.protocol, cfg.market, cfg.grid);
    const DensityState m0 = default_initial_density(cfg.grid);
    const EquilibriumSolution sol = solve_transient(
        cfg.equilibrium, m0, s, cfg.protocol, cfg.market, cfg.grid);

    write_steady_outputs(dir, cfg, s, manifest);
    write_series_csv(dir + "/alpha_bar.csv",
                     "t_fortnight,alpha_bar_terahash_per_fortnight", sol.times,
                     sol.alpha_bar_path);
    manifest.outputs.push_back("alpha_bar.csv");

    std::vector<double> slice_times;
    std::vector<std::vector<double>> marginals;
    for (std::size_t k = 0; k < sol.stored_steps.size(); ++k) {
        const int step = sol.stored_steps[k];
        slice_times.push_back(sol.times[step]);
        marginals.push_back(wealth_marginal(sol.m_slices[k]));
        const std::string tag = "_t" + std::to_string(step);
        write_field_csv(dir + "/m" + tag + ".csv", sol.m_slices[k].interior);
        write_eta_csv(dir + "/eta" + tag + ".csv", sol.m_slices[k].eta);
        write_field_csv(dir + "/alpha" + tag + ".csv", sol.alpha_slices[k]);
        manifest.outputs.insert(manifest.outputs.end(),
                                {"m" + tag + ".csv", "eta" + tag + ".csv",
                                 "alpha" + tag + ".csv"});
    }
    write_wealth_marginals_csv(dir + "/wealth_marginals.csv", slice_times,
                               marginals);
    manifest.outputs.push_back("wealth_marginals.csv");

    nlohmann::json diag = diagnostics_json(sol.diagnostics);
    diag["alpha_bar_inf"] = sol.alpha_bar_inf;
    diag["stored_steps"] = sol.stored_steps;
    diag["times"] = sol.times;
    diag["grid"] = {{"nx", cfg.grid.nx},
                    {"ny", cfg.grid.ny},
                    {"dx", cfg.grid.dx},
                    {"db", cfg.grid.db}};
    write_json(dir + "/diagnostics.json", diag);

    manifest.converged = sol.diagnostics.converged;
    manifest.final_residual = sol.diagnostics.outer_residuals.back();
    manifest.finished_at = iso_timestamp();
    write_manifest(dir, manifest);
    std::cout << "transient: converged after "
              << sol.diagnostics.outer_residuals.size()
              << " outer iterations; final residual "
              << format_double(manifest.final_residual) << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out,
                 int agents_override, std::int64_t seed_override,
                 const std::string& reference, int from_step) {
    const RunConfig cfg = load_run_config(config_path);
    const std::string dir = resolve_out_dir(out, "simulate_run");
    ensure_dir(dir);
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config = config_to_json(cfg);
    manifest.started_at = iso_timestamp();

    SimConfig sim;
    sim.n_agents = agents_override > 0 ? agents_override : cfg.sim.agents;
    sim.dt = cfg.sim.dt;
    sim.horizon = cfg.sim.horizon;
    sim.seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                  : cfg.sim.seed;
    sim.b_max = cfg.grid.b_max();
    sim.threads = cfg.threads;
    sim.sample_times = cfg.sim.snapshot_times;

    if (!reference.empty()) {
        // Replay a solved run: its policy surface, environment, and initial
        // density drive the agents; distances against the stored slices
        // validate the forward solver.
        const nlohmann::json diag = read_json(reference + "/diagnostics.json");
        const RunConfig ref_cfg =
            run_config_from_json(read_json(reference + "/run_manifest.json"));
        const Grid2D g = ref_cfg.grid;
        const auto ref_steps = diag.at("stored_steps").get<std::vector<int>>();
        const auto times = diag.at("times").get<std::vector<double>>();
        std::vector<double> abar_t, abar_v;
        read_series_csv(reference + "/alpha_bar.csv", abar_t, abar_v);

        // Agents can start at any stored slice; early epochs of a run often
        // have so few nodes that per-step jump thinning cannot resolve the
        // block rate, while later slices are cheap to validate.
        const auto slice_it =
            std::find(ref_steps.begin(), ref_steps.end(), from_step);
        if (slice_it == ref_steps.end()) {
            throw ConfigError("simulate: --from-step must name a stored slice");
        }
        const double t0 = times[from_step];
        const double remaining = times.back() - t0;
        if (!(remaining > 0.0)) {
            throw ConfigError("simulate: nothing to simulate past the last slice");
        }
        // Reach at least the next stored slice so a comparison point exists.
        double first_rel = remaining;
        for (int step : ref_steps) {
            const double rel = times[step] - t0;
            if (rel > 0.0) {
                first_rel = std::min(first_rel, rel);
                break;
            }
        }
        sim.horizon = std::min(std::max(sim.horizon, first_rel), remaining);

        const auto env_nodes =
            build_environment(ref_cfg.equilibrium, ref_cfg.protocol,
                              ref_cfg.market, abar_t, abar_v);
        const int n_steps = static_cast<int>(std::llround(sim.horizon / sim.dt));
        const double grid_dt = times.size() > 1 ? times[1] - times[0] : 1.0;
        std::vector<EnvStep> env;
        env.reserve(n_steps);
        for (int s = 0; s < n_steps; ++s) {
            const double t = t0 + s * sim.dt;
            const std::size_t k =
                std::min(env_nodes.size() - 1,
                         static_cast<std::size_t>(std::max(0.0, t / grid_dt)));
            env.push_back({env_nodes[k].lambda, env_nodes[k].k_reward,
                           env_nodes[k].h_total, env_nodes[k].b_hat});
        }
        const DensityState m0 = read_density_slice(reference, from_step, g);
        std::vector<AgentState> init =
            sample_agents_from_density(m0, sim.n_agents, sim.seed);
        sim.b_max = g.b_max();
        sim.policy =
            Policy::from_field(read_field_csv(reference + "/alpha_inf.csv", g));
        sim.sample_times.clear();
        std::vector<double> ref_times;
        for (int step : ref_steps) {
            ref_times.push_back(times[step]);
            const double rel = times[step] - t0;
            if (rel > 0.0 && rel <= sim.horizon + 1e-9) {
                sim.sample_times.push_back(rel);
            }
        }

        const SimResult result = simulate_agents(sim, ref_cfg.market, env, init);
        std::vector<Snapshot> absolute = result.snapshots;
        for (Snapshot& snap : absolute) snap.t += t0;
        write_snapshots_csv(dir + "/snapshots.csv", absolute);
        manifest.outputs.push_back("snapshots.csv");

        std::ofstream dist(dir + "/distances.csv");
        dist << "t_fortnight,total_variation\n";
        for (const Snapshot& snap : absolute) {
            for (std::size_t k = 0; k < ref_times.size(); ++k) {
                if (std::fabs(ref_times[k] - snap.t) < 1e-9) {
                    const DensityState ref_state =
                        read_density_slice(reference, ref_steps[k], g);
                    const DensityState emp = empirical_density(snap.agents, g);
                    dist << format_double(snap.t) << ","
                         << format_double(density_distance(emp, ref_state))
                         << "\n";
                }
            }
        }
        manifest.outputs.push_back("distances.csv");
    } else {
        const Grid2D& g = cfg.grid;
        const std::vector<double> t0{0.0};
        const std::vector<double> a0{std::max(cfg.equilibrium.initial_alpha_bar,
                                              cfg.equilibrium.alpha_bar_floor)};
        const auto env0 =
            build_environment(cfg.equilibrium, cfg.protocol, cfg.market, t0, a0);
        const std::vector<EnvStep> env{{env0[0].lambda, env0[0].k_reward,
                                        env0[0].h_total, env0[0].b_hat}};
        std::vector<AgentState> init = sample_agents_from_density(
            default_initial_density(g), sim.n_agents, sim.seed);
        if (cfg.sim.policy == "static") sim.policy = Policy::static_maximizer();

        const SimResult result = simulate_agents(sim, cfg.market, env, init);
        write_snapshots_csv(dir + "/snapshots.csv", result.snapshots);
        manifest.outputs.push_back("snapshots.csv");
    }

    manifest.converged = true;
    manifest.finished_at = iso_timestamp();
    write_manifest(dir, manifest);
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& model,
            const std::string& out_path) {
    const auto samples = read_pairs_csv(data_path);
    FitResult r;
    if (model == "power") {
        r = fit_power_law(samples);
    } else if (model == "logrev") {
        r = fit_log_revenue(samples);
    } else if (model == "exp") {
        r = fit_exponential(samples);
    } else {
        throw ConfigError("unknown fit model '" + model + "'");
    }
    nlohmann::json j = {{"model", model},
                        {"coefficients", r.coefficients},
                        {"confidence_halfwidths", r.confidence_halfwidths},
                        {"residual_norm", r.residual_norm}};
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) write_json(out_path, j);
    return 0;
}

int cmd_analyze(const std::string& run_dir, const std::string& out,
                std::vector<double> fractions) {
    if (!fs::exists(run_dir + "/run_manifest.json")) {
        throw ConfigError("run directory has no manifest: " + run_dir);
    }
    const nlohmann::json manifest_json = read_json(run_dir + "/run_manifest.json");
    const RunConfig cfg = run_config_from_json(manifest_json);
    const nlohmann::json diag = read_json(run_dir + "/diagnostics.json");
    const Grid2D g = cfg.grid;
    if (fractions.empty()) fractions = default_attack_fractions();
    for (double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            throw ConfigError("attacker fractions must lie in (0, 1)");
        }
    }

    const std::string dir = resolve_out_dir(out, "analysis");
    ensure_dir(dir);

    std::vector<double> times, abar_path, active_path;
    if (diag.contains("stored_steps")) {
        const auto steps = diag.at("stored_steps").get<std::vector<int>>();
        const auto all_times = diag.at("times").get<std::vector<double>>();
        std::vector<double> abar_t, abar_v;
        read_series_csv(run_dir + "/alpha_bar.csv", abar_t, abar_v);
        for (int step : steps) {
            const double t = all_times[step];
            const DensityState m = read_density_slice(run_dir, step, g);
            const ScalarField alpha = read_field_csv(
                run_dir + "/alpha_t" + std::to_string(step) + ".csv", g);
            const double population = node_count(t, cfg.market);
            times.push_back(t);
            abar_path.push_back(abar_v[step]);
            active_path.push_back(active_node_count(m, alpha, population));
        }
    } else {
        // Steady run: one point at the horizon.
        const double t = cfg.equilibrium.horizon;
        DensityState m(g);
        m.interior = read_field_csv(run_dir + "/m_inf.csv", g);
        m.eta = read_eta_csv(run_dir + "/eta_inf.csv");
        const ScalarField alpha = read_field_csv(run_dir + "/alpha_inf.csv", g);
        const double population = node_count(t, cfg.market);
        times.push_back(t);
        abar_path.push_back(diag.at("alpha_bar_inf").get<double>());
        active_path.push_back(active_node_count(m, alpha, population));
    }

    const SecurityReport report = build_security_report(
        times, fractions, active_path, abar_path, cfg.market);

    std::ofstream sec(dir + "/security.csv");
    if (!sec) throw ConfigError("cannot write security.csv");
    sec << "t_fortnight,attacker_fraction,cost_usd_per_fortnight\n";
    for (std::size_t t = 0; t < report.times.size(); ++t) {
        for (std::size_t f = 0; f < report.fractions.size(); ++f) {
            sec << format_double(report.times[t]) << ","
                << format_double(report.fractions[f]) << ","
                << format_double(report.cost[t][f]) << "\n";
        }
    }
    write_series_csv(dir + "/active_nodes.csv", "t_fortnight,active_nodes",
                     report.times, report.active_nodes);

    nlohmann::json aj = {{"source_run", run_dir},
                         {"fractions", report.fractions},
                         {"times", report.times},
                         {"active_nodes", report.active_nodes},
                         {"cost_usd_per_fortnight", report.cost}};
    write_json(dir + "/analysis.json", aj);

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config = manifest_json.at("config");
    manifest.outputs = {"security.csv", "active_nodes.csv", "analysis.json"};
    manifest.converged = true;
    manifest.started_at = manifest.finished_at = iso_timestamp();
    write_manifest(dir, manifest);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proof-of-Work mining equilibrium solver"};
    app.require_subcommand(1);

    auto* protocol_cmd =
        app.add_subcommand("protocol", "Reward-schedule arithmetic");
    std::int64_t blocks = -1;
    bool sweep = false;
    double fee_floor = 0.0;
    double nodes = 1.0;
    std::string proto_out;
    auto* blocks_opt =
        protocol_cmd->add_option("--blocks", blocks, "Retarget windows found");
    protocol_cmd->add_flag("--sweep-halvings", sweep,
                           "One row per halving epoch");
    protocol_cmd->add_option("--fee-floor", fee_floor, "Fee floor in tokens");
    protocol_cmd->add_option("--nodes", nodes, "Node count for difficulty");
    protocol_cmd->add_option("--out", proto_out, "Also write the table here");

    auto* steady_cmd = app.add_subcommand("steady", "Long-run fixed point");
    std::string steady_config, steady_out;
    steady_cmd->add_option("--config", steady_config, "Config file")->required();
    steady_cmd->add_option("--out", steady_out, "Output directory");

    auto* transient_cmd =
        app.add_subcommand("transient", "Backward-forward sweeps");
    std::string transient_config, transient_out;
    transient_cmd->add_option("--config", transient_config, "Config file")
        ->required();
    transient_cmd->add_option("--out", transient_out, "Output directory");

    auto* sim_cmd = app.add_subcommand("simulate", "Agent-based validation");
    std::string sim_config, sim_out, sim_reference;
    int sim_agents = 0;
    std::int64_t sim_seed = -1;
    sim_cmd->add_option("--config", sim_config, "Config file")->required();
    sim_cmd->add_option("--out", sim_out, "Output directory");
    sim_cmd->add_option("--agents", sim_agents, "Agent count override");
    sim_cmd->add_option("--seed", sim_seed, "Seed override");
    sim_cmd->add_option("--reference", sim_reference,
                        "Transient run directory to validate against");
    int sim_from_step = 0;
    sim_cmd->add_option("--from-step", sim_from_step,
                        "Stored slice to start the replay from");

    auto* fit_cmd = app.add_subcommand("fit", "Least-squares estimation");
    std::string fit_data, fit_model, fit_out;
    fit_cmd->add_option("--data", fit_data, "Two-column CSV")->required();
    fit_cmd->add_option("--model", fit_model, "power | logrev | exp")
        ->required();
    fit_cmd->add_option("--out", fit_out, "Write the result JSON here");

    auto* analyze_cmd = app.add_subcommand("analyze", "Post-run analyzers");
    std::string analyze_run, analyze_out;
    std::vector<double> analyze_fractions;
    analyze_cmd->add_option("--run", analyze_run, "Run directory")->required();
    analyze_cmd->add_option("--out", analyze_out, "Output directory");
    analyze_cmd->add_option("--fractions", analyze_fractions,
                            "Attacker hashrate shares");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (protocol_cmd->parsed()) {
            if (!sweep && blocks_opt->count() == 0) {
                std::cerr << "protocol: pass --blocks N or --sweep-halvings\n";
                return kExitUsage;
            }
            if (!sweep && blocks < 0) {
                std::cerr << "protocol: --blocks must be nonnegative\n";
                return kExitUsage;
            }
            return cmd_protocol(sweep ? 0 : blocks, sweep, fee_floor, nodes,
                                proto_out);
        }
        if (steady_cmd->parsed()) return cmd_steady(steady_config, steady_out);
        if (transient_cmd->parsed()) {
            return cmd_transient(transient_config, transient_out);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(sim_config, sim_out, sim_agents, sim_seed,
                                sim_reference, sim_from_step);
        }
        if (fit_cmd->parsed()) return cmd_fit(fit_data, fit_model, fit_out);
        if (analyze_cmd->parsed()) {
            return cmd_analyze(analyze_run, analyze_out, analyze_fractions);
        }
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const CflError& e) {
        std::cerr << "stability error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitUsage;
}
