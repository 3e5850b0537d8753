#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "powmfg/equilibrium.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/market.hpp"
#include "powmfg/protocol.hpp"

namespace powmfg {

struct SimParams {
    int agents = 1000;
    double dt = 0.05;
    double horizon = 50.0;
    std::uint64_t seed = 1;
    std::string policy = "field";  // "field" or "static"
    std::vector<double> snapshot_times;
};

// One file drives a run: grid, protocol, market, solver, and simulation
// settings plus the worker count. The grid defaults to desk scale.
struct RunConfig {
    Grid2D grid{50, 50, 5e13, 4.6e13};
    ProtocolParams protocol{};
    MarketParams market{};
    EquilibriumConfig equilibrium{};
    SimParams sim{};
    int threads = 1;

    void validate() const;
};

// Load a config from TOML or JSON (chosen by extension). A run manifest is
// accepted too; its embedded config snapshot is used.
RunConfig load_run_config(const std::string& path);

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// Minimal TOML reader covering the config schema: [sections], scalar
// key = value pairs, arrays of numbers, comments.
nlohmann::json parse_toml(const std::string& text);

}  // namespace powmfg
