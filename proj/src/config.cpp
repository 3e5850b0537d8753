#include "powmfg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "powmfg/errors.hpp"

namespace powmfg {

using nlohmann::json;

void RunConfig::validate() const {
    grid.validate();
    protocol.validate();
    market.validate();
    equilibrium.validate();
    if (sim.agents < 1) throw ConfigError("config: simulate.agents must be positive");
    if (!(sim.dt > 0.0)) throw ConfigError("config: simulate.dt must be positive");
    if (!(sim.horizon > 0.0)) throw ConfigError("config: simulate.horizon must be positive");
    if (sim.policy != "field" && sim.policy != "static") {
        throw ConfigError("config: simulate.policy must be \"field\" or \"static\"");
    }
    if (threads < 1) throw ConfigError("config: threads must be positive");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

json parse_toml_scalar(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) {
        throw ConfigError("config: empty value on line " + std::to_string(line_no));
    }
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') {
            throw ConfigError("config: unterminated string on line " +
                              std::to_string(line_no));
        }
        return json(v.substr(1, v.size() - 2));
    }
    if (v == "true") return json(true);
    if (v == "false") return json(false);
    try {
        std::size_t used = 0;
        if (v.find_first_of(".eE") == std::string::npos) {
            const long long i = std::stoll(v, &used);
            if (used == v.size()) return json(i);
        }
        used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return json(d);
    } catch (const std::exception&) {
        // fall through to the error below
    }
    throw ConfigError("config: cannot parse value '" + v + "' on line " +
                      std::to_string(line_no));
}

}  // namespace

json parse_toml(const std::string& text) {
    json root = json::object();
    json* section = &root;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: malformed section header on line " +
                                  std::to_string(line_no));
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            section = &root[name];
            if (section->is_null()) *section = json::object();
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value on line " +
                              std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config: missing key on line " + std::to_string(line_no));
        }
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') {
                throw ConfigError("config: unterminated array on line " +
                                  std::to_string(line_no));
            }
            json arr = json::array();
            std::string body = value.substr(1, value.size() - 2);
            std::istringstream items(body);
            std::string item;
            while (std::getline(items, item, ',')) {
                if (trim(item).empty()) continue;
                arr.push_back(parse_toml_scalar(item, line_no));
            }
            (*section)[key] = std::move(arr);
        } else {
            (*section)[key] = parse_toml_scalar(value, line_no);
        }
    }
    return root;
}

namespace {

template <typename T>
void take(json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) {
        out = it->get<T>();
        obj.erase(it);
    }
}

void reject_unknown(const json& obj, const std::string& where) {
    if (!obj.empty()) {
        throw ConfigError("config: unknown key '" + obj.begin().key() + "' in " +
                          where);
    }
}

}  // namespace

RunConfig run_config_from_json(const json& input) {
    json j = input;
    if (j.contains("config")) j = j["config"];  // accept a run manifest
    RunConfig cfg;

    if (j.contains("grid")) {
        json s = j["grid"];
        take(s, "nx", cfg.grid.nx);
        take(s, "ny", cfg.grid.ny);
        take(s, "dx", cfg.grid.dx);
        take(s, "db", cfg.grid.db);
        reject_unknown(s, "[grid]");
        j.erase("grid");
    }
    if (j.contains("protocol")) {
        json s = j["protocol"];
        take(s, "retarget_blocks", cfg.protocol.retarget_blocks);
        take(s, "halving_blocks", cfg.protocol.halving_blocks);
        take(s, "base_reward", cfg.protocol.base_reward);
        take(s, "fee_floor", cfg.protocol.fee_floor);
        take(s, "max_halvings", cfg.protocol.max_halvings);
        take(s, "target_block_seconds", cfg.protocol.target_block_seconds);
        reject_unknown(s, "[protocol]");
        j.erase("protocol");
    }
    if (j.contains("market")) {
        json s = j["market"];
        take(s, "theta1", cfg.market.theta1);
        take(s, "theta2", cfg.market.theta2);
        take(s, "theta3", cfg.market.theta3);
        take(s, "unit_cost", cfg.market.unit_cost);
        take(s, "sigma", cfg.market.sigma);
        take(s, "beta", cfg.market.beta);
        take(s, "discount", cfg.market.discount);
        take(s, "node_growth_a", cfg.market.node_growth_a);
        take(s, "node_growth_b", cfg.market.node_growth_b);
        reject_unknown(s, "[market]");
        j.erase("market");
    }
    if (j.contains("equilibrium")) {
        json s = j["equilibrium"];
        take(s, "horizon", cfg.equilibrium.horizon);
        take(s, "n_time_steps", cfg.equilibrium.n_time_steps);
        take(s, "fp_tol", cfg.equilibrium.fp_tol);
        take(s, "hjb_tol", cfg.equilibrium.hjb_tol);
        take(s, "fixed_point_tol", cfg.equilibrium.fixed_point_tol);
        take(s, "max_outer_iter", cfg.equilibrium.max_outer_iter);
        take(s, "initial_alpha_bar", cfg.equilibrium.initial_alpha_bar);
        take(s, "inertia_w", cfg.equilibrium.inertia_w);
        take(s, "inertia_w_max", cfg.equilibrium.inertia_w_max);
        take(s, "alpha_bar_floor", cfg.equilibrium.alpha_bar_floor);
        take(s, "thin_every", cfg.equilibrium.thin_every);
        take(s, "stationary_dt", cfg.equilibrium.stationary_dt);
        std::string mode;
        take(s, "intensity_mode", mode);
        if (!mode.empty()) {
            if (mode == "asymptotic") {
                cfg.equilibrium.intensity_mode = IntensityMode::asymptotic;
            } else if (mode == "segment") {
                cfg.equilibrium.intensity_mode = IntensityMode::segment;
            } else {
                throw ConfigError("config: intensity_mode must be 'asymptotic' or 'segment'");
            }
        }
        std::string inertia;
        take(s, "inertia_mode", inertia);
        if (!inertia.empty()) {
            if (inertia == "fixed") {
                cfg.equilibrium.inertia_mode = InertiaMode::fixed;
            } else if (inertia == "adaptive") {
                cfg.equilibrium.inertia_mode = InertiaMode::adaptive;
            } else {
                throw ConfigError("config: inertia_mode must be 'fixed' or 'adaptive'");
            }
        }
        reject_unknown(s, "[equilibrium]");
        j.erase("equilibrium");
    }
    if (j.contains("simulate")) {
        json s = j["simulate"];
        take(s, "agents", cfg.sim.agents);
        take(s, "dt", cfg.sim.dt);
        take(s, "horizon", cfg.sim.horizon);
        take(s, "seed", cfg.sim.seed);
        take(s, "policy", cfg.sim.policy);
        take(s, "snapshot_times", cfg.sim.snapshot_times);
        reject_unknown(s, "[simulate]");
        j.erase("simulate");
    }
    take(j, "threads", cfg.threads);
    reject_unknown(j, "top level");

    cfg.validate();
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json j;
    j["grid"] = {{"nx", cfg.grid.nx},
                 {"ny", cfg.grid.ny},
                 {"dx", cfg.grid.dx},
                 {"db", cfg.grid.db}};
    j["protocol"] = {{"retarget_blocks", cfg.protocol.retarget_blocks},
                     {"halving_blocks", cfg.protocol.halving_blocks},
                     {"base_reward", cfg.protocol.base_reward},
                     {"fee_floor", cfg.protocol.fee_floor},
                     {"max_halvings", cfg.protocol.max_halvings},
                     {"target_block_seconds", cfg.protocol.target_block_seconds}};
    j["market"] = {{"theta1", cfg.market.theta1},
                   {"theta2", cfg.market.theta2},
                   {"theta3", cfg.market.theta3},
                   {"unit_cost", cfg.market.unit_cost},
                   {"sigma", cfg.market.sigma},
                   {"beta", cfg.market.beta},
                   {"discount", cfg.market.discount},
                   {"node_growth_a", cfg.market.node_growth_a},
                   {"node_growth_b", cfg.market.node_growth_b}};
    j["equilibrium"] = {
        {"horizon", cfg.equilibrium.horizon},
        {"n_time_steps", cfg.equilibrium.n_time_steps},
        {"fp_tol", cfg.equilibrium.fp_tol},
        {"hjb_tol", cfg.equilibrium.hjb_tol},
        {"fixed_point_tol", cfg.equilibrium.fixed_point_tol},
        {"max_outer_iter", cfg.equilibrium.max_outer_iter},
        {"initial_alpha_bar", cfg.equilibrium.initial_alpha_bar},
        {"intensity_mode",
         cfg.equilibrium.intensity_mode == IntensityMode::asymptotic
             ? "asymptotic"
             : "segment"},
        {"inertia_mode", cfg.equilibrium.inertia_mode == InertiaMode::fixed
                             ? "fixed"
                             : "adaptive"},
        {"inertia_w", cfg.equilibrium.inertia_w},
        {"inertia_w_max", cfg.equilibrium.inertia_w_max},
        {"alpha_bar_floor", cfg.equilibrium.alpha_bar_floor},
        {"thin_every", cfg.equilibrium.thin_every},
        {"stationary_dt", cfg.equilibrium.stationary_dt}};
    j["simulate"] = {{"agents", cfg.sim.agents},
                     {"dt", cfg.sim.dt},
                     {"horizon", cfg.sim.horizon},
                     {"seed", cfg.sim.seed},
                     {"policy", cfg.sim.policy},
                     {"snapshot_times", cfg.sim.snapshot_times}};
    j["threads"] = cfg.threads;
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    json j;
    if (is_json) {
        j = json::parse(text, nullptr, true, true);
    } else {
        j = parse_toml(text);
    }
    return run_config_from_json(j);
}

}  // namespace powmfg
