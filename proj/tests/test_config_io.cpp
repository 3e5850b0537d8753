#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "powmfg/config.hpp"
#include "powmfg/errors.hpp"
#include "powmfg/io.hpp"
#include "test_helpers.hpp"

using namespace powmfg;
using namespace powmfg::testing;
namespace fs = std::filesystem;

namespace {

std::string temp_dir() {
    const fs::path d = fs::temp_directory_path() / "powmfg_io_test";
    fs::create_directories(d);
    return d.string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("toml subset parsing") {
    const std::string text =
        "# comment\n"
        "threads = 4\n"
        "\n"
        "[grid]\n"
        "nx = 40   # trailing comment\n"
        "ny = 30\n"
        "dx = 5e13\n"
        "db = 4.6e13\n"
        "[simulate]\n"
        "policy = \"static\"\n"
        "snapshot_times = [1.0, 2.5, 10]\n";
    const nlohmann::json j = parse_toml(text);
    CHECK(j["threads"] == 4);
    CHECK(j["grid"]["nx"] == 40);
    CHECK(j["grid"]["dx"] == 5e13);
    CHECK(j["simulate"]["policy"] == "static");
    CHECK(j["simulate"]["snapshot_times"].size() == 3);

    CHECK_THROWS_AS(parse_toml("key value\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[broken\n"), ConfigError);
}

TEST_CASE("config loading from toml and json agrees") {
    const std::string dir = temp_dir();
    const std::string toml_path = dir + "/cfg.toml";
    const std::string json_path = dir + "/cfg.json";
    write_text(toml_path,
               "[grid]\n"
               "nx = 20\n"
               "ny = 18\n"
               "dx = 1.0\n"
               "db = 2.0\n"
               "[protocol]\n"
               "fee_floor = 0.25\n"
               "[equilibrium]\n"
               "horizon = 64.0\n"
               "n_time_steps = 16\n"
               "intensity_mode = \"segment\"\n");
    write_text(json_path,
               R"({"grid": {"nx": 20, "ny": 18, "dx": 1.0, "db": 2.0},
                   "protocol": {"fee_floor": 0.25},
                   "equilibrium": {"horizon": 64.0, "n_time_steps": 16,
                                   "intensity_mode": "segment"}})");
    const RunConfig a = load_run_config(toml_path);
    const RunConfig b = load_run_config(json_path);
    CHECK(a.grid.nx == 20);
    CHECK(a.grid == b.grid);
    CHECK(a.protocol.fee_floor == b.protocol.fee_floor);
    CHECK(a.equilibrium.horizon == 64.0);
    CHECK(a.equilibrium.intensity_mode == IntensityMode::segment);
    CHECK(b.equilibrium.intensity_mode == IntensityMode::segment);
    // Untouched sections keep their defaults.
    CHECK(a.market.theta1 == 132.82);

    // Round trip through the manifest snapshot.
    const RunConfig c = run_config_from_json(config_to_json(a));
    CHECK(c.grid == a.grid);
    CHECK(c.equilibrium.horizon == a.equilibrium.horizon);
}

TEST_CASE("config rejects unknown keys and bad grids") {
    const std::string dir = temp_dir();
    const std::string p1 = dir + "/bad1.toml";
    write_text(p1, "[grid]\nnx = 20\ntypo_key = 3\n");
    CHECK_THROWS_AS(load_run_config(p1), ConfigError);

    const std::string p2 = dir + "/bad2.toml";
    write_text(p2, "[grid]\nnx = 1\n");
    CHECK_THROWS_AS(load_run_config(p2), std::domain_error);
}

TEST_CASE("field csv round trip") {
    const Grid2D g = toy_grid(7, 5);
    ScalarField f(g);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) f(i, j) = std::sin(i * 3.7 + j) * 1e13;
    }
    const std::string path = temp_dir() + "/field.csv";
    write_field_csv(path, f);
    const ScalarField back = read_field_csv(path, g);
    CHECK(max_abs_diff(f, back) == 0.0);

    const nlohmann::json env = field_json_envelope(f);
    CHECK(env["grid"]["nx"] == 7);
    CHECK(env["values"].size() == g.cells());

    DensityState s(g);
    s.eta[2] = 0.5 / g.db;
    s.interior(3, 1) = 0.5 / (g.dx * g.db);
    const nlohmann::json denv = density_json_envelope(s);
    CHECK(denv["eta"].size() == static_cast<std::size_t>(g.ny));
    CHECK(denv["total_mass"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("eta and series round trips") {
    const std::string dir = temp_dir();
    const std::vector<double> eta{0.0, 1.5e-3, 2.25, 7.0};
    write_eta_csv(dir + "/eta.csv", eta);
    CHECK(read_eta_csv(dir + "/eta.csv") == eta);

    const std::vector<double> t{0.0, 1.0, 2.0};
    const std::vector<double> v{5.0, 6.5, 8.25};
    write_series_csv(dir + "/series.csv", "t,v", t, v);
    std::vector<double> t2, v2;
    read_series_csv(dir + "/series.csv", t2, v2);
    CHECK(t2 == t);
    CHECK(v2 == v);
}

TEST_CASE("pairs csv requires a header and two columns") {
    const std::string dir = temp_dir();
    write_text(dir + "/pairs.csv", "t,value\n1,10\n2,40\n");
    const auto pairs = read_pairs_csv(dir + "/pairs.csv");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].second == 40.0);

    write_text(dir + "/empty.csv", "");
    CHECK_THROWS_AS(read_pairs_csv(dir + "/empty.csv"), FitError);
}

TEST_CASE("manifest lists only existing outputs") {
    const std::string dir = temp_dir() + "/run";
    fs::create_directories(dir);
    write_text(dir + "/out.csv", "x\n1\n");
    RunManifest m;
    m.command = "steady";
    m.config = nlohmann::json::object();
    m.outputs = {"out.csv"};
    m.started_at = m.finished_at = iso_timestamp();
    write_manifest(dir, m);
    CHECK(fs::exists(dir + "/run_manifest.json"));

    m.outputs.push_back("missing.csv");
    CHECK_THROWS(write_manifest(dir, m));
}
