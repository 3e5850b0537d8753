#include "powmfg/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "powmfg/errors.hpp"

namespace powmfg {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("io: cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io: cannot read " + path);
    return in;
}

std::vector<double> split_numbers(const std::string& line) {
    std::vector<double> out;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(std::stod(cell));
    }
    return out;
}

}  // namespace

void write_field_csv(const std::string& path, const ScalarField& f) {
    const Grid2D& g = f.grid();
    std::ofstream out = open_out(path);
    for (int j = 0; j < g.ny; ++j) {
        out << (j ? "," : "") << "price_" << j;
    }
    out << "\n";
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            out << (j ? "," : "") << format_double(f(i, j));
        }
        out << "\n";
    }
}

ScalarField read_field_csv(const std::string& path, const Grid2D& g) {
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    ScalarField f(g);
    for (int i = 0; i < g.nx; ++i) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("io: " + path + " has too few rows");
        }
        const std::vector<double> row = split_numbers(line);
        if (static_cast<int>(row.size()) != g.ny) {
            throw std::runtime_error("io: " + path + " row width mismatch");
        }
        for (int j = 0; j < g.ny; ++j) f(i, j) = row[j];
    }
    return f;
}

nlohmann::json field_json_envelope(const ScalarField& f) {
    const Grid2D& g = f.grid();
    return {{"grid", {{"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"db", g.db}}},
            {"values", f.data()}};
}

nlohmann::json density_json_envelope(const DensityState& s) {
    nlohmann::json j = field_json_envelope(s.interior);
    j["eta"] = s.eta;
    j["total_mass"] = s.total_mass();
    return j;
}

void write_eta_csv(const std::string& path, const std::vector<double>& eta) {
    std::ofstream out = open_out(path);
    out << "eta\n";
    for (double e : eta) out << format_double(e) << "\n";
}

std::vector<double> read_eta_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> eta;
    while (std::getline(in, line)) {
        if (!line.empty()) eta.push_back(std::stod(line));
    }
    return eta;
}

void write_density(const std::string& dir, const std::string& stem,
                   const DensityState& s) {
    write_field_csv(dir + "/" + stem + ".csv", s.interior);
    write_eta_csv(dir + "/" + stem + "_eta.csv", s.eta);
}

DensityState read_density(const std::string& dir, const std::string& stem,
                          const Grid2D& g) {
    DensityState s(g);
    s.interior = read_field_csv(dir + "/" + stem + ".csv", g);
    s.eta = read_eta_csv(dir + "/" + stem + "_eta.csv");
    if (static_cast<int>(s.eta.size()) != g.ny) {
        throw std::runtime_error("io: eta length mismatch in " + stem);
    }
    return s;
}

void write_series_csv(const std::string& path, const std::string& header,
                      const std::vector<double>& t,
                      const std::vector<double>& v) {
    if (t.size() != v.size()) {
        throw std::invalid_argument("io: series columns differ in length");
    }
    std::ofstream out = open_out(path);
    out << header << "\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        out << format_double(t[k]) << "," << format_double(v[k]) << "\n";
    }
}

void read_series_csv(const std::string& path, std::vector<double>& t,
                     std::vector<double>& v) {
    std::ifstream in = open_in(path);
    std::string line;
    std::getline(in, line);  // header
    t.clear();
    v.clear();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> row = split_numbers(line);
        if (row.size() != 2) throw std::runtime_error("io: bad series row in " + path);
        t.push_back(row[0]);
        v.push_back(row[1]);
    }
}

void write_wealth_marginals_csv(const std::string& path,
                                const std::vector<double>& times,
                                const std::vector<std::vector<double>>& rows) {
    if (times.size() != rows.size()) {
        throw std::invalid_argument("io: marginal rows differ in length");
    }
    std::ofstream out = open_out(path);
    out << "t_fortnight";
    if (!rows.empty()) {
        for (std::size_t i = 0; i < rows[0].size(); ++i) out << ",mass_x" << i;
    }
    out << "\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out << format_double(times[k]);
        for (double m : rows[k]) out << "," << format_double(m);
        out << "\n";
    }
}

void write_snapshots_csv(const std::string& path,
                         const std::vector<Snapshot>& snapshots) {
    std::ofstream out = open_out(path);
    out << "t_fortnight,wealth_usd,price_usd_per_token,active\n";
    for (const Snapshot& s : snapshots) {
        for (const AgentState& a : s.agents) {
            out << format_double(s.t) << "," << format_double(a.wealth) << ","
                << format_double(a.price) << "," << (a.active ? 1 : 0) << "\n";
        }
    }
}

std::vector<std::pair<double, double>> read_pairs_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw FitError("io: empty data file " + path);
    }
    std::vector<std::pair<double, double>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> row = split_numbers(line);
        if (row.size() < 2) throw FitError("io: bad data row in " + path);
        out.emplace_back(row[0], row[1]);
    }
    return out;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& dir, const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["version"] = kVersion;
    j["config"] = m.config;
    j["outputs"] = m.outputs;
    j["convergence"] = {{"converged", m.converged},
                        {"final_residual", m.final_residual}};
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;

    for (const std::string& rel : m.outputs) {
        if (!fs::exists(fs::path(dir) / rel)) {
            throw std::runtime_error("io: manifest lists missing output " + rel);
        }
    }
    const fs::path tmp = fs::path(dir) / "run_manifest.json.tmp";
    const fs::path final_path = fs::path(dir) / "run_manifest.json";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("io: cannot write manifest");
        out << j.dump(2) << "\n";
    }
    fs::rename(tmp, final_path);
}

}  // namespace powmfg
