#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "powmfg/fokker_planck.hpp"
#include "powmfg/grid.hpp"
#include "powmfg/montecarlo.hpp"

namespace powmfg {

inline constexpr const char* kVersion = "0.1.0";

// Shortest round-trippable decimal form, so reruns are byte-identical.
std::string format_double(double v);

void write_field_csv(const std::string& path, const ScalarField& f);
ScalarField read_field_csv(const std::string& path, const Grid2D& g);

nlohmann::json field_json_envelope(const ScalarField& f);
nlohmann::json density_json_envelope(const DensityState& s);

void write_eta_csv(const std::string& path, const std::vector<double>& eta);
std::vector<double> read_eta_csv(const std::string& path);

void write_density(const std::string& dir, const std::string& stem,
                   const DensityState& s);
DensityState read_density(const std::string& dir, const std::string& stem,
                          const Grid2D& g);

void write_series_csv(const std::string& path, const std::string& header,
                      const std::vector<double>& t,
                      const std::vector<double>& v);
void read_series_csv(const std::string& path, std::vector<double>& t,
                     std::vector<double>& v);

void write_wealth_marginals_csv(const std::string& path,
                                const std::vector<double>& times,
                                const std::vector<std::vector<double>>& rows);

void write_snapshots_csv(const std::string& path,
                         const std::vector<Snapshot>& snapshots);

// Simple two-column CSV with one header line; used by the fitters.
std::vector<std::pair<double, double>> read_pairs_csv(const std::string& path);

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::vector<std::string> outputs;
    bool converged = false;
    double final_residual = 0.0;
    std::string started_at;
    std::string finished_at;
};

// Written last, via a temp file and rename, so a manifest implies the run
// finished and every listed output exists.
void write_manifest(const std::string& dir, const RunManifest& m);

std::string iso_timestamp();

}  // namespace powmfg
