#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace powmfg {

// Iterative solver failed to reach its tolerance; keeps the residual trace
// so callers can report how far the run got.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> residuals = {})
        : std::runtime_error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

// Explicit transport step exceeded its stability bound.
class CflError : public std::runtime_error {
public:
    CflError(const std::string& what, double offending_dt, double max_stable_dt)
        : std::runtime_error(what), dt_(offending_dt), dt_max_(max_stable_dt) {}

    double offending_dt() const { return dt_; }
    double max_stable_dt() const { return dt_max_; }

private:
    double dt_;
    double dt_max_;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace powmfg
