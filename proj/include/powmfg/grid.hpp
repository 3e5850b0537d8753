#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace powmfg {

// Uniform rectangle over wealth x (rows) and token price b (columns), both
// anchored at zero. Node (i, j) sits at (i*dx, j*db).
struct Grid2D {
    int nx = 200;
    int ny = 220;
    double dx = 5e13;
    double db = 4.6e13;

    Grid2D() = default;
    Grid2D(int nx_, int ny_, double dx_, double db_);

    double x(int i) const { return dx * i; }
    double b(int j) const { return db * j; }
    double x_max() const { return dx * (nx - 1); }
    double b_max() const { return db * (ny - 1); }
    std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }

    void validate() const;
    bool operator==(const Grid2D&) const = default;
};

// Real-valued function sampled on grid nodes, wealth-major so the price
// index is innermost.
class ScalarField {
public:
    explicit ScalarField(const Grid2D& g, double fill = 0.0)
        : grid_(g), values_(g.cells(), fill) {}

    double& operator()(int i, int j) { return values_[idx(i, j)]; }
    double operator()(int i, int j) const { return values_[idx(i, j)]; }

    const Grid2D& grid() const { return grid_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * grid_.ny + j;
    }

    Grid2D grid_;
    std::vector<double> values_;
};

// Bilinear interpolation; out-of-range coordinates clamp to the boundary.
double interpolate(const ScalarField& f, double x, double b);

// Cell-sum quadrature. The x = 0 column is the carrier of the singular
// boundary measure and is weighted by db alone; interior cells carry dx*db.
double integrate(const ScalarField& f);

// Up to two wealth indices with convex weights, splitting a point between
// neighboring nodes. Shared by the jump gather/scatter stencils.
struct WealthSplit {
    int count = 0;
    std::array<int, 2> index{0, 0};
    std::array<double, 2> weight{0.0, 0.0};
};

// Pre-jump wealth location x_i - k*b_j split over wealth nodes; empty when
// the source would be negative (no inflow from below zero wealth).
WealthSplit jump_source_index(int i, int j, double k, const Grid2D& g);

// Post-jump wealth location x_i + k*b_j split over wealth nodes, clamped to
// the top row, so the weights always sum to one.
WealthSplit jump_destination_index(int i, int j, double k, const Grid2D& g);

double max_abs_diff(const ScalarField& a, const ScalarField& b);

}  // namespace powmfg
