#include "powmfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace powmfg {

Grid2D::Grid2D(int nx_, int ny_, double dx_, double db_)
    : nx(nx_), ny(ny_), dx(dx_), db(db_) {
    validate();
}

void Grid2D::validate() const {
    if (nx < 3 || ny < 3) {
        throw std::domain_error("grid: need at least 3 nodes per dimension");
    }
    if (!(dx > 0.0) || !(db > 0.0)) {
        throw std::domain_error("grid: spacings must be positive");
    }
}

double interpolate(const ScalarField& f, double x, double b) {
    const Grid2D& g = f.grid();
    const double sx = std::clamp(x / g.dx, 0.0, static_cast<double>(g.nx - 1));
    const double sb = std::clamp(b / g.db, 0.0, static_cast<double>(g.ny - 1));
    const int i0 = std::min(static_cast<int>(sx), g.nx - 2);
    const int j0 = std::min(static_cast<int>(sb), g.ny - 2);
    const double fx = sx - i0;
    const double fb = sb - j0;
    return (1.0 - fx) * ((1.0 - fb) * f(i0, j0) + fb * f(i0, j0 + 1)) +
           fx * ((1.0 - fb) * f(i0 + 1, j0) + fb * f(i0 + 1, j0 + 1));
}

double integrate(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double line = 0.0;
    for (int j = 0; j < g.ny; ++j) line += f(0, j);
    double area = 0.0;
    for (int i = 1; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) area += f(i, j);
    }
    return line * g.db + area * g.dx * g.db;
}

namespace {

WealthSplit split_at(double position, const Grid2D& g) {
    WealthSplit out;
    if (position < 0.0) {
        return out;
    }
    if (position >= g.x_max()) {
        out.count = 1;
        out.index[0] = g.nx - 1;
        out.weight[0] = 1.0;
        return out;
    }
    const double s = position / g.dx;
    const int i0 = std::min(static_cast<int>(s), g.nx - 2);
    const double frac = s - i0;
    if (frac == 0.0) {
        out.count = 1;
        out.index[0] = i0;
        out.weight[0] = 1.0;
        return out;
    }
    out.count = 2;
    out.index = {i0, i0 + 1};
    out.weight = {1.0 - frac, frac};
    return out;
}

}  // namespace

WealthSplit jump_source_index(int i, int j, double k, const Grid2D& g) {
    return split_at(g.x(i) - k * g.b(j), g);
}

WealthSplit jump_destination_index(int i, int j, double k, const Grid2D& g) {
    return split_at(g.x(i) + k * g.b(j), g);
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    const auto& va = a.data();
    const auto& vb = b.data();
    for (std::size_t n = 0; n < va.size(); ++n) {
        m = std::max(m, std::fabs(va[n] - vb[n]));
    }
    return m;
}

}  // namespace powmfg
