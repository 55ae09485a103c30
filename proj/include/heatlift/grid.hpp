#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace heatlift {

/// Uniform space(-time) grid; y_nodes empty for 1D-in-space fields.
struct SpaceTimeGrid {
    std::vector<double> t_nodes;
    std::vector<double> x_nodes;
    std::vector<double> y_nodes;
    double dt = 0.0;
    double dx = 0.0;
    double dy = 0.0;

    bool two_d() const { return !y_nodes.empty(); }
    std::size_t nt() const { return t_nodes.size(); }
    std::size_t nx() const { return x_nodes.size(); }
    std::size_t ny() const { return two_d() ? y_nodes.size() : 1; }
    double horizon() const { return t_nodes.back(); }

    static SpaceTimeGrid uniform_1d(double horizon, std::size_t nt, double x_lo, double x_hi,
                                    std::size_t nx) {
        SpaceTimeGrid g;
        fill_axis(g.t_nodes, 0.0, horizon, nt);
        fill_axis(g.x_nodes, x_lo, x_hi, nx);
        g.dt = horizon / static_cast<double>(nt - 1);
        g.dx = (x_hi - x_lo) / static_cast<double>(nx - 1);
        g.validate();
        return g;
    }

    static SpaceTimeGrid uniform_2d(double horizon, std::size_t nt, double x_lo, double x_hi,
                                    std::size_t nx, double y_lo, double y_hi, std::size_t ny) {
        SpaceTimeGrid g = uniform_1d(horizon, nt, x_lo, x_hi, nx);
        fill_axis(g.y_nodes, y_lo, y_hi, ny);
        g.dy = (y_hi - y_lo) / static_cast<double>(ny - 1);
        g.validate();
        return g;
    }

    /// Spacings uniform to 1e-12 relative, t starts at 0.
    void validate() const {
        if (t_nodes.size() < 2 || x_nodes.size() < 2)
            throw std::invalid_argument("grid: need at least two nodes per axis");
        if (t_nodes.front() != 0.0) throw std::invalid_argument("grid: t_nodes must start at 0");
        check_uniform(t_nodes, dt, "t");
        check_uniform(x_nodes, dx, "x");
        if (two_d()) check_uniform(y_nodes, dy, "y");
    }

    std::size_t nearest_x(double x) const { return nearest(x_nodes, x); }
    std::size_t nearest_y(double y) const { return nearest(y_nodes, y); }
    std::size_t nearest_t(double t) const { return nearest(t_nodes, t); }

  private:
    static void fill_axis(std::vector<double>& out, double lo, double hi, std::size_t n) {
        if (n < 2) throw std::invalid_argument("grid: axis needs >= 2 nodes");
        out.resize(n);
        const double d = (hi - lo) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) out[i] = lo + d * static_cast<double>(i);
        out.back() = hi;
    }

    static void check_uniform(const std::vector<double>& v, double d, const char* axis) {
        const double scale = std::max(std::abs(v.front()), std::abs(v.back())) + std::abs(d);
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (std::abs((v[i] - v[i - 1]) - d) > 1e-12 * scale)
                throw std::invalid_argument(std::string("grid: non-uniform spacing on axis ") + axis);
        }
    }

    static std::size_t nearest(const std::vector<double>& v, double x) {
        std::size_t best = 0;
        double err = std::abs(v[0] - x);
        for (std::size_t i = 1; i < v.size(); ++i) {
            const double e = std::abs(v[i] - x);
            if (e < err) {
                err = e;
                best = i;
            }
        }
        return best;
    }
};

/// Function values on a SpaceTimeGrid, (t, x[, y]) row-major.
struct ScalarField {
    SpaceTimeGrid grid;
    std::vector<double> values;

    static ScalarField zeros(SpaceTimeGrid g) {
        ScalarField f;
        f.values.assign(g.nt() * g.nx() * g.ny(), 0.0);
        f.grid = std::move(g);
        return f;
    }

    std::size_t index(std::size_t it, std::size_t ix, std::size_t iy = 0) const {
        return (it * grid.nx() + ix) * grid.ny() + iy;
    }
    double& at(std::size_t it, std::size_t ix, std::size_t iy = 0) {
        return values[index(it, ix, iy)];
    }
    double at(std::size_t it, std::size_t ix, std::size_t iy = 0) const {
        return values[index(it, ix, iy)];
    }

    void check_shape() const {
        if (values.size() != grid.nt() * grid.nx() * grid.ny())
            throw std::invalid_argument("field: value count does not match grid");
    }
    void check_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("field: non-finite value");
    }
};

}  // namespace heatlift
