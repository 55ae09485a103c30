#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatlift/grid.hpp"
#include "heatlift/rng.hpp"
#include "heatlift/source.hpp"
#include "heatlift/stats.hpp"

namespace heatlift {

/// Unit direction in the plane with its +90-degree orthogonal companion.
struct Direction {
    std::array<double, 2> l{1.0, 0.0};
    std::array<double, 2> perp{0.0, 1.0};

    static Direction from_angle(double radians) {
        Direction d;
        d.l = {std::cos(radians), std::sin(radians)};
        d.perp = {-d.l[1], d.l[0]};
        return d;
    }
    static Direction from_vector(double lx, double ly) {
        const double norm = std::hypot(lx, ly);
        if (!(norm > 0.0)) throw std::invalid_argument("direction: zero vector");
        Direction d;
        d.l = {lx / norm, ly / norm};
        d.perp = {-d.l[1], d.l[0]};
        return d;
    }
    void validate() const {
        const double n = std::hypot(l[0], l[1]);
        const double dot = l[0] * perp[0] + l[1] * perp[1];
        if (std::abs(n - 1.0) > 1e-12 || std::abs(dot) > 1e-12)
            throw std::invalid_argument("direction: not an orthonormal pair");
    }
};

/// Orthogonal map S(x,y) = x l1 + y l2 with l2 = l1 rotated by +90 degrees.
/// det S = +1 exactly.
struct RotationMap {
    Direction basis;

    std::array<double, 2> apply(double x, double y) const {
        return {x * basis.l[0] + y * basis.perp[0], x * basis.l[1] + y * basis.perp[1]};
    }
    std::array<double, 2> inverse(double x, double y) const {
        return {x * basis.l[0] + y * basis.l[1], x * basis.perp[0] + y * basis.perp[1]};
    }
    double determinant() const {
        return basis.l[0] * basis.perp[1] - basis.perp[0] * basis.l[1];
    }
};

inline RotationMap rotation_map(const Direction& l1) {
    l1.validate();
    return RotationMap{l1};
}

/// Max of |values| over all grid nodes.
inline double sup_norm(const ScalarField& field) {
    double m = 0.0;
    for (double v : field.values) m = std::max(m, std::abs(v));
    return m;
}

/// Pair-scan limits for the Holder estimators. Above the cutoff a fixed-seed
/// uniform sample of pairs is used instead of the full scan.
struct HolderOptions {
    std::size_t pair_cutoff = 10'000'000;
    std::size_t sample_pairs = 1'000'000;
};

namespace detail {

constexpr std::uint64_t kPairSampleSeed = 0x484F4C4452ull;

template <class Position, class Value>
double holder_scan(std::size_t n, Position&& pos_dist, Value&& val, double alpha,
                   const HolderOptions& opt, bool* subsampled) {
    if (n < 2) return 0.0;
    double best = 0.0;
    const std::size_t total_pairs = n * (n - 1) / 2;
    if (total_pairs <= opt.pair_cutoff) {
        if (subsampled) *subsampled = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double vi = val(i);
            for (std::size_t j = i + 1; j < n; ++j) {
                const double num = std::abs(val(j) - vi);
                if (num == 0.0) continue;
                best = std::max(best, num / std::pow(pos_dist(i, j), alpha));
            }
        }
        return best;
    }
    if (subsampled) *subsampled = true;
    Rng rng = Rng::keyed(kPairSampleSeed, n);
    for (std::size_t k = 0; k < opt.sample_pairs; ++k) {
        const std::size_t i = static_cast<std::size_t>(rng.uniform01() * n);
        const std::size_t j = static_cast<std::size_t>(rng.uniform01() * n);
        if (i == j || i >= n || j >= n) continue;
        const double num = std::abs(val(j) - val(i));
        if (num == 0.0) continue;
        best = std::max(best, num / std::pow(pos_dist(i, j), alpha));
    }
    return best;
}

}  // namespace detail

/// Grid Holder seminorm sup |f_i - f_j| / |x_i - x_j|^alpha over node pairs
/// of a 1D slice. A lower bound for the continuum seminorm.
inline double holder_seminorm_1d(std::span<const double> values, double dx, double alpha,
                                 const HolderOptions& opt = {}, bool* subsampled = nullptr) {
    return detail::holder_scan(
        values.size(),
        [dx](std::size_t i, std::size_t j) {
            return dx * static_cast<double>(j > i ? j - i : i - j);
        },
        [&values](std::size_t i) { return values[i]; }, alpha, opt, subsampled);
}

/// 2D version over all node pairs of an (nx x ny) slice, Euclidean distance.
inline double holder_seminorm_2d(std::span<const double> slice, std::size_t nx, std::size_t ny,
                                 double dx, double dy, double alpha, const HolderOptions& opt = {},
                                 bool* subsampled = nullptr) {
    if (slice.size() != nx * ny) throw std::invalid_argument("holder_seminorm_2d: size mismatch");
    return detail::holder_scan(
        slice.size(),
        [nx, ny, dx, dy](std::size_t i, std::size_t j) {
            const double ix = static_cast<double>(i / ny), iy = static_cast<double>(i % ny);
            const double jx = static_cast<double>(j / ny), jy = static_cast<double>(j % ny);
            return std::hypot(dx * (jx - ix), dy * (jy - iy));
        },
        [&slice](std::size_t i) { return slice[i]; }, alpha, opt, subsampled);
}

/// Holder seminorm of the spatial slice of a field at one time node.
inline double holder_seminorm(const ScalarField& field, std::size_t it, double alpha,
                              const HolderOptions& opt = {}, bool* subsampled = nullptr) {
    const auto& g = field.grid;
    const std::size_t offset = field.index(it, 0, 0);
    std::span<const double> slice(field.values.data() + offset, g.nx() * g.ny());
    if (g.two_d()) return holder_seminorm_2d(slice, g.nx(), g.ny(), g.dx, g.dy, alpha, opt, subsampled);
    return holder_seminorm_1d(slice, g.dx, alpha, opt, subsampled);
}

/// Bilinear interpolation of a 2D slice at (x, y); domain error outside the
/// window.
inline double bilinear(const ScalarField& field, std::size_t it, double x, double y) {
    const auto& g = field.grid;
    if (!g.two_d()) throw std::invalid_argument("bilinear: 2D field required");
    const double fx = (x - g.x_nodes.front()) / g.dx;
    const double fy = (y - g.y_nodes.front()) / g.dy;
    if (fx < -1e-9 || fy < -1e-9 || fx > static_cast<double>(g.nx() - 1) + 1e-9 ||
        fy > static_cast<double>(g.ny() - 1) + 1e-9)
        throw std::domain_error("bilinear: point outside grid window");
    std::size_t ix = static_cast<std::size_t>(std::max(0.0, std::min(fx, static_cast<double>(g.nx() - 2))));
    std::size_t iy = static_cast<std::size_t>(std::max(0.0, std::min(fy, static_cast<double>(g.ny() - 2))));
    const double ax = fx - static_cast<double>(ix);
    const double ay = fy - static_cast<double>(iy);
    return (1.0 - ax) * (1.0 - ay) * field.at(it, ix, iy) +
           ax * (1.0 - ay) * field.at(it, ix + 1, iy) +
           (1.0 - ax) * ay * field.at(it, ix, iy + 1) + ax * ay * field.at(it, ix + 1, iy + 1);
}

/// Centered second difference along a unit direction,
/// [f(z + step l) - 2 f(z) + f(z - step l)] / step^2, interior nodes only
/// (the returned field's spatial window is cropped by the stencil reach).
/// Axis-aligned directions read grid nodes exactly; oblique directions use
/// bilinear interpolation.
inline ScalarField directional_second_derivative(const ScalarField& field, const Direction& l,
                                                 double step) {
    const auto& g = field.grid;
    if (!g.two_d()) throw std::invalid_argument("directional_second_derivative: 2D field required");
    l.validate();
    if (!(step > 0.0)) throw std::invalid_argument("directional_second_derivative: step > 0");

    const bool axis_x = std::abs(std::abs(l.l[0]) - 1.0) < 1e-14;
    const bool axis_y = std::abs(std::abs(l.l[1]) - 1.0) < 1e-14;
    std::size_t mx, my;
    long sx = 0, sy = 0;
    if (axis_x || axis_y) {
        sx = std::llround(step * l.l[0] / g.dx);
        sy = std::llround(step * l.l[1] / g.dy);
        if (std::abs(sx * g.dx - step * l.l[0]) > 1e-10 ||
            std::abs(sy * g.dy - step * l.l[1]) > 1e-10)
            throw std::invalid_argument("directional_second_derivative: axis step must be a node multiple");
        mx = static_cast<std::size_t>(std::labs(sx));
        my = static_cast<std::size_t>(std::labs(sy));
    } else {
        mx = static_cast<std::size_t>(std::ceil(std::abs(step * l.l[0]) / g.dx - 1e-12)) + 1;
        my = static_cast<std::size_t>(std::ceil(std::abs(step * l.l[1]) / g.dy - 1e-12)) + 1;
    }
    if (2 * mx + 2 >= g.nx() || 2 * my + 2 >= g.ny())
        throw std::invalid_argument("directional_second_derivative: step too large for window");

    SpaceTimeGrid cropped = SpaceTimeGrid::uniform_2d(
        g.horizon(), g.nt(), g.x_nodes[mx], g.x_nodes[g.nx() - 1 - mx],
        g.nx() - 2 * mx, g.y_nodes[my], g.y_nodes[g.ny() - 1 - my], g.ny() - 2 * my);
    ScalarField out = ScalarField::zeros(cropped);
    const double inv2 = 1.0 / (step * step);
    for (std::size_t it = 0; it < g.nt(); ++it) {
        for (std::size_t ix = 0; ix < cropped.nx(); ++ix) {
            for (std::size_t iy = 0; iy < cropped.ny(); ++iy) {
                const std::size_t gx = ix + mx, gy = iy + my;
                double up, down;
                if (axis_x || axis_y) {
                    up = field.at(it, gx + sx, gy + sy);
                    down = field.at(it, gx - sx, gy - sy);
                } else {
                    const double x = g.x_nodes[gx], y = g.y_nodes[gy];
                    up = bilinear(field, it, x + step * l.l[0], y + step * l.l[1]);
                    down = bilinear(field, it, x - step * l.l[0], y - step * l.l[1]);
                }
                out.at(it, ix, iy) = (up - 2.0 * field.at(it, gx, gy) + down) * inv2;
            }
        }
    }
    return out;
}

/// Mixed second difference D_12 via the centered cross stencil, interior
/// nodes only.
inline ScalarField mixed_second_derivative(const ScalarField& field) {
    const auto& g = field.grid;
    if (!g.two_d()) throw std::invalid_argument("mixed_second_derivative: 2D field required");
    if (g.nx() < 3 || g.ny() < 3)
        throw std::invalid_argument("mixed_second_derivative: window too small");
    SpaceTimeGrid cropped = SpaceTimeGrid::uniform_2d(
        g.horizon(), g.nt(), g.x_nodes[1], g.x_nodes[g.nx() - 2], g.nx() - 2, g.y_nodes[1],
        g.y_nodes[g.ny() - 2], g.ny() - 2);
    ScalarField out = ScalarField::zeros(cropped);
    const double inv = 1.0 / (4.0 * g.dx * g.dy);
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix)
            for (std::size_t iy = 1; iy + 1 < g.ny(); ++iy)
                out.at(it, ix - 1, iy - 1) =
                    (field.at(it, ix + 1, iy + 1) - field.at(it, ix + 1, iy - 1) -
                     field.at(it, ix - 1, iy + 1) + field.at(it, ix - 1, iy - 1)) *
                    inv;
    return out;
}

/// D^2_l = l^i l^j D_ij realized by contracting the three centered axis
/// stencils (all node-exact reads; no oblique interpolation enters the
/// difference quotients).
inline ScalarField second_derivative_contraction(const ScalarField& field, const Direction& l) {
    const auto& g = field.grid;
    if (!g.two_d())
        throw std::invalid_argument("second_derivative_contraction: 2D field required");
    l.validate();
    if (g.nx() < 3 || g.ny() < 3)
        throw std::invalid_argument("second_derivative_contraction: window too small");
    SpaceTimeGrid cropped = SpaceTimeGrid::uniform_2d(
        g.horizon(), g.nt(), g.x_nodes[1], g.x_nodes[g.nx() - 2], g.nx() - 2, g.y_nodes[1],
        g.y_nodes[g.ny() - 2], g.ny() - 2);
    ScalarField out = ScalarField::zeros(cropped);
    const double cxx = l.l[0] * l.l[0] / (g.dx * g.dx);
    const double cyy = l.l[1] * l.l[1] / (g.dy * g.dy);
    const double cxy = 2.0 * l.l[0] * l.l[1] / (4.0 * g.dx * g.dy);
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix)
            for (std::size_t iy = 1; iy + 1 < g.ny(); ++iy) {
                const double f0 = field.at(it, ix, iy);
                const double dxx = field.at(it, ix + 1, iy) - 2.0 * f0 + field.at(it, ix - 1, iy);
                const double dyy = field.at(it, ix, iy + 1) - 2.0 * f0 + field.at(it, ix, iy - 1);
                const double dxy = field.at(it, ix + 1, iy + 1) - field.at(it, ix + 1, iy - 1) -
                                   field.at(it, ix - 1, iy + 1) + field.at(it, ix - 1, iy - 1);
                out.at(it, ix - 1, iy - 1) = cxx * dxx + cyy * dyy + cxy * dxy;
            }
    return out;
}

namespace detail {

/// Line Holder scan of one slice of an already-contracted D^2_l field.
inline double line_holder_of_d2(const ScalarField& d2, std::size_t it, const Direction& l,
                                std::array<double, 2> z, double alpha, double step) {
    const auto& cg = d2.grid;
    const double delta = std::min(cg.dx, cg.dy);
    // Range of mu for which z + mu l stays inside the window.
    double mu_lo = -std::numeric_limits<double>::infinity();
    double mu_hi = std::numeric_limits<double>::infinity();
    auto clip = [&](double comp, double zc, double lo, double hi) {
        if (std::abs(comp) < 1e-15) {
            if (zc < lo || zc > hi) mu_lo = 1.0, mu_hi = 0.0;  // empty
            return;
        }
        double a = (lo - zc) / comp, b = (hi - zc) / comp;
        if (a > b) std::swap(a, b);
        mu_lo = std::max(mu_lo, a);
        mu_hi = std::min(mu_hi, b);
    };
    clip(l.l[0], z[0], cg.x_nodes.front(), cg.x_nodes.back());
    clip(l.l[1], z[1], cg.y_nodes.front(), cg.y_nodes.back());
    mu_lo += delta;
    mu_hi -= delta;
    if (!(mu_hi - mu_lo >= 10.0 * step))
        throw std::invalid_argument("line_holder_seminorm: insufficient line coverage");

    std::vector<double> mus, vals;
    for (double mu = mu_lo; mu <= mu_hi; mu += delta) {
        mus.push_back(mu);
        vals.push_back(bilinear(d2, it, z[0] + mu * l.l[0], z[1] + mu * l.l[1]));
    }
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < mus.size(); ++i)
        for (std::size_t j = i + 1; j < mus.size(); ++j) {
            const double num = std::abs(vals[j] - vals[i]);
            if (num > 0.0) best = std::max(best, num / std::pow(mus[j] - mus[i], alpha));
        }
    return best;
}

}  // namespace detail

/// Holder seminorm of mu -> D^2_l field(t, z + mu l) along the line through z,
/// sampled at the grid spacing. D^2_l is the contraction field above;
/// bilinear interpolation only touches that already-differenced smooth field,
/// so the interpolation error stays O(dx^2 |D^4 field|).
inline double line_holder_seminorm(const ScalarField& field, std::size_t it, const Direction& l,
                                   std::array<double, 2> z, double alpha, double step = 0.0) {
    const auto& g = field.grid;
    if (!g.two_d()) throw std::invalid_argument("line_holder_seminorm: 2D field required");
    l.validate();
    if (step <= 0.0) step = std::min(g.dx, g.dy);
    const ScalarField d2 = second_derivative_contraction(field, l);
    return detail::line_holder_of_d2(d2, it, l, z, alpha, step);
}

/// Space-time L^p norm (sum |v|^p cell_volume)^{1/p}.
inline double lp_norm(const ScalarField& field, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
    const auto& g = field.grid;
    const double vol = g.dt * g.dx * (g.two_d() ? g.dy : 1.0);
    KahanSum acc;
    for (double v : field.values) acc.add(std::pow(std::abs(v), p));
    return std::pow(acc.value() * vol, 1.0 / p);
}

/// Which inequality a report row measures.
enum class EstimateId {
    sup_2_3,
    holder_2_4,
    lp_2_5,
    thm21_sup,
    thm21_holder_Dij,
    thm21_holder_directional,
    thm21_lp,
};

inline const char* estimate_id_name(EstimateId id) {
    switch (id) {
        case EstimateId::sup_2_3: return "sup_2_3";
        case EstimateId::holder_2_4: return "holder_2_4";
        case EstimateId::lp_2_5: return "lp_2_5";
        case EstimateId::thm21_sup: return "thm21_sup";
        case EstimateId::thm21_holder_Dij: return "thm21_holder_Dij";
        case EstimateId::thm21_holder_directional: return "thm21_holder_directional";
        case EstimateId::thm21_lp: return "thm21_lp";
    }
    return "unknown";
}

/// Measured ratio of one estimate on one instance.
struct EstimateReport {
    EstimateId estimate_id = EstimateId::sup_2_3;
    double alpha_or_p = 0.0;
    double measured_ratio = 0.0;
    std::optional<double> asserted_bound;
    double grid_dx = 0.0;
    double grid_dt = 0.0;
    long n_paths = 0;
    bool pass_flag = true;
    bool degenerate = false;
    std::string instance_descriptor;
};

inline std::string estimate_csv_header() {
    return "estimate_id,alpha_or_p,measured_ratio,asserted_bound,grid_dx,grid_dt,n_paths,"
           "pass_flag,instance_descriptor";
}

inline std::string to_csv_row(const EstimateReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << estimate_id_name(r.estimate_id) << ',' << r.alpha_or_p << ',' << r.measured_ratio << ',';
    if (r.asserted_bound) os << *r.asserted_bound;
    os << ',' << r.grid_dx << ',' << r.grid_dt << ',' << r.n_paths << ','
       << (r.pass_flag ? "true" : "false") << ',';
    std::string desc = r.instance_descriptor;
    for (char& c : desc)
        if (c == ',' || c == '\n') c = ';';
    os << desc;
    return os.str();
}

/// Samples a SourceTerm onto a grid (denominators are measured with the same
/// grid estimators as the solution side).
inline ScalarField field_from_source(const SourceTerm& f, const SpaceTimeGrid& grid) {
    ScalarField out = ScalarField::zeros(grid);
    for (std::size_t it = 0; it < grid.nt(); ++it)
        for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
            if (f.dim == 1) {
                out.at(it, ix) = f.eval(grid.t_nodes[it], grid.x_nodes[ix]);
            } else {
                for (std::size_t iy = 0; iy < grid.ny(); ++iy)
                    out.at(it, ix, iy) =
                        f.eval(grid.t_nodes[it], grid.x_nodes[ix], grid.y_nodes[iy]);
            }
        }
    return out;
}

namespace detail {

inline EstimateReport make_ratio_report(EstimateId id, double lhs, double rhs, double alpha_or_p,
                                        const ScalarField& field, const std::string& descriptor,
                                        std::optional<double> bound) {
    EstimateReport r;
    r.estimate_id = id;
    r.alpha_or_p = alpha_or_p;
    r.grid_dx = field.grid.dx;
    r.grid_dt = field.grid.dt;
    r.instance_descriptor = descriptor;
    r.asserted_bound = bound;
    if (rhs == 0.0) {
        r.degenerate = lhs == 0.0;
        r.pass_flag = r.degenerate;
        r.measured_ratio = 0.0;
        r.instance_descriptor += r.degenerate ? " degenerate" : " violation rhs=0";
        return r;
    }
    r.measured_ratio = lhs / rhs;
    if (bound) r.pass_flag = r.measured_ratio <= *bound * (1.0 + 1e-6) + 1e-6;
    return r;
}

/// Centered second x-difference of every time slice (x-interior).
inline ScalarField second_x_difference(const ScalarField& u) {
    const auto& g = u.grid;
    SpaceTimeGrid cg =
        g.two_d() ? SpaceTimeGrid::uniform_2d(g.horizon(), g.nt(), g.x_nodes[1],
                                              g.x_nodes[g.nx() - 2], g.nx() - 2,
                                              g.y_nodes.front(), g.y_nodes.back(), g.ny())
                  : SpaceTimeGrid::uniform_1d(g.horizon(), g.nt(), g.x_nodes[1],
                                              g.x_nodes[g.nx() - 2], g.nx() - 2);
    ScalarField out = ScalarField::zeros(cg);
    const double inv = 1.0 / (g.dx * g.dx);
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix)
            for (std::size_t iy = 0; iy < g.ny(); ++iy)
                out.at(it, ix - 1, iy) =
                    (u.at(it, ix + 1, iy) - 2.0 * u.at(it, ix, iy) + u.at(it, ix - 1, iy)) * inv;
    return out;
}

inline double sup_over_slices_holder(const ScalarField& f, double alpha, const HolderOptions& opt,
                                     bool* subsampled) {
    double best = 0.0;
    for (std::size_t it = 0; it < f.grid.nt(); ++it)
        best = std::max(best, holder_seminorm(f, it, alpha, opt, subsampled));
    return best;
}

}  // namespace detail

/// One row of the direction battery: the line-seminorm ratio
/// [D^2_l v]_alpha / [D^2_l f]_alpha along l through z, maximized over time
/// slices.
struct DirectionalRatio {
    double angle_radians = 0.0;
    double ratio = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Ratios across a set of directions; the spread across directions is the
/// numerical face of the rotation-invariance argument.
inline std::vector<DirectionalRatio> directional_holder_report(
    const ScalarField& solution, const ScalarField& forcing_grid, double alpha,
    const std::vector<double>& angles_radians, std::array<double, 2> z = {0.0, 0.0}) {
    std::vector<DirectionalRatio> out;
    for (double ang : angles_radians) {
        const Direction dir = Direction::from_angle(ang);
        const double step = std::min(solution.grid.dx, solution.grid.dy);
        const ScalarField d2_v = second_derivative_contraction(solution, dir);
        const ScalarField d2_f = second_derivative_contraction(forcing_grid, dir);
        DirectionalRatio row;
        row.angle_radians = ang;
        for (std::size_t it = 0; it < solution.grid.nt(); ++it)
            row.lhs = std::max(row.lhs, detail::line_holder_of_d2(d2_v, it, dir, z, alpha, step));
        for (std::size_t it = 0; it < forcing_grid.grid.nt(); ++it)
            row.rhs = std::max(row.rhs, detail::line_holder_of_d2(d2_f, it, dir, z, alpha, step));
        row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs : 0.0;
        out.push_back(row);
    }
    return out;
}

/// (max - min) / mean of the ratios; the rotation-invariance spread.
inline double ratio_spread(const std::vector<DirectionalRatio>& rows) {
    if (rows.empty()) return 0.0;
    double lo = rows[0].ratio, hi = rows[0].ratio, sum = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
        sum += r.ratio;
    }
    const double mean = sum / static_cast<double>(rows.size());
    return mean > 0.0 ? (hi - lo) / mean : 0.0;
}

/// Measured-ratio battery for one solution/forcing pair. sup rows carry the
/// asserted bound T; the Holder and L^p rows report the ratio as a measured
/// constant (refinement stability is checked by running the battery on a
/// sequence of grids).
inline std::vector<EstimateReport> estimate_report(const ScalarField& solution,
                                                   const SourceTerm& f, double alpha, double p,
                                                   const std::set<EstimateId>& which,
                                                   const HolderOptions& holder_opt = {}) {
    std::vector<EstimateReport> rows;
    const ScalarField f_grid = field_from_source(f, solution.grid);
    const double horizon = solution.grid.horizon();
    const std::string desc = f.descriptor;
    const bool two_d = solution.grid.two_d();

    if (which.count(two_d ? EstimateId::thm21_sup : EstimateId::sup_2_3)) {
        rows.push_back(detail::make_ratio_report(
            two_d ? EstimateId::thm21_sup : EstimateId::sup_2_3, sup_norm(solution), f.sup_bound,
            0.0, solution, desc, horizon));
    }
    if (!two_d && which.count(EstimateId::holder_2_4)) {
        bool sub = false;
        const ScalarField d2 = detail::second_x_difference(solution);
        const double lhs = detail::sup_over_slices_holder(d2, alpha, holder_opt, &sub);
        const double rhs = detail::sup_over_slices_holder(f_grid, alpha, holder_opt, &sub);
        rows.push_back(detail::make_ratio_report(EstimateId::holder_2_4, lhs, rhs, alpha, solution,
                                                 desc + (sub ? " subsampled" : ""), std::nullopt));
    }
    if (!two_d && which.count(EstimateId::lp_2_5)) {
        const ScalarField d2 = detail::second_x_difference(solution);
        rows.push_back(detail::make_ratio_report(EstimateId::lp_2_5, lp_norm(d2, p),
                                                 lp_norm(f_grid, p), p, solution, desc,
                                                 std::nullopt));
    }
    if (two_d && which.count(EstimateId::thm21_holder_Dij)) {
        bool sub = false;
        double lhs = 0.0;
        const double step = solution.grid.dx;
        for (auto dir : {Direction::from_vector(1, 0), Direction::from_vector(0, 1)}) {
            const ScalarField dij = directional_second_derivative(solution, dir, step);
            lhs = std::max(lhs, detail::sup_over_slices_holder(dij, alpha, holder_opt, &sub));
        }
        const ScalarField mixed = mixed_second_derivative(solution);
        lhs = std::max(lhs, detail::sup_over_slices_holder(mixed, alpha, holder_opt, &sub));
        const double rhs = detail::sup_over_slices_holder(f_grid, alpha, holder_opt, &sub);
        rows.push_back(detail::make_ratio_report(EstimateId::thm21_holder_Dij, lhs, rhs, alpha,
                                                 solution, desc + (sub ? " subsampled" : ""),
                                                 std::nullopt));
    }
    if (two_d && which.count(EstimateId::thm21_holder_directional)) {
        auto rows_dir = directional_holder_report(solution, f_grid, alpha, {M_PI / 4.0});
        rows.push_back(detail::make_ratio_report(EstimateId::thm21_holder_directional,
                                                 rows_dir[0].lhs, rows_dir[0].rhs, alpha, solution,
                                                 desc + " l=45deg", std::nullopt));
    }
    if (two_d && which.count(EstimateId::thm21_lp)) {
        const ScalarField d2 =
            second_derivative_contraction(solution, Direction::from_angle(M_PI / 4.0));
        rows.push_back(detail::make_ratio_report(EstimateId::thm21_lp, lp_norm(d2, p),
                                                 lp_norm(f_grid, p), p, solution,
                                                 desc + " l=45deg", std::nullopt));
    }
    return rows;
}

}  // namespace heatlift
