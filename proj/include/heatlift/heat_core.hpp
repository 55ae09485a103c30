#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "heatlift/diffusivity.hpp"
#include "heatlift/grid.hpp"
#include "heatlift/quadrature.hpp"
#include "heatlift/source.hpp"

namespace heatlift {

/// Quadrature sizes for the Duhamel representation. The spatial integral is
/// evaluated in the kernel-scaled variable xi = x + 2*sqrt(tau)*r with
/// Gauss-Hermite nodes in r, which stays uniformly accurate as tau -> 0; the
/// time integral uses composite Gauss-Legendre on each smooth piece.
struct DuhamelOptions {
    int hermite_order = 32;
    int gl_order = 8;
    int time_cells = 8;        // GL cells distributed over [0,t]
    bool enforce_window = true;  // require the grid to cover support + reach
};

/// Heat kernel (4 pi tau)^{-dim/2} exp(-|z|^2 / (4 tau)).
inline double gaussian_kernel(int dim, double tau, double z0, double z1 = 0.0) {
    if (!(tau > 0.0)) throw std::domain_error("gaussian_kernel: tau must be positive");
    if (dim != 1 && dim != 2) throw std::invalid_argument("gaussian_kernel: dim must be 1 or 2");
    const double q = (z0 * z0 + z1 * z1) / (4.0 * tau);
    const double norm = dim == 1 ? 1.0 / std::sqrt(4.0 * M_PI * tau) : 1.0 / (4.0 * M_PI * tau);
    return norm * std::exp(-q);
}

/// Convolution of a spatial profile with the heat kernel at heat-time tau,
/// evaluated at x, by Gauss-Hermite in the kernel-scaled variable
/// xi = x + 2 sqrt(tau) r. Exact limit f(x) at tau == 0. Accurate while the
/// kernel is no wider than the profile's variation scale.
template <class F1>
double kernel_smoothed_1d(double tau, double x, F1&& fx, int hermite_order = 32) {
    constexpr double inv_sqrt_pi = 0.5641895835477563;
    if (!(tau > 0.0)) return fx(x);
    const auto& gh = gauss_hermite(hermite_order);
    const double c = 2.0 * std::sqrt(tau);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        acc += gh.weights[i] * fx(x + c * gh.nodes[i]);
    return acc * inv_sqrt_pi;
}

/// Kernel smoothing of a compact SpatialFactor, accurate uniformly in tau:
/// Hermite nodes in the kernel-scaled variable while the kernel is narrower
/// than the factor, composite Gauss-Legendre over the factor support once
/// the kernel is the wide one (there the Hermite nodes would under-resolve
/// the factor).
inline double kernel_smoothed_factor(double tau, double x, const SpatialFactor& f,
                                     const DuhamelOptions& opt = {}) {
    if (tau <= 0.5 * f.scale * f.scale)
        return kernel_smoothed_1d(tau, x, f.value, opt.hermite_order);
    const double sd = std::sqrt(2.0 * tau);
    const double lo = std::max(f.center - f.radius, x - 8.0 * sd);
    const double hi = std::min(f.center + f.radius, x + 8.0 * sd);
    if (lo >= hi) return 0.0;
    const double cell = 0.75 * std::min(f.scale, sd);
    const int cells = std::max(2, static_cast<int>(std::ceil((hi - lo) / cell)));
    return integrate_gl(
        [&](double xi) { return gaussian_kernel(1, tau, x - xi) * f.value(xi); }, lo, hi, cells,
        opt.gl_order);
}

namespace detail {

/// Gauss-Legendre plan for \int_0^t, split at the supplied interior break
/// times (forcing discontinuities), cells allocated by piece length.
struct TimeQuad {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline TimeQuad make_time_quad(double t, std::span<const double> breaks,
                               const DuhamelOptions& opt,
                               std::span<const double> extra_breaks = {}) {
    std::vector<double> edges{0.0};
    for (double b : breaks)
        if (b > 0.0 && b < t) edges.push_back(b);
    for (double b : extra_breaks)
        if (b > 0.0 && b < t) edges.push_back(b);
    edges.push_back(t);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const auto& rule = gauss_legendre(opt.gl_order);
    TimeQuad q;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double len = edges[p + 1] - edges[p];
        const int cells = std::max(1, static_cast<int>(std::ceil(opt.time_cells * len / t)));
        const double cell = len / cells;
        for (int c = 0; c < cells; ++c) {
            const double mid = edges[p] + (c + 0.5) * cell, scale = 0.5 * cell;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                q.nodes.push_back(mid + scale * rule.nodes[i]);
                q.weights.push_back(scale * rule.weights[i]);
            }
        }
    }
    return q;
}

inline void require_window_1d(const SourceTerm& f, const DiffusivityProfile& a,
                              const SpaceTimeGrid& grid, const DuhamelOptions& opt) {
    if (!opt.enforce_window) return;
    const double reach = f.support_radius + 6.0 * std::sqrt(a.cumulative(grid.horizon()));
    if (grid.x_nodes.front() > -reach || grid.x_nodes.back() < reach)
        throw config_error("solver: x-window smaller than support radius plus diffusion reach");
}

}  // namespace detail

/// Duhamel value at (t,x) for forcing f(s,xi), with optional interior break
/// times where the forcing jumps in s.
template <class F2>
double duhamel_point_1d(const DiffusivityProfile& a, F2&& f, double t, double x,
                        std::span<const double> breaks = {}, const DuhamelOptions& opt = {}) {
    if (t <= 0.0) return 0.0;
    const auto quad = detail::make_time_quad(t, breaks, opt, a.time_breakpoints);
    const double a_t = a.cumulative(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        const double s = quad.nodes[k];
        const double tau = std::max(0.0, a_t - a.cumulative(s));
        acc += quad.weights[k] *
               kernel_smoothed_1d(tau, x, [&](double xi) { return f(s, xi); }, opt.hermite_order);
    }
    return acc;
}

/// Duhamel value at (t,x) of the 1D-in-x problem whose forcing is the sum of
/// the terms of f with an extra per-term scalar yfac(s, term_index) (the
/// frozen or shifted y factor; 1 for genuinely 1D forcing).
template <class YFac>
double duhamel_point_separable(const DiffusivityProfile& a, const SourceTerm& f, YFac&& yfac,
                               double t, double x, std::span<const double> breaks = {},
                               const DuhamelOptions& opt = {}) {
    if (t <= 0.0) return 0.0;
    const auto quad = detail::make_time_quad(t, breaks, opt, a.time_breakpoints);
    const double a_t = a.cumulative(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        const double s = quad.nodes[k];
        const double tau = std::max(0.0, a_t - a.cumulative(s));
        for (std::size_t ti = 0; ti < f.terms.size(); ++ti) {
            const double w = quad.weights[k] * f.terms[ti].time.value(s) * yfac(s, ti);
            if (w == 0.0) continue;
            acc += w * kernel_smoothed_factor(tau, x, f.terms[ti].fx, opt);
        }
    }
    return acc;
}

/// Point value of the 1D solution for a SourceTerm forcing.
inline double eval_heat_1d(const DiffusivityProfile& a, const SourceTerm& f, double t, double x,
                           const DuhamelOptions& opt = {}) {
    if (f.dim != 1) throw std::invalid_argument("eval_heat_1d: forcing must be 1D");
    return duhamel_point_separable(a, f, [](double, std::size_t) { return 1.0; }, t, x, {}, opt);
}

/// Point value of the 2D solution; separable terms split the double spatial
/// integral into a product of two kernel smoothings.
inline double eval_heat_2d(const DiffusivityProfile& a, const SourceTerm& f, double t, double x,
                           double y, const DuhamelOptions& opt = {}) {
    if (f.dim != 2) throw std::invalid_argument("eval_heat_2d: forcing must be 2D");
    if (t <= 0.0) return 0.0;
    const auto quad = detail::make_time_quad(t, {}, opt, a.time_breakpoints);
    const double a_t = a.cumulative(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        const double s = quad.nodes[k];
        const double tau = std::max(0.0, a_t - a.cumulative(s));
        double slice = 0.0;
        for (const auto& term : f.terms) {
            slice += term.time.value(s) * kernel_smoothed_factor(tau, x, term.fx, opt) *
                     kernel_smoothed_factor(tau, y, term.fy, opt);
        }
        acc += quad.weights[k] * slice;
    }
    return acc;
}

/// Solution of u_t = a(t) u_xx + f, u(0,.) = 0 on the grid. The t = 0 slice
/// is exactly zero; the x-window must cover the forcing support plus the
/// diffusion reach 6*sqrt(A(T)).
inline ScalarField solve_heat_1d(const DiffusivityProfile& a, const SourceTerm& f,
                                 const SpaceTimeGrid& grid, const DuhamelOptions& opt = {}) {
    if (f.dim != 1) throw std::invalid_argument("solve_heat_1d: forcing must be 1D");
    if (grid.two_d()) throw std::invalid_argument("solve_heat_1d: grid must be 1D");
    detail::require_window_1d(f, a, grid, opt);
    ScalarField u = ScalarField::zeros(grid);
    for (std::size_t it = 1; it < grid.nt(); ++it) {
        const double t = grid.t_nodes[it];
        const double a_t = a.cumulative(t);
        const auto quad = detail::make_time_quad(t, {}, opt, a.time_breakpoints);
        for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
            const double s = quad.nodes[k];
            const double tau = std::max(0.0, a_t - a.cumulative(s));
            for (const auto& term : f.terms) {
                const double w = quad.weights[k] * term.time.value(s);
                if (w == 0.0) continue;
                for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
                    u.at(it, ix) += w * kernel_smoothed_factor(tau, grid.x_nodes[ix], term.fx, opt);
                }
            }
        }
    }
    return u;
}

/// Solution of v_t = a(t) (v_xx + v_yy) + f, v(0,.) = 0, via the product
/// structure of the 2D kernel: per time node each separable term contributes
/// a rank-one update P(x) Q(y).
inline ScalarField solve_heat_2d_reference(const DiffusivityProfile& a, const SourceTerm& f,
                                           const SpaceTimeGrid& grid,
                                           const DuhamelOptions& opt = {}) {
    if (f.dim != 2) throw std::invalid_argument("solve_heat_2d_reference: forcing must be 2D");
    if (!grid.two_d()) throw std::invalid_argument("solve_heat_2d_reference: grid must be 2D");
    detail::require_window_1d(f, a, grid, opt);
    const double reach = f.support_radius + 6.0 * std::sqrt(a.cumulative(grid.horizon()));
    if (opt.enforce_window && (grid.y_nodes.front() > -reach || grid.y_nodes.back() < reach))
        throw config_error("solver: y-window smaller than support radius plus diffusion reach");

    ScalarField v = ScalarField::zeros(grid);
    const std::size_t nx = grid.nx(), ny = grid.ny();
    std::vector<double> px(nx), qy(ny);
    for (std::size_t it = 1; it < grid.nt(); ++it) {
        const double t = grid.t_nodes[it];
        const double a_t = a.cumulative(t);
        const auto quad = detail::make_time_quad(t, {}, opt, a.time_breakpoints);
        double* slice = &v.values[v.index(it, 0, 0)];
        for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
            const double s = quad.nodes[k];
            const double tau = std::max(0.0, a_t - a.cumulative(s));
            for (const auto& term : f.terms) {
                const double w = quad.weights[k] * term.time.value(s);
                if (w == 0.0) continue;
                for (std::size_t ix = 0; ix < nx; ++ix)
                    px[ix] = kernel_smoothed_factor(tau, grid.x_nodes[ix], term.fx, opt);
                for (std::size_t iy = 0; iy < ny; ++iy)
                    qy[iy] = kernel_smoothed_factor(tau, grid.y_nodes[iy], term.fy, opt);
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    const double wp = w * px[ix];
                    double* row = slice + ix * ny;
                    for (std::size_t iy = 0; iy < ny; ++iy) row[iy] += wp * qy[iy];
                }
            }
        }
    }
    return v;
}

/// Which equation a field is checked against.
struct EquationSpec {
    enum class Kind { heat1d, heat2d, lattice_v, lattice_w } kind = Kind::heat1d;
    double jump_size = 0.0;                // lattice kinds
    std::function<double(double)> rate;    // lattice kinds: lambda(t)
};

/// Max interior defect |d_t(field) - RHS| with centered differences in t and
/// x (forward at t = 0) and exact lattice shifts in y for the lattice
/// equations. O(dt + dx^2) for smooth solutions.
inline double pde_residual(const ScalarField& field, const DiffusivityProfile& a,
                           const std::function<double(double, double, double)>& forcing,
                           const EquationSpec& eq) {
    const SpaceTimeGrid& g = field.grid;
    field.check_shape();
    using Kind = EquationSpec::Kind;
    const bool lattice = eq.kind == Kind::lattice_v || eq.kind == Kind::lattice_w;
    if (g.nt() < 3 || g.nx() < 7)
        throw std::invalid_argument("pde_residual: interior needs >= 5 nodes per axis");
    if ((eq.kind == Kind::heat2d || lattice) && !g.two_d())
        throw std::invalid_argument("pde_residual: equation needs a 2D grid");

    std::size_t shift = 0;
    if (lattice) {
        shift = static_cast<std::size_t>(std::llround(eq.jump_size / g.dy));
        if (std::abs(static_cast<double>(shift) * g.dy - eq.jump_size) >
            1e-12 * std::max(1.0, eq.jump_size))
            throw std::invalid_argument("pde_residual: jump size not commensurate with y grid");
    }

    const std::size_t ny = g.ny();
    std::size_t iy_lo = 0, iy_hi = ny;  // half-open
    if (eq.kind == Kind::heat2d) {
        if (ny < 7) throw std::invalid_argument("pde_residual: interior needs >= 5 nodes per axis");
        iy_lo = 1;
        iy_hi = ny - 1;
    } else if (eq.kind == Kind::lattice_v) {
        iy_hi = ny - shift;
    } else if (eq.kind == Kind::lattice_w) {
        iy_lo = shift;
        iy_hi = ny - shift;
    }
    if (iy_lo >= iy_hi) throw std::invalid_argument("pde_residual: no interior y nodes");

    double worst = 0.0;
    for (std::size_t it = 1; it + 1 < g.nt(); ++it) {
        const double t = g.t_nodes[it];
        const double at = a.at(t);
        const double lam = lattice ? eq.rate(t) : 0.0;
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix) {
            for (std::size_t iy = iy_lo; iy < iy_hi; ++iy) {
                const double u0 = field.at(it, ix, iy);
                const double dt_term =
                    (field.at(it + 1, ix, iy) - field.at(it - 1, ix, iy)) / (2.0 * g.dt);
                double rhs = at * (field.at(it, ix + 1, iy) - 2.0 * u0 + field.at(it, ix - 1, iy)) /
                             (g.dx * g.dx);
                if (eq.kind == Kind::heat2d) {
                    rhs += at * (field.at(it, ix, iy + 1) - 2.0 * u0 + field.at(it, ix, iy - 1)) /
                           (g.dy * g.dy);
                } else if (eq.kind == Kind::lattice_v) {
                    rhs += lam * (field.at(it, ix, iy + shift) - u0);
                } else if (eq.kind == Kind::lattice_w) {
                    rhs += lam * (field.at(it, ix, iy + shift) - 2.0 * u0 +
                                  field.at(it, ix, iy - shift));
                }
                const double y = g.two_d() ? g.y_nodes[iy] : 0.0;
                rhs += forcing(t, g.x_nodes[ix], y);
                worst = std::max(worst, std::abs(dt_term - rhs));
            }
        }
    }
    return worst;
}

inline double pde_residual(const ScalarField& field, const DiffusivityProfile& a,
                           const SourceTerm& f, const EquationSpec& eq) {
    if (f.dim == 1)
        return pde_residual(field, a,
                            [&f](double t, double x, double) { return f.eval(t, x); }, eq);
    return pde_residual(field, a,
                        [&f](double t, double x, double y) { return f.eval(t, x, y); }, eq);
}

}  // namespace heatlift
