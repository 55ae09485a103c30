#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heatlift/fft.hpp"
#include "heatlift/heat_core.hpp"
#include "heatlift/parallel.hpp"
#include "heatlift/poisson_process.hpp"
#include "heatlift/stats.hpp"

namespace heatlift {

/// How the jump rate is tied to the jump size h.
struct LiftConfig {
    enum class Coupling { RateOverH2, H2TimesRate, Custom };

    double jump_size = 0.25;  // h
    Coupling coupling = Coupling::RateOverH2;
    int n_paths = 1000;
    std::uint64_t master_seed = 1;
    double y_window = 0.0;  // half-width of the y lattice, 0 = derived

    void validate() const {
        if (jump_size == 0.0) throw std::invalid_argument("lift: jump size must be nonzero");
        if (n_paths < 1) throw std::invalid_argument("lift: n_paths must be >= 1");
    }
};

/// Rate induced by the coupling choice. RateOverH2 gives lambda = a/h^2 so
/// lambda * (centered y difference) tends to a * d^2/dy^2 as h -> 0;
/// H2TimesRate gives lambda = h^2 a, under which the coupling term vanishes
/// in the limit and the y direction stays decoupled.
inline RateProfile coupled_rate(const DiffusivityProfile& a, double h,
                                LiftConfig::Coupling coupling,
                                const RateProfile* custom = nullptr) {
    if (coupling == LiftConfig::Coupling::Custom) {
        if (!custom) throw std::invalid_argument("coupled_rate: custom coupling needs a rate");
        return *custom;
    }
    const double scale = coupling == LiftConfig::Coupling::RateOverH2 ? 1.0 / (h * h) : h * h;
    RateProfile r;
    r.value = [a, scale](double t) { return scale * a.at(t); };
    r.max_rate = scale * a.upper;
    r.horizon = a.horizon;
    r.cumulative_fn = [a, scale](double t) { return scale * a.cumulative(t); };
    return r;
}

/// One path's solution of the randomized 1D-in-x problem
/// u_t = a(t) u_xx + f(t, x, y - h pi_t). Carries its inputs so u can be
/// re-evaluated at arbitrary (t,x,y) by direct quadrature (jump-time values
/// are never interpolated in t).
struct RandomizedSolution {
    PoissonPath path;
    double jump_size = 0.0;
    ScalarField u_on_lattice;
    DiffusivityProfile diffusivity;
    SourceTerm forcing;
    DuhamelOptions options;

    /// Direct Duhamel value at (t, x, y); the s-integral splits exactly at
    /// the path's jump times.
    double eval_u(double t, double x, double y) const {
        if (t <= 0.0) return 0.0;
        std::vector<double> breaks;
        if (jump_size != 0.0) {
            for (double s : path.jump_times) {
                if (s >= t) break;
                breaks.push_back(s);
            }
        }
        const double h = jump_size;
        const auto& p = path;
        const auto& f = forcing;
        return duhamel_point_separable(
            diffusivity, f,
            [&](double s, std::size_t ti) {
                return f.terms[ti].fy.value(y - h * count_at(p, s));
            },
            t, x, breaks, options);
    }
};

/// Lightweight point-evaluable randomized solution (no lattice field).
inline RandomizedSolution randomized_point_solution(const DiffusivityProfile& a,
                                                    const SourceTerm& f, PoissonPath path,
                                                    double h, const DuhamelOptions& opt = {}) {
    if (f.dim != 2) throw std::invalid_argument("randomized solve: forcing must be 2D");
    RandomizedSolution r;
    r.path = std::move(path);
    r.jump_size = h;
    r.diffusivity = a;
    r.forcing = f;
    r.options = opt;
    return r;
}

/// Solves the randomized 1D problem on every y-slice of the grid. The y
/// spacing must equal |h| so the forcing shifts land on lattice nodes.
inline RandomizedSolution solve_randomized_1d(const DiffusivityProfile& a, const SourceTerm& f,
                                              PoissonPath path, double h,
                                              const SpaceTimeGrid& grid,
                                              const DuhamelOptions& opt = {}) {
    if (f.dim != 2) throw std::invalid_argument("solve_randomized_1d: forcing must be 2D");
    if (!grid.two_d()) throw std::invalid_argument("solve_randomized_1d: grid needs y nodes");
    if (h != 0.0 && std::abs(grid.dy - std::abs(h)) > 1e-12 * std::max(1.0, std::abs(h)))
        throw config_error("solve_randomized_1d: y spacing must equal |h|");
    detail::require_window_1d(f, a, grid, opt);

    RandomizedSolution r = randomized_point_solution(a, f, std::move(path), h, opt);
    r.u_on_lattice = ScalarField::zeros(grid);
    const std::size_t nx = grid.nx(), ny = grid.ny();
    std::vector<double> px(nx), fy_shift(ny);
    for (std::size_t it = 1; it < grid.nt(); ++it) {
        const double t = grid.t_nodes[it];
        const double a_t = a.cumulative(t);
        std::vector<double> breaks;
        if (h != 0.0) {
            for (double s : r.path.jump_times) {
                if (s >= t) break;
                breaks.push_back(s);
            }
        }
        const auto quad = detail::make_time_quad(t, breaks, opt, a.time_breakpoints);
        for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
            const double s = quad.nodes[k];
            const double tau = std::max(0.0, a_t - a.cumulative(s));
            const double shift = h * count_at(r.path, s);
            for (const auto& term : f.terms) {
                const double w = quad.weights[k] * term.time.value(s);
                if (w == 0.0) continue;
                for (std::size_t ix = 0; ix < nx; ++ix)
                    px[ix] = kernel_smoothed_factor(tau, grid.x_nodes[ix], term.fx, opt);
                for (std::size_t iy = 0; iy < ny; ++iy)
                    fy_shift[iy] = term.fy.value(grid.y_nodes[iy] - shift);
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    const double wp = w * px[ix];
                    double* row = &r.u_on_lattice.values[r.u_on_lattice.index(it, ix, 0)];
                    for (std::size_t iy = 0; iy < ny; ++iy) row[iy] += wp * fy_shift[iy];
                }
            }
        }
    }
    return r;
}

/// Jump part of the pathwise solution: sum over jump times s_j <= t of
/// g(s_j,x,y) = u(s_j, x, y+h+h pi_{s_j-}) - u(s_j, x, y+h pi_{s_j-}).
/// Exact finite sum; u values come from direct quadrature.
inline double jump_integral(const RandomizedSolution& u_path, double h, double t, double x,
                            double y) {
    if (h == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < u_path.path.jump_times.size(); ++j) {
        const double s = u_path.path.jump_times[j];
        if (s > t) break;
        const double base = y + h * static_cast<double>(j);  // pi_{s-} = j
        acc += u_path.eval_u(s, x, base + h) - u_path.eval_u(s, x, base);
    }
    return acc;
}

/// Dyadic frozen-grid approximation of the jump integral: g is evaluated at
/// the left endpoint k 2^{-n} of the dyadic cell containing each jump.
inline double jump_integral_dyadic(const RandomizedSolution& u_path, double h, int n, double t,
                                   double x, double y) {
    if (h == 0.0) return 0.0;
    const double cell = std::ldexp(1.0, -n);  // 2^{-n}
    double acc = 0.0;
    for (double s : u_path.path.jump_times) {
        if (s > t) break;
        const double frozen = cell * (std::ceil(s / cell) - 1.0);  // s in (frozen, frozen+cell]
        if (frozen <= 0.0) continue;  // g(0) = 0 since u(0,.) = 0
        const int before = count_at(u_path.path, frozen, true);
        const double base = y + h * static_cast<double>(before);
        acc += u_path.eval_u(frozen, x, base + h) - u_path.eval_u(frozen, x, base);
    }
    return acc;
}

namespace detail {

/// Kernel-smoothed x-factors of a forcing at one fixed probe x, tabulated
/// over heat-time tau. Pointwise ensemble evaluation then costs a table
/// lookup per quadrature node instead of a fresh spatial integral.
class ProbeSmoothingTable {
  public:
    ProbeSmoothingTable(const DiffusivityProfile& a, const SourceTerm& f, double x,
                        const DuhamelOptions& opt, int nodes = 8192)
        : tau_max_(a.cumulative(a.horizon)), n_(nodes) {
        values_.resize(f.terms.size());
        for (std::size_t ti = 0; ti < f.terms.size(); ++ti) {
            values_[ti].resize(n_ + 1);
            for (int i = 0; i <= n_; ++i) {
                const double tau = tau_max_ * static_cast<double>(i) / n_;
                values_[ti][i] = kernel_smoothed_factor(tau, x, f.terms[ti].fx, opt);
            }
        }
    }

    double eval(std::size_t term, double tau) const {
        if (tau <= 0.0) return values_[term].front();
        if (tau >= tau_max_) return values_[term].back();
        const double pos = tau / tau_max_ * n_;
        const int i = static_cast<int>(pos);
        const double w = pos - i;
        return (1.0 - w) * values_[term][i] + w * values_[term][i + 1];
    }

  private:
    double tau_max_;
    int n_;
    std::vector<std::vector<double>> values_;
};

/// u(t, x_probe, Y) for one path via the probe table.
inline double eval_u_probe(const DiffusivityProfile& a, const SourceTerm& f,
                           const ProbeSmoothingTable& table, const PoissonPath& path, double h,
                           double t, double y, const DuhamelOptions& opt) {
    if (t <= 0.0) return 0.0;
    std::vector<double> breaks;
    if (h != 0.0) {
        for (double s : path.jump_times) {
            if (s >= t) break;
            breaks.push_back(s);
        }
    }
    const auto quad = make_time_quad(t, breaks, opt, a.time_breakpoints);
    const double a_t = a.cumulative(t);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
        const double s = quad.nodes[k];
        const double tau = std::max(0.0, a_t - a.cumulative(s));
        const double shift = h * count_at(path, s);
        for (std::size_t ti = 0; ti < f.terms.size(); ++ti) {
            const double w = quad.weights[k] * f.terms[ti].time.value(s);
            if (w == 0.0) continue;
            acc += w * table.eval(ti, tau) * f.terms[ti].fy.value(y - shift);
        }
    }
    return acc;
}

}  // namespace detail

struct Lemma31Report {
    double mc_lhs = 0.0;
    double mc_stderr = 0.0;
    double quad_rhs = 0.0;
    int n_paths = 0;
};

/// Monte Carlo check of the jump-integral identity
///   E \int_(0,t] g ds(pi) = \int_0^t lambda(s) [v(s,x,y+h) - v(s,x,y)] ds,
/// with v(s,x,y) = E u(s,x,y+h pi_s) estimated from the same ensemble.
inline Lemma31Report verify_lemma_3_1(const DiffusivityProfile& a, const SourceTerm& f,
                                      const RateProfile& rate, double h, const LiftConfig& config,
                                      double t, double x, double y,
                                      const DuhamelOptions& opt = {}) {
    if (config.n_paths < 1) throw std::invalid_argument("verify_lemma_3_1: n_paths >= 1");
    const int n_paths = config.n_paths;
    const auto squad = detail::make_time_quad(t, rate.time_breakpoints,
                                              DuhamelOptions{opt.hermite_order, 8, 3});
    const std::size_t nq = squad.nodes.size();
    const detail::ProbeSmoothingTable table(a, f, x, opt);

    std::vector<MeanAccumulator> lhs_chunks(kEnsembleChunks);
    std::vector<std::vector<KahanSum>> g_chunks(kEnsembleChunks,
                                                std::vector<KahanSum>(nq));
    for_each_chunk(static_cast<std::size_t>(n_paths), [&](int chunk, std::size_t lo,
                                                          std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const auto path = sample_path_inversion(
                rate, Rng::keyed(config.master_seed, p).next_u64());
            double jump_sum = 0.0;
            if (h != 0.0) {
                for (std::size_t j = 0; j < path.jump_times.size(); ++j) {
                    const double s = path.jump_times[j];
                    if (s > t) break;
                    const double base = y + h * static_cast<double>(j);  // pi_{s-} = j
                    jump_sum += detail::eval_u_probe(a, f, table, path, h, s, base + h, opt) -
                                detail::eval_u_probe(a, f, table, path, h, s, base, opt);
                }
            }
            lhs_chunks[chunk].add(jump_sum);
            for (std::size_t q = 0; q < nq; ++q) {
                const double s = squad.nodes[q];
                const double base = y + h * count_at(path, s);
                g_chunks[chunk][q].add(
                    detail::eval_u_probe(a, f, table, path, h, s, base + h, opt) -
                    detail::eval_u_probe(a, f, table, path, h, s, base, opt));
            }
        }
    });

    MeanAccumulator lhs;
    for (const auto& c : lhs_chunks) lhs.merge(c);
    Lemma31Report rep;
    rep.n_paths = n_paths;
    rep.mc_lhs = lhs.mean();
    rep.mc_stderr = lhs.stderr_of_mean();
    KahanSum rhs;
    for (std::size_t q = 0; q < nq; ++q) {
        KahanSum node;
        for (int c = 0; c < kEnsembleChunks; ++c) node.add(g_chunks[c][q].value());
        const double mean_g = node.value() / static_cast<double>(n_paths);
        rhs.add(squad.weights[q] * rate.at(squad.nodes[q]) * mean_g);
    }
    rep.quad_rhs = rhs.value();
    return rep;
}

/// Monte Carlo field with per-node standard errors.
struct MonteCarloField {
    ScalarField mean;
    ScalarField stderr_of_mean;
    double rejection_fraction = 0.0;
    int n_paths = 0;
};

namespace detail {

/// Extra lattice rows reserved for the ensemble shift y + h pi_t; paths whose
/// final count exceeds the reserve are rejected and resampled.
inline int shift_margin_rows(const RateProfile& rate) {
    return std::max(2, static_cast<int>(std::ceil(10.0 * std::sqrt(rate.max_rate * rate.horizon))));
}

inline PoissonPath sample_accepted_path(const RateProfile& rate, std::uint64_t master,
                                        std::size_t index, int max_count, long& rejections) {
    for (std::uint64_t retry = 0;; ++retry) {
        PoissonPath p = sample_path_inversion(rate, Rng::keyed(master, index, retry).next_u64());
        if (static_cast<int>(p.jump_times.size()) <= max_count) return p;
        ++rejections;
        if (retry > 64) throw std::runtime_error("ensemble: pathological rejection rate");
    }
}

struct FieldEnsemble {
    std::size_t n_nodes;
    std::vector<std::vector<double>> sum, sumsq;
    std::vector<long> rejections;

    explicit FieldEnsemble(std::size_t nodes)
        : n_nodes(nodes),
          sum(kEnsembleChunks, std::vector<double>(nodes, 0.0)),
          sumsq(kEnsembleChunks, std::vector<double>(nodes, 0.0)),
          rejections(kEnsembleChunks, 0) {}

    void deposit(int chunk, std::size_t node, double value) {
        sum[chunk][node] += value;
        sumsq[chunk][node] += value * value;
    }

    void finalize(int n_paths, MonteCarloField& out) const {
        const double n = static_cast<double>(n_paths);
        long rej = 0;
        for (long r : rejections) rej += r;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            KahanSum s1, s2;
            for (int c = 0; c < kEnsembleChunks; ++c) {
                s1.add(sum[c][i]);
                s2.add(sumsq[c][i]);
            }
            const double mean = s1.value() / n;
            double var = n > 1.5 ? (s2.value() - n * mean * mean) / (n - 1.0) : 0.0;
            if (var < 0.0) var = 0.0;
            out.mean.values[i] = mean;
            out.stderr_of_mean.values[i] = std::sqrt(var / n);
        }
        out.n_paths = n_paths;
        out.rejection_fraction =
            static_cast<double>(rej) / static_cast<double>(n_paths + rej);
    }
};

}  // namespace detail

/// Expectation lift v(t,x,y) = E u(t, x, y + h pi_t) estimated over a seeded
/// ensemble; the shift lands on lattice nodes exactly.
inline MonteCarloField lift_expectation_v(const DiffusivityProfile& a, const SourceTerm& f,
                                          const RateProfile& rate, double h,
                                          const LiftConfig& config, const SpaceTimeGrid& grid,
                                          const DuhamelOptions& opt = {}) {
    if (!grid.two_d()) throw std::invalid_argument("lift_expectation_v: grid needs y nodes");
    const int margin_rows = h == 0.0 ? 0 : detail::shift_margin_rows(rate);
    const int dir = h >= 0.0 ? 1 : -1;

    // Extend the lattice on the side the shift reads from.
    SpaceTimeGrid ext = grid;
    if (margin_rows > 0) {
        const double dy = grid.dy;
        if (dir > 0) {
            for (int i = 1; i <= margin_rows; ++i)
                ext.y_nodes.push_back(grid.y_nodes.back() + dy * i);
        } else {
            std::vector<double> below;
            for (int i = margin_rows; i >= 1; --i)
                below.push_back(grid.y_nodes.front() - dy * i);
            below.insert(below.end(), grid.y_nodes.begin(), grid.y_nodes.end());
            ext.y_nodes = std::move(below);
        }
    }
    const std::size_t base_off = dir > 0 ? 0 : static_cast<std::size_t>(margin_rows);

    MonteCarloField out;
    out.mean = ScalarField::zeros(grid);
    out.stderr_of_mean = ScalarField::zeros(grid);
    detail::FieldEnsemble acc(out.mean.values.size());
    const std::size_t nt = grid.nt(), nx = grid.nx(), ny = grid.ny();

    for_each_chunk(static_cast<std::size_t>(config.n_paths),
                   [&](int chunk, std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const auto path = detail::sample_accepted_path(rate, config.master_seed, p,
                                                           margin_rows, acc.rejections[chunk]);
            const auto sol = solve_randomized_1d(a, f, path, h, ext, opt);
            for (std::size_t it = 0; it < nt; ++it) {
                const int cnt = count_at(sol.path, grid.t_nodes[it]);
                const std::ptrdiff_t offset =
                    static_cast<std::ptrdiff_t>(base_off) + static_cast<std::ptrdiff_t>(cnt) * dir;
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    for (std::size_t iy = 0; iy < ny; ++iy) {
                        const std::size_t row = static_cast<std::size_t>(
                            static_cast<std::ptrdiff_t>(iy) + offset);
                        acc.deposit(chunk, out.mean.index(it, ix, iy),
                                    sol.u_on_lattice.at(it, ix, row));
                    }
                }
            }
        }
    });
    acc.finalize(config.n_paths, out);
    return out;
}

/// Time-step sizes for the lattice solvers.
struct LatticeOptions {
    double dt_cap = 5e-3;          // hard cap on the substep
    double rate_dt_safety = 0.1;   // dt <= safety / lambda_max
};

namespace detail {

/// One separable forcing channel of a lattice solve. The x profile is
/// time-independent (its spectrum is computed once); time modulation and the
/// possibly shifted y factor are evaluated per substep.
struct LatticeForcingTerm {
    std::function<double(double)> time;
    std::function<double(double)> fx;
    std::function<double(double, double)> fy_at;  // (t, y)
};

inline std::vector<LatticeForcingTerm> lattice_terms(const SourceTerm& f) {
    if (f.dim != 2) throw std::invalid_argument("lattice solve: forcing must be 2D");
    std::vector<LatticeForcingTerm> out;
    for (const auto& term : f.terms) {
        LatticeForcingTerm lt;
        lt.time = term.time.value;
        lt.fx = term.fx.value;
        auto fy = term.fy.value;
        lt.fy_at = [fy](double, double y) { return fy(y); };
        out.push_back(std::move(lt));
    }
    return out;
}

/// Coupling weights of the exact substep flow. One-sided flow
/// exp(L(S - I)) has Poisson weights e^-L L^k / k! on shifts +k; centered
/// flow exp(L(S + S^-1 - 2I)) has Bessel weights e^-2L I_j(2L) on shifts j.
inline std::vector<double> coupling_weights(double big_lambda, bool centered, int max_taps) {
    std::vector<double> w;
    if (centered) {
        const double x = 2.0 * big_lambda;
        const double damp = std::exp(-x);
        int j = 0;
        for (; j <= max_taps; ++j) {
            // I_j(x) series; converges fast for the small x used here.
            double term = std::pow(0.5 * x, j), series = 0.0;
            for (int m = 0; m < 60; ++m) {
                series += term;
                term *= 0.25 * x * x / ((m + 1.0) * (m + 1.0 + j));
                if (term < series * 1e-18 + 1e-300) break;
            }
            for (int m = 2; m <= j; ++m) series /= m;  // divide by j! incrementally
            const double weight = damp * series;
            w.push_back(weight);
            if (j > 0 && weight < 1e-15) break;
        }
    } else {
        double weight = std::exp(-big_lambda);
        for (int k = 0; k <= max_taps; ++k) {
            w.push_back(weight);
            weight *= big_lambda / (k + 1.0);
            if (k > 0 && w.back() < 1e-15) break;
        }
    }
    return w;
}

}  // namespace detail

/// Core lattice stepper for the coupled equations: Strang ordering
/// (half-coupling, diffusion + forcing, half-coupling). The x diffusion is
/// the exact kernel applied per substep as a Fourier multiplier over the
/// A(t) increment; the coupling substep applies its exact shift-mixture
/// flow, so both homogeneous sub-flows compose exactly and the midpoint
/// forcing rule is the only time-discretization error.
inline ScalarField solve_lattice_core(const DiffusivityProfile& a,
                                      const std::vector<detail::LatticeForcingTerm>& terms,
                                      const RateProfile& rate, double h,
                                      const SpaceTimeGrid& grid, bool centered,
                                      const LatticeOptions& opt = {}) {
    if (!grid.two_d()) throw std::invalid_argument("lattice solve: grid needs y nodes");
    if (h != 0.0 && std::abs(grid.dy - std::abs(h)) > 1e-12 * std::max(1.0, std::abs(h)))
        throw config_error("lattice solve: y spacing must equal |h|");
    const std::size_t nx = grid.nx(), ny = grid.ny(), nt = grid.nt();
    const std::size_t pad = next_pow2(nx);
    const double period = static_cast<double>(pad) * grid.dx;
    const int dir = h >= 0.0 ? 1 : -1;

    // Squared wavenumbers of the padded periodic x-domain.
    std::vector<double> k2(pad);
    for (std::size_t m = 0; m < pad; ++m) {
        const double mm = m <= pad / 2 ? static_cast<double>(m)
                                       : static_cast<double>(m) - static_cast<double>(pad);
        const double k = 2.0 * M_PI * mm / period;
        k2[m] = k * k;
    }

    // Forcing x-spectra (time-independent profiles).
    std::vector<std::vector<std::complex<double>>> fx_hat(terms.size());
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
        std::vector<std::complex<double>> buf(pad, 0.0);
        for (std::size_t ix = 0; ix < nx; ++ix) buf[ix] = terms[ti].fx(grid.x_nodes[ix]);
        fft_inplace(buf, false);
        fx_hat[ti] = std::move(buf);
    }

    std::vector<std::vector<std::complex<double>>> state(
        ny, std::vector<std::complex<double>>(pad, 0.0));
    std::vector<std::vector<std::complex<double>>> scratch(
        ny, std::vector<std::complex<double>>(pad, 0.0));

    auto apply_coupling = [&](double big_lambda) {
        if (big_lambda <= 0.0 || h == 0.0) return;
        const auto w = detail::coupling_weights(big_lambda, centered, static_cast<int>(ny));
        for (std::size_t iy = 0; iy < ny; ++iy) {
            auto& out = scratch[iy];
            std::fill(out.begin(), out.end(), std::complex<double>(0.0, 0.0));
            const int taps = static_cast<int>(w.size());
            for (int k = centered ? -(taps - 1) : 0; k < taps; ++k) {
                const double weight = w[static_cast<std::size_t>(std::abs(k))];
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(iy) + static_cast<std::ptrdiff_t>(k) * dir;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(ny)) continue;
                const auto& in = state[static_cast<std::size_t>(src)];
                for (std::size_t m = 0; m < pad; ++m) out[m] += weight * in[m];
            }
        }
        state.swap(scratch);
    };

    ScalarField field = ScalarField::zeros(grid);
    std::vector<std::complex<double>> buf(pad);
    std::vector<double> damp(pad), damp_mid(pad);

    auto write_slice = [&](std::size_t it) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            buf = state[iy];
            fft_inplace(buf, true);
            for (std::size_t ix = 0; ix < nx; ++ix) field.at(it, ix, iy) = buf[ix].real();
        }
    };

    double dt_base = opt.dt_cap;
    if (rate.max_rate > 0.0) dt_base = std::min(dt_base, opt.rate_dt_safety / rate.max_rate);

    write_slice(0);  // zero initial data, exact
    for (std::size_t it = 1; it < nt; ++it) {
        const double t_lo = grid.t_nodes[it - 1], t_hi = grid.t_nodes[it];
        const int steps = std::max(1, static_cast<int>(std::ceil((t_hi - t_lo) / dt_base)));
        const double dt = (t_hi - t_lo) / steps;
        for (int step = 0; step < steps; ++step) {
            const double t0 = t_lo + dt * step;
            const double t1 = t0 + dt;
            const double tm = t0 + 0.5 * dt;
            apply_coupling(rate.mean(tm) - rate.mean(t0));
            const double da = a.cumulative(t1) - a.cumulative(t0);
            const double da_mid = a.cumulative(t1) - a.cumulative(tm);
            for (std::size_t m = 0; m < pad; ++m) {
                damp[m] = std::exp(-k2[m] * da);
                damp_mid[m] = dt * std::exp(-k2[m] * da_mid);
            }
            for (std::size_t iy = 0; iy < ny; ++iy) {
                auto& row = state[iy];
                for (std::size_t m = 0; m < pad; ++m) row[m] *= damp[m];
            }
            for (std::size_t ti = 0; ti < terms.size(); ++ti) {
                const double tf = terms[ti].time(tm);
                if (tf == 0.0) continue;
                const auto& fh = fx_hat[ti];
                for (std::size_t iy = 0; iy < ny; ++iy) {
                    const double c = tf * terms[ti].fy_at(tm, grid.y_nodes[iy]);
                    if (c == 0.0) continue;
                    auto& row = state[iy];
                    for (std::size_t m = 0; m < pad; ++m) row[m] += (c * damp_mid[m]) * fh[m];
                }
            }
            apply_coupling(rate.mean(t1) - rate.mean(tm));
        }
        write_slice(it);
    }
    return field;
}

namespace detail {

/// Forcing must stay clear of the lattice edges the coupling pulls from;
/// otherwise the zero-fill boundary contaminates the solution.
inline void require_lattice_margin(const SourceTerm& f, const RateProfile& rate, double h,
                                   const SpaceTimeGrid& grid, bool two_sided) {
    if (h == 0.0) return;
    double y_sup = 0.0;
    for (const auto& term : f.terms) y_sup = std::max(y_sup, term.fy.support_radius);
    const double margin =
        6.0 * std::sqrt(rate.max_rate * rate.horizon) * std::abs(h) + 2.0 * std::abs(h);
    const bool upper_ok = grid.y_nodes.back() >= y_sup + margin;
    const bool lower_ok = grid.y_nodes.front() <= -(y_sup + margin);
    if ((h > 0.0 || two_sided) && !upper_ok)
        throw config_error("lattice solve: y window too small above the forcing support");
    if ((h < 0.0 || two_sided) && !lower_ok)
        throw config_error("lattice solve: y window too small below the forcing support");
}

}  // namespace detail

/// Deterministic solution of
///   v_t = a(t) v_xx + lambda(t) [v(t,x,y+h) - v(t,x,y)] + f(t,x,y).
inline ScalarField solve_lattice_v(const DiffusivityProfile& a, const SourceTerm& f,
                                   const RateProfile& rate, double h, const SpaceTimeGrid& grid,
                                   const LatticeOptions& opt = {}) {
    detail::require_lattice_margin(f, rate, h, grid, false);
    return solve_lattice_core(a, detail::lattice_terms(f), rate, h, grid, false, opt);
}

/// Deterministic solution of
///   w_t = a(t) w_xx + lambda(t) [w(y+h) - 2w + w(y-h)] + f.
inline ScalarField solve_lattice_w(const DiffusivityProfile& a, const SourceTerm& f,
                                   const RateProfile& rate, double h, const SpaceTimeGrid& grid,
                                   const LatticeOptions& opt = {}) {
    detail::require_lattice_margin(f, rate, h, grid, true);
    return solve_lattice_core(a, detail::lattice_terms(f), rate, h, grid, true, opt);
}

/// Cross-check route for the centered equation: solve the one-sided lattice
/// equation per path with forcing f(t, x, y + h pi_t) and average the
/// read-back w(t,x,y) = E v(t, x, y - h pi_t).
inline MonteCarloField lattice_w_via_double_expectation(const DiffusivityProfile& a,
                                                        const SourceTerm& f,
                                                        const RateProfile& rate, double h,
                                                        const SpaceTimeGrid& grid, int n_paths,
                                                        std::uint64_t master_seed,
                                                        const LatticeOptions& opt = {}) {
    if (!grid.two_d()) throw std::invalid_argument("lattice route check: grid needs y nodes");
    const int margin_rows = h == 0.0 ? 0 : detail::shift_margin_rows(rate);
    const int dir = h >= 0.0 ? 1 : -1;

    // v_p is read at y - h pi_t: extend the window on the side opposite the
    // shift direction.
    SpaceTimeGrid ext = grid;
    if (margin_rows > 0) {
        const double dy = grid.dy;
        if (dir > 0) {
            std::vector<double> below;
            for (int i = margin_rows; i >= 1; --i)
                below.push_back(grid.y_nodes.front() - dy * i);
            below.insert(below.end(), grid.y_nodes.begin(), grid.y_nodes.end());
            ext.y_nodes = std::move(below);
        } else {
            for (int i = 1; i <= margin_rows; ++i)
                ext.y_nodes.push_back(grid.y_nodes.back() + dy * i);
        }
    }
    const std::size_t base_off = dir > 0 ? static_cast<std::size_t>(margin_rows) : 0;

    MonteCarloField out;
    out.mean = ScalarField::zeros(grid);
    out.stderr_of_mean = ScalarField::zeros(grid);
    detail::FieldEnsemble acc(out.mean.values.size());
    const std::size_t nt = grid.nt(), nx = grid.nx(), ny = grid.ny();

    for_each_chunk(static_cast<std::size_t>(n_paths), [&](int chunk, std::size_t lo,
                                                          std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const auto path = detail::sample_accepted_path(rate, master_seed, p, margin_rows,
                                                           acc.rejections[chunk]);
            auto terms = detail::lattice_terms(f);
            for (auto& term : terms) {
                auto fy = term.fy_at;
                term.fy_at = [fy, path, h](double t, double y) {
                    return fy(t, y + h * count_at(path, t));
                };
            }
            const ScalarField v_p = solve_lattice_core(a, terms, rate, h, ext, false,
                                                       LatticeOptions(opt));
            for (std::size_t it = 0; it < nt; ++it) {
                const int cnt = count_at(path, grid.t_nodes[it]);
                const std::ptrdiff_t offset =
                    static_cast<std::ptrdiff_t>(base_off) - static_cast<std::ptrdiff_t>(cnt) * dir;
                for (std::size_t ix = 0; ix < nx; ++ix) {
                    for (std::size_t iy = 0; iy < ny; ++iy) {
                        const std::size_t row = static_cast<std::size_t>(
                            static_cast<std::ptrdiff_t>(iy) + offset);
                        acc.deposit(chunk, out.mean.index(it, ix, iy), v_p.at(it, ix, row));
                    }
                }
            }
        }
    });
    acc.finalize(n_paths, out);
    return out;
}

/// Result of the h -> 0 study against the 2D reference solver.
struct LiftLimitReport {
    std::vector<double> h_values;
    std::vector<double> sup_errors;
    std::vector<ScalarField> fields;
    double observed_order = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;  // all errors zero (e.g. f == 0)
};

/// Runs the centered lattice solver for each h with the configured coupling
/// and measures the sup-norm error against the 2D reference solution on the
/// same lattice. The grid argument fixes the t and x nodes and the y window;
/// the y lattice is rebuilt with spacing h for every entry of h_sequence.
inline LiftLimitReport dimension_lift_limit(const DiffusivityProfile& a, const SourceTerm& f,
                                            const SpaceTimeGrid& grid,
                                            const std::vector<double>& h_sequence,
                                            LiftConfig::Coupling coupling =
                                                LiftConfig::Coupling::RateOverH2,
                                            const LatticeOptions& lattice_opt = {},
                                            const DuhamelOptions& duhamel_opt = {}) {
    if (h_sequence.size() < 2)
        throw std::invalid_argument("dimension_lift_limit: need at least two h values");
    for (std::size_t i = 1; i < h_sequence.size(); ++i)
        if (!(h_sequence[i] < h_sequence[i - 1]))
            throw std::invalid_argument("dimension_lift_limit: h_sequence must be strictly decreasing");
    if (!grid.two_d()) throw std::invalid_argument("dimension_lift_limit: grid needs y nodes");

    const double y_lo = grid.y_nodes.front(), y_hi = grid.y_nodes.back();
    LiftLimitReport rep;
    for (double h : h_sequence) {
        const double span = y_hi - y_lo;
        const double steps = span / h;
        if (std::abs(steps - std::round(steps)) > 1e-9)
            throw config_error("dimension_lift_limit: h not commensurate with the y window");
        SpaceTimeGrid gh = SpaceTimeGrid::uniform_2d(
            grid.horizon(), grid.nt(), grid.x_nodes.front(), grid.x_nodes.back(), grid.nx(),
            y_lo, y_hi, static_cast<std::size_t>(std::llround(steps)) + 1);
        const RateProfile rate = coupled_rate(a, h, coupling);
        ScalarField w = solve_lattice_w(a, f, rate, h, gh, lattice_opt);
        ScalarField ref = solve_heat_2d_reference(a, f, gh, duhamel_opt);
        double err = 0.0;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            err = std::max(err, std::abs(w.values[i] - ref.values[i]));
        rep.h_values.push_back(h);
        rep.sup_errors.push_back(err);
        rep.fields.push_back(std::move(w));
    }
    double max_err = 0.0;
    for (double e : rep.sup_errors) max_err = std::max(max_err, e);
    if (max_err <= 0.0) {
        rep.degenerate = true;
        return rep;
    }
    std::vector<double> lh, le;
    for (std::size_t i = 0; i < rep.h_values.size(); ++i) {
        lh.push_back(std::log(rep.h_values[i]));
        le.push_back(std::log(std::max(rep.sup_errors[i], 1e-300)));
    }
    rep.observed_order = fit_slope(lh, le);
    return rep;
}

}  // namespace heatlift
