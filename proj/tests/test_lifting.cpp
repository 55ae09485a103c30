#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "heatlift/lifting.hpp"
#include "heatlift/norms.hpp"

using namespace heatlift;

namespace {

SourceTerm zero_source_2d() {
    SourceTerm f;
    f.dim = 2;
    f.descriptor = "zero";
    return f;
}

/// y factor identically one (f independent of y).
SpatialFactor unit_factor() {
    SpatialFactor f;
    f.value = [](double) { return 1.0; };
    f.second_derivative = [](double) { return 0.0; };
    f.sup = 1.0;
    f.support_radius = 1e9;
    f.center = 0.0;
    f.radius = 1e9;
    f.scale = 1.0;
    return f;
}

/// Forcing with the x-factor replaced by its second derivative; the Duhamel
/// value of this source is D_x^2 of the original solution.
SourceTerm dxx_source(const SourceTerm& f) {
    SourceTerm d = f;
    for (auto& term : d.terms) {
        auto fx = term.fx;
        term.fx.value = fx.second_derivative;
        term.fx.sup = 0.0;  // not used below
    }
    d.descriptor = f.descriptor + " dxx";
    return d;
}

ScalarField slice_as_1d_field(const ScalarField& u, std::size_t iy) {
    const auto& g = u.grid;
    SpaceTimeGrid g1 = SpaceTimeGrid::uniform_1d(g.horizon(), g.nt(), g.x_nodes.front(),
                                                 g.x_nodes.back(), g.nx());
    ScalarField out = ScalarField::zeros(g1);
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 0; ix < g.nx(); ++ix) out.at(it, ix) = u.at(it, ix, iy);
    return out;
}

const double kBumpSigmaX = 0.4;
const double kBumpSigmaY = 0.4;

SourceTerm test_bump() { return bump_source_2d(1.0, 0.0, 0.0, kBumpSigmaX, kBumpSigmaY); }

SpaceTimeGrid lattice_grid(double h, double y_half = 6.0, std::size_t nx = 64,
                           std::size_t nt = 3) {
    const std::size_t ny = static_cast<std::size_t>(std::llround(2.0 * y_half / h)) + 1;
    return SpaceTimeGrid::uniform_2d(1.0, nt, -12.0, 12.0, nx, -y_half, y_half, ny);
}

}  // namespace

TEST_CASE("coupled rate: both scalings") {
    auto a = DiffusivityProfile::linear_ramp(1.0, 0.5, 1.0);
    auto r1 = coupled_rate(a, 0.5, LiftConfig::Coupling::RateOverH2);
    CHECK(r1.at(0.4) == doctest::Approx((1.0 + 0.2) / 0.25).epsilon(1e-14));
    CHECK(r1.mean(1.0) == doctest::Approx(1.25 / 0.25).epsilon(1e-14));
    auto r2 = coupled_rate(a, 0.5, LiftConfig::Coupling::H2TimesRate);
    CHECK(r2.at(0.4) == doctest::Approx(0.25 * 1.2).epsilon(1e-14));
    CHECK_THROWS_AS(coupled_rate(a, 0.5, LiftConfig::Coupling::Custom), std::invalid_argument);
}

TEST_CASE("lift config invariants") {
    LiftConfig c;
    c.jump_size = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.jump_size = 0.25;
    c.n_paths = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("randomized solve with no jumps decouples into frozen 1D solves") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 2.0, 64, 3);
    PoissonPath empty;
    auto sol = solve_randomized_1d(a, f, empty, h, g);
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iy = 0; iy < g.ny(); ++iy) CHECK(sol.u_on_lattice.at(0, ix, iy) == 0.0);
    for (std::size_t iy : {std::size_t{0}, std::size_t{8}, std::size_t{16}}) {
        const double fy = f.terms[0].fy.value(g.y_nodes[iy]);
        TimeFactor scaled;
        scaled.value = [fy](double) { return fy; };
        auto f1 = SourceTerm::separable_1d(scaled, f.terms[0].fx);
        SpaceTimeGrid g1 = SpaceTimeGrid::uniform_1d(1.0, g.nt(), g.x_nodes.front(),
                                                     g.x_nodes.back(), g.nx());
        auto u1 = solve_heat_1d(a, f1, g1);
        for (std::size_t it = 0; it < g.nt(); ++it)
            for (std::size_t ix = 0; ix < g.nx(); ++ix)
                CHECK(sol.u_on_lattice.at(it, ix, iy) ==
                      doctest::Approx(u1.at(it, ix)).epsilon(1e-12));
    }
}

TEST_CASE("randomized solve with h = 0 ignores the path entirely") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    SpaceTimeGrid g = lattice_grid(0.5, 2.0, 64, 3);
    PoissonPath jumpy;
    jumpy.jump_times = {0.2, 0.55, 0.8};
    PoissonPath empty;
    auto with_path = solve_randomized_1d(a, f, jumpy, 0.0, g);
    auto without = solve_randomized_1d(a, f, empty, 0.0, g);
    REQUIRE(with_path.u_on_lattice.values.size() == without.u_on_lattice.values.size());
    for (std::size_t i = 0; i < with_path.u_on_lattice.values.size(); ++i)
        CHECK(with_path.u_on_lattice.values[i] == without.u_on_lattice.values[i]);
}

TEST_CASE("randomized solve rejects mismatched y spacing") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    SpaceTimeGrid g = lattice_grid(0.25, 2.0, 64, 3);
    PoissonPath empty;
    CHECK_THROWS_AS(solve_randomized_1d(a, f, empty, 0.3, g), config_error);
}

TEST_CASE("single-jump slice matches the two-piece oracle to 1e-8") {
    // Piecewise Duhamel: before s0 the y factor is f_y(y), after s0 it is
    // f_y(y - h); closed-form gaussian smoothing integrated adaptively.
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25, s0 = 0.5, t = 1.0, x = 0.3, y = 0.25;
    PoissonPath path;
    path.jump_times = {s0};
    auto sol = randomized_point_solution(a, f, path, h);

    const double sx = kBumpSigmaX, sy = kBumpSigmaY;
    auto smoothed = [&](double s) {
        const double var = sx * sx + 2.0 * (t - s);
        return sx / std::sqrt(var) * std::exp(-x * x / (2.0 * var));
    };
    auto gauss_y = [&](double yy) { return std::exp(-yy * yy / (2.0 * sy * sy)); };
    const double pre = integrate_adaptive(smoothed, 0.0, s0, 1e-12) * gauss_y(y);
    const double post = integrate_adaptive(smoothed, s0, t, 1e-12) * gauss_y(y - h);
    CHECK(sol.eval_u(t, x, y) == doctest::Approx(pre + post).epsilon(1e-8));
}

TEST_CASE("jump integral: trivial cases and the one-term sum") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    PoissonPath empty;
    auto sol0 = randomized_point_solution(a, f, empty, 0.25);
    CHECK(jump_integral(sol0, 0.25, 1.0, 0.3, 0.2) == 0.0);

    PoissonPath one;
    one.jump_times = {0.5};
    auto sol1 = randomized_point_solution(a, f, one, 0.25);
    const double got = jump_integral(sol1, 0.25, 1.0, 0.3, 0.2);
    const double want = sol1.eval_u(0.5, 0.3, 0.45) - sol1.eval_u(0.5, 0.3, 0.2);
    CHECK(got == doctest::Approx(want).epsilon(1e-14));
    // h = 0 kills the jump term identically.
    auto solz = randomized_point_solution(a, f, one, 0.0);
    CHECK(jump_integral(solz, 0.0, 1.0, 0.3, 0.2) == 0.0);
}

TEST_CASE("dyadic freezing converges to the exact jump sum") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto rate = RateProfile::constant(1.0, 1.0);
    const double h = 0.25, t = 1.0, x = 0.3, y = 0.25;
    DuhamelOptions fast;
    fast.hermite_order = 20;
    fast.time_cells = 6;
    const int n_paths = 60;
    double sup_g = 0.0;
    std::vector<int> levels = {4, 8, 12};
    std::vector<double> gaps(levels.size(), 0.0);
    int used = 0;
    for (int p = 0; p < n_paths; ++p) {
        auto path = sample_path_inversion(rate, Rng::keyed(2024, p).next_u64());
        if (path.jump_times.empty()) continue;
        ++used;
        auto sol = randomized_point_solution(a, f, path, h, fast);
        const double exact = jump_integral(sol, h, t, x, y);
        for (std::size_t j = 0; j < path.jump_times.size(); ++j) {
            const double s = path.jump_times[j];
            if (s > t) break;
            const double base = y + h * static_cast<double>(j);
            sup_g = std::max(sup_g, std::abs(sol.eval_u(s, x, base + h) - sol.eval_u(s, x, base)));
        }
        for (std::size_t li = 0; li < levels.size(); ++li)
            gaps[li] += std::abs(jump_integral_dyadic(sol, h, levels[li], t, x, y) - exact);
    }
    REQUIRE(used > 20);
    for (auto& gap : gaps) gap /= used;
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
    CHECK(gaps[2] < 1e-3 * sup_g);
}

TEST_CASE("lemma 3.1: trivial configurations vanish on both sides") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    LiftConfig cfg;
    cfg.n_paths = 50;
    cfg.master_seed = 5;
    auto rep0 = verify_lemma_3_1(a, f, RateProfile::zero(1.0), 0.25, cfg, 1.0, 0.3, 0.2);
    CHECK(rep0.mc_lhs == 0.0);
    CHECK(rep0.quad_rhs == 0.0);

    auto rate = RateProfile::constant(1.0, 1.0);
    auto reph = verify_lemma_3_1(a, f, rate, 0.0, cfg, 1.0, 0.3, 0.2);
    CHECK(reph.mc_lhs == 0.0);
    CHECK(reph.quad_rhs == 0.0);
}

TEST_CASE("lemma 3.1 identity holds at Monte Carlo scale") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto rate = RateProfile::constant(1.0, 1.0);
    LiftConfig cfg;
    cfg.n_paths = 2000;
    cfg.master_seed = 77;
    DuhamelOptions fast;
    fast.hermite_order = 20;
    fast.time_cells = 4;
    auto rep = verify_lemma_3_1(a, f, rate, 0.25, cfg, 1.0, 0.3, 0.2, fast);
    CHECK(rep.mc_stderr > 0.0);
    CHECK(std::abs(rep.mc_lhs - rep.quad_rhs) <= 3.0 * rep.mc_stderr + 1e-4);
}

TEST_CASE("lemma 3.1 holds for a discontinuous rate") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto rate = RateProfile::piecewise_constant({0.5}, {2.0, 0.5}, 1.0);
    LiftConfig cfg;
    cfg.n_paths = 1500;
    cfg.master_seed = 404;
    DuhamelOptions fast;
    fast.hermite_order = 20;
    fast.time_cells = 4;
    auto rep = verify_lemma_3_1(a, f, rate, 0.25, cfg, 1.0, 0.3, 0.2, fast);
    CHECK(std::abs(rep.mc_lhs - rep.quad_rhs) <= 3.0 * rep.mc_stderr + 1e-4);
}

TEST_CASE("lemma 3.1 is reproducible bit-exactly") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto rate = RateProfile::linear_ramp(0.0, 2.0, 1.0);
    LiftConfig cfg;
    cfg.n_paths = 300;
    cfg.master_seed = 99;
    DuhamelOptions fast;
    fast.hermite_order = 20;
    fast.time_cells = 4;
    auto r1 = verify_lemma_3_1(a, f, rate, 0.5, cfg, 1.0, 0.3, 0.25, fast);
    auto r2 = verify_lemma_3_1(a, f, rate, 0.5, cfg, 1.0, 0.3, 0.25, fast);
    CHECK(r1.mc_lhs == r2.mc_lhs);
    CHECK(r1.mc_stderr == r2.mc_stderr);
    CHECK(r1.quad_rhs == r2.quad_rhs);
}

TEST_CASE("pathwise jump decomposition of the randomized solution") {
    // u(t,x,y+h pi_t) = int_0^t [a D_x^2 u(s,x,y+h pi_s) + f(s,x,y)] ds
    //                 + jump integral, exactly per path.
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto fxx = dxx_source(f);
    auto rate = RateProfile::constant(1.0, 1.0);
    const double h = 0.25, t = 1.0, x = 0.3, y = 0.25;
    DuhamelOptions fine;  // defaults
    for (int p = 0; p < 12; ++p) {
        auto path = sample_path_inversion(rate, Rng::keyed(31337, p).next_u64());
        auto sol = randomized_point_solution(a, f, path, h, fine);
        auto sol_xx = randomized_point_solution(a, fxx, path, h, fine);
        const double lhs = sol.eval_u(t, x, y + h * count_at(path, t));
        std::vector<double> breaks;
        for (double s : path.jump_times)
            if (s < t) breaks.push_back(s);
        const auto quad = heatlift::detail::make_time_quad(t, breaks, DuhamelOptions{32, 8, 8});
        KahanSum time_integral;
        for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
            const double s = quad.nodes[q];
            const double integrand =
                a.at(s) * sol_xx.eval_u(s, x, y + h * count_at(path, s)) + f.eval(s, x, y);
            time_integral.add(quad.weights[q] * integrand);
        }
        const double rhs = time_integral.value() + jump_integral(sol, h, t, x, y);
        CHECK(lhs == doctest::Approx(rhs).epsilon(5e-6));
    }
}

TEST_CASE("expectation lift: zero rate reduces to the deterministic frozen solve") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 2.0, 64, 3);
    LiftConfig cfg;
    cfg.jump_size = h;
    cfg.n_paths = 1;
    cfg.master_seed = 4;
    auto mc = lift_expectation_v(a, f, RateProfile::zero(1.0), h, cfg, g);
    CHECK(mc.rejection_fraction == 0.0);
    PoissonPath empty;
    auto det = solve_randomized_1d(a, f, empty, h, g);
    for (std::size_t i = 0; i < mc.mean.values.size(); ++i) {
        CHECK(mc.mean.values[i] == det.u_on_lattice.values[i]);
        CHECK(mc.stderr_of_mean.values[i] == 0.0);
    }
}

TEST_CASE("expectation lift: y-independent forcing is shift-invisible") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = SourceTerm::separable_2d(constant_time_factor(),
                                      gaussian_bump_factor(1.0, 0.0, kBumpSigmaX), unit_factor(),
                                      "bump-x only");
    f.support_radius = f.terms[0].fx.support_radius;
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 1.0, 64, 3);
    LiftConfig cfg;
    cfg.jump_size = h;
    cfg.n_paths = 40;
    cfg.master_seed = 6;
    auto rate = RateProfile::constant(1.0, 1.0);
    auto mc = lift_expectation_v(a, f, rate, h, cfg, g);
    auto f1 = SourceTerm::separable_1d(constant_time_factor(),
                                       gaussian_bump_factor(1.0, 0.0, kBumpSigmaX));
    SpaceTimeGrid g1 =
        SpaceTimeGrid::uniform_1d(1.0, g.nt(), g.x_nodes.front(), g.x_nodes.back(), g.nx());
    auto u1 = solve_heat_1d(a, f1, g1);
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iy = 0; iy < g.ny(); ++iy)
                CHECK(mc.mean.at(it, ix, iy) == doctest::Approx(u1.at(it, ix)).epsilon(1e-10));
}

TEST_CASE("negative jump size mirrors the positive one") {
    // With mirrored y-forcing, flipping the sign of h flips the solution in
    // y; the arithmetic mirrors exactly, so the fields agree bit-for-bit.
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    const double c = 0.3, h = 0.25;
    auto f_plus = SourceTerm::separable_2d(constant_time_factor(),
                                           gaussian_bump_factor(1.0, 0.0, kBumpSigmaX),
                                           gaussian_bump_factor(1.0, c, kBumpSigmaY));
    auto f_minus = SourceTerm::separable_2d(constant_time_factor(),
                                            gaussian_bump_factor(1.0, 0.0, kBumpSigmaX),
                                            gaussian_bump_factor(1.0, -c, kBumpSigmaY));
    SpaceTimeGrid g = lattice_grid(h, 6.0, 32, 3);
    LiftConfig cfg;
    cfg.jump_size = h;
    cfg.n_paths = 30;
    cfg.master_seed = 31;
    DuhamelOptions fast;
    fast.hermite_order = 16;
    fast.time_cells = 4;
    auto rate = RateProfile::constant(1.0, 1.0);
    auto up = lift_expectation_v(a, f_minus, rate, h, cfg, g, fast);
    auto dn = lift_expectation_v(a, f_plus, rate, -h, cfg, g, fast);
    const std::size_t ny = g.ny();
    for (std::size_t it = 0; it < g.nt(); ++it)
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iy = 0; iy < ny; ++iy)
                CHECK(up.mean.at(it, ix, iy) == dn.mean.at(it, ix, ny - 1 - iy));
}

TEST_CASE("lattice solvers: zero forcing and zero rate") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto zero_rate = RateProfile::zero(1.0);
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 6.0, 128, 3);
    auto v0 = solve_lattice_v(a, zero_source_2d(), zero_rate, h, g);
    for (double v : v0.values) CHECK(v == 0.0);

    auto f = test_bump();
    LatticeOptions fine;
    fine.dt_cap = 1.25e-3;
    auto v = solve_lattice_v(a, f, zero_rate, h, g, fine);
    auto w = solve_lattice_w(a, f, zero_rate, h, g, fine);
    PoissonPath empty;
    auto det = solve_randomized_1d(a, f, empty, h, g);
    double scale = sup_norm(det.u_on_lattice);
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        CHECK(std::abs(v.values[i] - det.u_on_lattice.values[i]) < 2e-6 * scale);
        CHECK(std::abs(w.values[i] - det.u_on_lattice.values[i]) < 2e-6 * scale);
    }
}

TEST_CASE("lattice solutions obey the sup bound") {
    auto a = DiffusivityProfile::linear_ramp(1.0, 0.5, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 7.0, 64, 5);
    for (double lam : {0.5, 1.0, 2.0}) {
        auto rate = RateProfile::constant(lam, 1.0);
        CHECK(sup_norm(solve_lattice_v(a, f, rate, h, g)) <= f.sup_bound * (1.0 + 1e-6) + 1e-6);
        CHECK(sup_norm(solve_lattice_w(a, f, rate, h, g)) <= f.sup_bound * (1.0 + 1e-6) + 1e-6);
    }
}

TEST_CASE("lattice margin precondition") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    auto rate = RateProfile::constant(4.0, 1.0);
    SpaceTimeGrid tight = lattice_grid(0.25, 4.0, 64, 3);  // support 3.6 + margin > 4
    CHECK_THROWS_AS(solve_lattice_v(a, f, rate, 0.25, tight), config_error);
}

TEST_CASE("centered lattice solution is locally affine-exact in y") {
    // f = (1 + 0.3 y) g(x) on the plateau: the centered difference kills the
    // affine part, so w = (1 + 0.3 y) u_g locally.
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    SpatialFactor affine;
    Cutoff cut{0.0, 2.0, 4.0};
    affine.value = [cut](double y) { return (1.0 + 0.3 * y) * cut(y); };
    affine.sup = 2.2;
    affine.support_radius = 4.0;
    affine.center = 0.0;
    affine.radius = 4.0;
    affine.scale = 1.0;
    auto f = SourceTerm::separable_2d(constant_time_factor(),
                                      gaussian_bump_factor(1.0, 0.0, kBumpSigmaX), affine,
                                      "affine-y");
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 8.0, 64, 3);
    auto rate = RateProfile::constant(1.0, 1.0);
    auto w = solve_lattice_w(a, f, rate, h, g);

    auto f1 = SourceTerm::separable_1d(constant_time_factor(),
                                       gaussian_bump_factor(1.0, 0.0, kBumpSigmaX));
    SpaceTimeGrid g1 =
        SpaceTimeGrid::uniform_1d(1.0, g.nt(), g.x_nodes.front(), g.x_nodes.back(), g.nx());
    auto u1 = solve_heat_1d(a, f1, g1);
    const double scale = sup_norm(u1);
    for (double y : {-0.5, 0.0, 0.25, 0.5}) {
        const std::size_t iy = g.nearest_y(y);
        for (std::size_t ix = 20; ix < 44; ++ix) {
            const double want = (1.0 + 0.3 * g.y_nodes[iy]) * u1.at(2, ix);
            CHECK(std::abs(w.at(2, ix, iy) - want) < 1.5e-3 * scale);
        }
    }
}

TEST_CASE("expectation lift agrees with the one-sided lattice solver") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 6.0, 64, 3);
    auto rate = RateProfile::constant(1.0, 1.0);
    LiftConfig cfg;
    cfg.jump_size = h;
    cfg.n_paths = 400;
    cfg.master_seed = 2718;
    DuhamelOptions fast;
    fast.hermite_order = 20;
    fast.time_cells = 6;
    auto mc = lift_expectation_v(a, f, rate, h, cfg, g, fast);
    CHECK(mc.rejection_fraction < 1e-3);
    auto det = solve_lattice_v(a, f, rate, h, g);
    const double scale = sup_norm(det);
    std::size_t outliers = 0, total = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < det.values.size(); ++i) {
        const double diff = std::abs(mc.mean.values[i] - det.values[i]);
        const double gate = 3.0 * mc.stderr_of_mean.values[i] + 1e-5 * scale;
        ++total;
        if (diff > gate) ++outliers;
        worst = std::max(worst, diff / (mc.stderr_of_mean.values[i] + 1e-5 * scale));
    }
    CHECK(static_cast<double>(outliers) / static_cast<double>(total) < 0.01);
    CHECK(worst < 6.0);
}

TEST_CASE("two-route consistency for the centered equation") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 6.0, 64, 3);
    auto rate = RateProfile::constant(1.0, 1.0);
    auto w_det = solve_lattice_w(a, f, rate, h, g);
    auto w_mc = lattice_w_via_double_expectation(a, f, rate, h, g, 300, 515);
    CHECK(w_mc.rejection_fraction < 1e-3);
    const double scale = sup_norm(w_det);
    std::size_t outliers = 0;
    for (std::size_t i = 0; i < w_det.values.size(); ++i) {
        const double diff = std::abs(w_mc.mean.values[i] - w_det.values[i]);
        if (diff > 3.0 * w_mc.stderr_of_mean.values[i] + 2e-5 * scale) ++outliers;
    }
    CHECK(static_cast<double>(outliers) / static_cast<double>(w_det.values.size()) < 0.01);
}

TEST_CASE("lattice solutions satisfy their discrete equations") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 6.0, 64, 21);
    auto rate = RateProfile::constant(1.0, 1.0);
    auto v = solve_lattice_v(a, f, rate, h, g);
    auto w = solve_lattice_w(a, f, rate, h, g);
    EquationSpec eq_v{EquationSpec::Kind::lattice_v, h, rate.value};
    EquationSpec eq_w{EquationSpec::Kind::lattice_w, h, rate.value};
    CHECK(pde_residual(v, a, f, eq_v) < 10.0 * (g.dt + g.dx * g.dx) * f.sup_bound);
    CHECK(pde_residual(w, a, f, eq_w) < 10.0 * (g.dt + g.dx * g.dx) * f.sup_bound);
}

TEST_CASE("randomized slices satisfy the shifted 1D residual contract") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 2.0, 64, 21);
    auto path = sample_path_inversion(RateProfile::constant(1.0, 1.0), 321);
    auto sol = solve_randomized_1d(a, f, path, h, g);
    auto a1 = a;
    for (std::size_t iy : {std::size_t{4}, std::size_t{8}}) {
        const double y = g.y_nodes[iy];
        auto slice = slice_as_1d_field(sol.u_on_lattice, iy);
        EquationSpec eq;
        const auto& p = sol.path;
        auto forcing = [&f, &p, h, y](double t, double x, double) {
            return f.eval(t, x, y - h * count_at(p, t));
        };
        CHECK(pde_residual(slice, a1, forcing, eq) < 10.0 * (g.dt + g.dx * g.dx) * f.sup_bound);
    }
}

TEST_CASE("expectation lift reproduces bit-exactly for a fixed seed") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    const double h = 0.25;
    SpaceTimeGrid g = lattice_grid(h, 2.0, 64, 3);
    LiftConfig cfg;
    cfg.jump_size = h;
    cfg.n_paths = 48;
    cfg.master_seed = 12345;
    DuhamelOptions fast;
    fast.hermite_order = 16;
    fast.time_cells = 4;
    auto rate = RateProfile::constant(1.0, 1.0);
    auto m1 = lift_expectation_v(a, f, rate, h, cfg, g, fast);
    auto m2 = lift_expectation_v(a, f, rate, h, cfg, g, fast);
    for (std::size_t i = 0; i < m1.mean.values.size(); ++i) {
        CHECK(m1.mean.values[i] == m2.mean.values[i]);
        CHECK(m1.stderr_of_mean.values[i] == m2.stderr_of_mean.values[i]);
    }
}

TEST_CASE("dimension lift limit: degenerate and error cases") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    SpaceTimeGrid g = SpaceTimeGrid::uniform_2d(1.0, 3, -10.4, 10.4, 128, -10.4, 10.4, 53);
    auto rep = dimension_lift_limit(a, zero_source_2d(), g, {0.4, 0.2});
    CHECK(rep.degenerate);
    CHECK(std::isnan(rep.observed_order));
    CHECK_THROWS_AS(dimension_lift_limit(a, zero_source_2d(), g, {0.2, 0.4}),
                    std::invalid_argument);
    CHECK_THROWS_AS(dimension_lift_limit(a, zero_source_2d(), g, {0.4, 0.3}), config_error);
    CHECK_THROWS_AS(dimension_lift_limit(a, zero_source_2d(), g, {0.4}), std::invalid_argument);
}

TEST_CASE("dimension lift limit: errors shrink under the diffusive coupling") {
    auto a = DiffusivityProfile::constant(1.0, 1.0);
    auto f = test_bump();
    SpaceTimeGrid g = SpaceTimeGrid::uniform_2d(1.0, 3, -10.4, 10.4, 256, -10.4, 10.4, 53);
    auto rep = dimension_lift_limit(a, f, g, {0.4, 0.2});
    REQUIRE(rep.sup_errors.size() == 2);
    CHECK(rep.sup_errors[1] < rep.sup_errors[0]);
    CHECK(rep.observed_order > 1.5);
}
