#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heatlift {

namespace detail {

// C^3 smoothstep: 0 for w<=0, 1 for w>=1.
inline double smoothstep7(double w) {
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;
    const double w4 = w * w * w * w;
    return w4 * (35.0 - 84.0 * w + 70.0 * w * w - 20.0 * w * w * w);
}
inline double smoothstep7_d1(double w) {
    if (w <= 0.0 || w >= 1.0) return 0.0;
    const double w3 = w * w * w;
    return w3 * (140.0 - 420.0 * w + 420.0 * w * w - 140.0 * w3);
}
inline double smoothstep7_d2(double w) {
    if (w <= 0.0 || w >= 1.0) return 0.0;
    const double w2 = w * w;
    return w2 * (420.0 - 1680.0 * w + 2100.0 * w2 - 840.0 * w2 * w);
}

}  // namespace detail

/// Compactly supported radial cutoff: 1 on |x-c|<=plateau, 0 beyond outer,
/// C^3 smoothstep transition in between.
struct Cutoff {
    double center = 0.0;
    double plateau = 0.0;
    double outer = 0.0;

    double operator()(double x) const {
        const double r = std::abs(x - center);
        if (r <= plateau) return 1.0;
        if (r >= outer) return 0.0;
        return detail::smoothstep7((outer - r) / (outer - plateau));
    }
    double d1(double x) const {
        const double u = x - center, r = std::abs(u);
        if (r <= plateau || r >= outer) return 0.0;
        const double width = outer - plateau;
        const double sign = u >= 0.0 ? 1.0 : -1.0;
        return detail::smoothstep7_d1((outer - r) / width) * (-sign / width);
    }
    double d2(double x) const {
        const double r = std::abs(x - center);
        if (r <= plateau || r >= outer) return 0.0;
        const double width = outer - plateau;
        return detail::smoothstep7_d2((outer - r) / width) / (width * width);
    }
};

/// One spatial factor: value, exact second derivative, and the geometry the
/// quadrature needs (support interval and variation scale).
struct SpatialFactor {
    std::function<double(double)> value;
    std::function<double(double)> second_derivative;
    double sup = 0.0;             // sup |value|
    double support_radius = 0.0;  // |x| beyond which value == 0 exactly
    double center = 0.0;          // support is [center - radius, center + radius]
    double radius = 0.0;
    double scale = 1.0;           // shortest length over which the factor varies
};

/// Gaussian envelope times a compact cutoff placed where the envelope is
/// below 1e-14 of its peak, so the factor is exactly compactly supported
/// while derivatives keep their closed forms everywhere.
inline SpatialFactor gaussian_bump_factor(double amplitude, double center, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("bump: sigma must be positive");
    Cutoff cut{center, 8.0 * sigma, 9.0 * sigma};
    auto gauss = [amplitude, center, sigma](double x) {
        const double u = (x - center) / sigma;
        return amplitude * std::exp(-0.5 * u * u);
    };
    SpatialFactor f;
    f.value = [gauss, cut](double x) { return gauss(x) * cut(x); };
    f.second_derivative = [gauss, cut, center, sigma](double x) {
        const double g = gauss(x);
        const double u = (x - center) / sigma;
        const double g1 = -u / sigma * g;
        const double g2 = (u * u - 1.0) / (sigma * sigma) * g;
        return g2 * cut(x) + 2.0 * g1 * cut.d1(x) + g * cut.d2(x);
    };
    f.sup = std::abs(amplitude);
    f.support_radius = std::abs(center) + 9.0 * sigma;
    f.center = center;
    f.radius = 9.0 * sigma;
    f.scale = sigma;
    return f;
}

/// sin(x) on a plateau, smoothly truncated to zero outside.
inline SpatialFactor sine_cutoff_factor(double plateau = 10.0, double outer = 12.0) {
    Cutoff cut{0.0, plateau, outer};
    SpatialFactor f;
    f.value = [cut](double x) { return std::sin(x) * cut(x); };
    f.second_derivative = [cut](double x) {
        return -std::sin(x) * cut(x) + 2.0 * std::cos(x) * cut.d1(x) + std::sin(x) * cut.d2(x);
    };
    f.sup = 1.0;
    f.support_radius = outer;
    f.center = 0.0;
    f.radius = outer;
    f.scale = 1.0;
    return f;
}

/// |x|^alpha envelope under the same compact cutoff; Holder test function,
/// no second derivative at the origin (second_derivative left empty).
inline SpatialFactor abs_power_factor(double alpha, double plateau = 2.0, double outer = 3.0) {
    Cutoff cut{0.0, plateau, outer};
    SpatialFactor f;
    f.value = [cut, alpha](double x) { return std::pow(std::abs(x), alpha) * cut(x); };
    f.sup = std::pow(outer, alpha);
    f.support_radius = outer;
    f.center = 0.0;
    f.radius = outer;
    f.scale = 0.25;
    return f;
}

/// Bounded Borel time modulation of one separable term.
struct TimeFactor {
    std::function<double(double)> value = [](double) { return 1.0; };
    double sup = 1.0;
};

inline TimeFactor constant_time_factor() { return TimeFactor{}; }

inline TimeFactor cosine_time_factor(double omega) {
    TimeFactor f;
    f.value = [omega](double t) { return std::cos(omega * t); };
    f.sup = 1.0;
    return f;
}

/// Forcing term f(t,x) or f(t,x,y): a sum of separable products
/// time(t) * fx(x) [* fy(y)]. Separability is what the fast solver paths
/// exploit; eval() is the authoritative definition.
struct SourceTerm {
    struct Term {
        TimeFactor time;
        SpatialFactor fx;
        SpatialFactor fy;  // unused when dim == 1
    };

    int dim = 1;
    std::vector<Term> terms;
    double sup_bound = 0.0;
    double support_radius = 0.0;
    double holder_alpha = 0.5;
    std::optional<double> holder_seminorm_analytic;
    std::string descriptor;

    double eval(double t, double x) const {
        double s = 0.0;
        for (const auto& term : terms) s += term.time.value(t) * term.fx.value(x);
        return s;
    }
    double eval(double t, double x, double y) const {
        double s = 0.0;
        for (const auto& term : terms)
            s += term.time.value(t) * term.fx.value(x) * term.fy.value(y);
        return s;
    }
    double eval_dxx(double t, double x) const {
        double s = 0.0;
        for (const auto& term : terms) s += term.time.value(t) * term.fx.second_derivative(x);
        return s;
    }
    double eval_dxx(double t, double x, double y) const {
        double s = 0.0;
        for (const auto& term : terms)
            s += term.time.value(t) * term.fx.second_derivative(x) * term.fy.value(y);
        return s;
    }

    static SourceTerm separable_1d(TimeFactor time, SpatialFactor fx, std::string descriptor = {}) {
        SourceTerm f;
        f.dim = 1;
        f.sup_bound = time.sup * fx.sup;
        f.support_radius = fx.support_radius;
        f.terms.push_back({std::move(time), std::move(fx), {}});
        f.descriptor = std::move(descriptor);
        return f;
    }

    static SourceTerm separable_2d(TimeFactor time, SpatialFactor fx, SpatialFactor fy,
                                   std::string descriptor = {}) {
        SourceTerm f;
        f.dim = 2;
        f.sup_bound = time.sup * fx.sup * fy.sup;
        f.support_radius = std::max(fx.support_radius, fy.support_radius);
        f.terms.push_back({std::move(time), std::move(fx), std::move(fy)});
        f.descriptor = std::move(descriptor);
        return f;
    }

    /// Linear combination c1*f1 + c2*f2 (same dim); sup_bound is the
    /// triangle-inequality bound.
    static SourceTerm combine(double c1, const SourceTerm& f1, double c2, const SourceTerm& f2) {
        if (f1.dim != f2.dim) throw std::invalid_argument("source: dim mismatch in combine");
        SourceTerm f;
        f.dim = f1.dim;
        for (auto term : f1.terms) {
            term.fx.sup *= std::abs(c1);
            auto base = term.fx.value;
            auto base2 = term.fx.second_derivative;
            term.fx.value = [base, c1](double x) { return c1 * base(x); };
            if (base2) term.fx.second_derivative = [base2, c1](double x) { return c1 * base2(x); };
            f.terms.push_back(std::move(term));
        }
        for (auto term : f2.terms) {
            term.fx.sup *= std::abs(c2);
            auto base = term.fx.value;
            auto base2 = term.fx.second_derivative;
            term.fx.value = [base, c2](double x) { return c2 * base(x); };
            if (base2) term.fx.second_derivative = [base2, c2](double x) { return c2 * base2(x); };
            f.terms.push_back(std::move(term));
        }
        f.sup_bound = std::abs(c1) * f1.sup_bound + std::abs(c2) * f2.sup_bound;
        f.support_radius = std::max(f1.support_radius, f2.support_radius);
        f.holder_alpha = f1.holder_alpha;
        f.descriptor = "combine(" + f1.descriptor + ";" + f2.descriptor + ")";
        return f;
    }
};

/// Canonical 1D Gaussian bump forcing.
inline SourceTerm bump_source_1d(double amplitude = 1.0, double center = 0.0, double sigma = 0.5) {
    auto f = SourceTerm::separable_1d(constant_time_factor(),
                                      gaussian_bump_factor(amplitude, center, sigma),
                                      "bump1d amp=" + std::to_string(amplitude) +
                                          " sigma=" + std::to_string(sigma));
    return f;
}

/// Canonical 2D product-bump forcing.
inline SourceTerm bump_source_2d(double amplitude = 1.0, double cx = 0.0, double cy = 0.0,
                                 double sx = 0.4, double sy = 0.4) {
    auto f = SourceTerm::separable_2d(constant_time_factor(),
                                      gaussian_bump_factor(amplitude, cx, sx),
                                      gaussian_bump_factor(1.0, cy, sy),
                                      "bump2d amp=" + std::to_string(amplitude) +
                                          " sx=" + std::to_string(sx) +
                                          " sy=" + std::to_string(sy));
    return f;
}

/// Truncated sin(x) forcing; with a == 1 the untruncated solution is
/// (1 - e^{-t}) sin(x).
inline SourceTerm sine_source_1d(double plateau = 10.0, double outer = 12.0) {
    return SourceTerm::separable_1d(constant_time_factor(), sine_cutoff_factor(plateau, outer),
                                    "sine1d");
}

}  // namespace heatlift
