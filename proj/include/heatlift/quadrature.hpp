#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace heatlift {

/// Nodes and weights of a fixed quadrature rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Gauss-Legendre on [-1,1], Newton iteration on the Legendre recurrence.
inline QuadratureRule make_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 1; i <= half; ++i) {
        double z = std::cos(M_PI * (i - 0.25) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.nodes[i - 1] = -z;
        rule.nodes[n - i] = z;
        rule.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - i] = rule.weights[i - 1];
    }
    return rule;
}

// Gauss-Hermite with weight exp(-x^2); orthonormal recurrence keeps values bounded.
inline QuadratureRule make_gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 1; i <= half; ++i) {
        if (i == 1) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 2) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 3) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 4) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 3];
        }
        double pp = 1.0;
        for (int iter = 0; iter < 200; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-14) break;
        }
        rule.nodes[i - 1] = z;
        rule.nodes[n - i] = -z;
        rule.weights[i - 1] = 2.0 / (pp * pp);
        rule.weights[n - i] = rule.weights[i - 1];
    }
    return rule;
}

template <class F>
double adaptive_simpson_step(F&& f, double a, double m, double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_step(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_step(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Cached Gauss-Legendre rule on [-1,1].
inline const QuadratureRule& gauss_legendre(int n) {
    static std::map<int, QuadratureRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::make_gauss_legendre(n)).first;
    return it->second;
}

/// Cached Gauss-Hermite rule (weight e^{-x^2}) on the real line.
inline const QuadratureRule& gauss_hermite(int n) {
    static std::map<int, QuadratureRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::make_gauss_hermite(n)).first;
    return it->second;
}

/// Composite Gauss-Legendre integral of f over [a,b] with `cells` equal cells.
template <class F>
double integrate_gl(F&& f, double a, double b, int cells, int order = 8) {
    if (cells < 1) cells = 1;
    const auto& rule = gauss_legendre(order);
    const double len = (b - a) / cells;
    double total = 0.0;
    for (int c = 0; c < cells; ++c) {
        const double lo = a + c * len;
        const double mid = lo + 0.5 * len, scale = 0.5 * len;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            acc += rule.weights[i] * f(mid + scale * rule.nodes[i]);
        }
        total += scale * acc;
    }
    return total;
}

/// Adaptive Simpson integral with absolute tolerance.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double abs_tol, int max_depth = 48) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_step(f, a, m, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace heatlift
