#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace heatlift {

/// Compensated (Kahan) accumulator.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Streaming mean / standard error with compensated sums.
struct MeanAccumulator {
    KahanSum s1, s2;
    std::size_t n = 0;

    void add(double x) {
        s1.add(x);
        s2.add(x * x);
        ++n;
    }
    void merge(const MeanAccumulator& o) {
        s1.add(o.s1.value());
        s2.add(o.s2.value());
        n += o.n;
    }
    double mean() const { return n ? s1.value() / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double v = (s2.value() - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderr_of_mean() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

namespace detail {

// Regularized lower incomplete gamma P(a,x), series + continued fraction.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double eps = 1e-16, fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Chi-square CDF with k degrees of freedom.
inline double chi_square_cdf(double x, double dof) { return gamma_p(0.5 * dof, 0.5 * x); }

/// Quantile of the chi-square distribution (bisection on the CDF).
inline double chi_square_quantile(double prob, double dof) {
    if (prob <= 0.0 || prob >= 1.0) throw std::invalid_argument("chi_square_quantile: prob in (0,1)");
    double lo = 0.0, hi = dof + 10.0;
    while (chi_square_cdf(hi, dof) < prob) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (chi_square_cdf(mid, dof) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double critical = 0.0;   // quantile at 1 - significance
    bool reject = false;
};

/// Goodness-of-fit of observed histogram counts against expected counts.
/// Bins with expected mass below `min_expected` are pooled into their
/// right neighbour (the final pool absorbs the tail).
inline ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                                      const std::vector<double>& expected,
                                      double significance, double min_expected = 5.0) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof: size mismatch");
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    ChiSquareResult r;
    r.dof = static_cast<int>(exp.size()) - 1;
    if (r.dof < 1) r.dof = 1;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        const double d = obs[i] - exp[i];
        r.statistic += d * d / exp[i];
    }
    r.critical = chi_square_quantile(1.0 - significance, r.dof);
    r.reject = r.statistic > r.critical;
    return r;
}

/// Two-sample chi-square homogeneity test on two histograms.
inline ChiSquareResult chi_square_two_sample(const std::vector<double>& a,
                                             const std::vector<double>& b,
                                             double significance, double min_count = 5.0) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("chi_square_two_sample: size mismatch");
    std::vector<double> ka, kb;
    double a_acc = 0.0, b_acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a_acc += a[i];
        b_acc += b[i];
        if (a_acc + b_acc >= 2.0 * min_count) {
            ka.push_back(a_acc);
            kb.push_back(b_acc);
            a_acc = b_acc = 0.0;
        }
    }
    if ((a_acc > 0.0 || b_acc > 0.0) && !ka.empty()) {
        ka.back() += a_acc;
        kb.back() += b_acc;
    }
    double na = 0.0, nb = 0.0;
    for (double v : ka) na += v;
    for (double v : kb) nb += v;
    ChiSquareResult r;
    r.dof = static_cast<int>(ka.size()) - 1;
    if (r.dof < 1) r.dof = 1;
    const double ra = std::sqrt(nb / na), rb = std::sqrt(na / nb);
    for (std::size_t i = 0; i < ka.size(); ++i) {
        if (ka[i] + kb[i] <= 0.0) continue;
        const double d = ra * ka[i] - rb * kb[i];
        r.statistic += d * d / (ka[i] + kb[i]);
    }
    r.critical = chi_square_quantile(1.0 - significance, r.dof);
    r.reject = r.statistic > r.critical;
    return r;
}

/// Pearson correlation of two samples.
inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson_correlation: size mismatch");
    MeanAccumulator mx, my;
    for (double v : x) mx.add(v);
    for (double v : y) my.add(v);
    const double ax = mx.mean(), ay = my.mean();
    KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy.add((x[i] - ax) * (y[i] - ay));
        sxx.add((x[i] - ax) * (x[i] - ax));
        syy.add((y[i] - ay) * (y[i] - ay));
    }
    const double denom = std::sqrt(sxx.value() * syy.value());
    return denom > 0.0 ? sxy.value() / denom : 0.0;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

}  // namespace heatlift
