#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "heatlift/diffusivity.hpp"
#include "heatlift/quadrature.hpp"
#include "heatlift/rng.hpp"

namespace heatlift {

/// Jump intensity lambda(t) >= 0 on [0,T] with a finite upper bound and a
/// cumulative mean m(t) = \int_0^t lambda.
struct RateProfile {
    std::function<double(double)> value;
    double max_rate = 0.0;
    double horizon = 0.0;
    std::function<double(double)> cumulative_fn;
    std::vector<double> time_breakpoints;  // interior jumps of lambda(t)

    double at(double t) const { return value(t); }

    double mean(double t) const {
        if (!(t >= 0.0 && t <= horizon))
            throw std::domain_error("RateProfile::mean: t outside [0,T]");
        return t == 0.0 ? 0.0 : cumulative_fn(t);
    }

    /// Monotone inverse of the mean, bisection to 1e-10 in time.
    double inverse_mean(double m) const {
        double lo = 0.0, hi = horizon;
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            (mean(mid) < m ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    void validate(int samples = 2048, bool require_positive = false) const {
        if (!(horizon > 0.0)) throw std::invalid_argument("rate: horizon must be positive");
        for (int i = 0; i <= samples; ++i) {
            const double t = horizon * static_cast<double>(i) / samples;
            const double lam = value(t);
            if (!std::isfinite(lam) || lam < 0.0 || lam > max_rate + 1e-12)
                throw std::invalid_argument("rate: lambda(t) escapes [0, max_rate]");
            if (require_positive && !(lam > 0.0))
                throw std::invalid_argument("rate: lambda(t) must be positive");
        }
    }

    static RateProfile zero(double horizon) {
        RateProfile r;
        r.value = [](double) { return 0.0; };
        r.max_rate = 0.0;
        r.horizon = horizon;
        r.cumulative_fn = [](double) { return 0.0; };
        return r;
    }

    static RateProfile constant(double lam, double horizon) {
        if (lam < 0.0) throw std::invalid_argument("rate: lambda must be nonnegative");
        RateProfile r;
        r.value = [lam](double) { return lam; };
        r.max_rate = lam;
        r.horizon = horizon;
        r.cumulative_fn = [lam](double t) { return lam * t; };
        r.validate(8);
        return r;
    }

    static RateProfile linear_ramp(double c0, double slope, double horizon) {
        RateProfile r;
        r.value = [c0, slope](double t) { return c0 + slope * t; };
        r.max_rate = std::max(c0, c0 + slope * horizon);
        r.horizon = horizon;
        r.cumulative_fn = [c0, slope](double t) { return c0 * t + 0.5 * slope * t * t; };
        r.validate();
        return r;
    }

    static RateProfile piecewise_constant(std::vector<double> breaks, std::vector<double> values,
                                          double horizon) {
        if (values.size() != breaks.size() + 1)
            throw std::invalid_argument("rate: need one more value than breakpoints");
        std::vector<double> edges{0.0};
        for (double b : breaks) edges.push_back(b);
        edges.push_back(horizon);
        if (!std::is_sorted(edges.begin(), edges.end()))
            throw std::invalid_argument("rate: breakpoints must be sorted in (0,T)");
        std::vector<double> prefix{0.0};
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            prefix.push_back(prefix.back() + values[i] * (edges[i + 1] - edges[i]));
        auto seg = [edges, values](double t) {
            auto it = std::upper_bound(edges.begin(), edges.end(), t);
            std::size_t k = static_cast<std::size_t>(it - edges.begin());
            if (k > 0) --k;
            if (k >= values.size()) k = values.size() - 1;
            return k;
        };
        RateProfile r;
        r.value = [seg, values](double t) { return values[seg(t)]; };
        r.max_rate = *std::max_element(values.begin(), values.end());
        r.horizon = horizon;
        r.cumulative_fn = [seg, edges, values, prefix](double t) {
            const std::size_t k = seg(t);
            return prefix[k] + values[k] * (t - edges[k]);
        };
        r.time_breakpoints = breaks;
        r.validate();
        return r;
    }

    static RateProfile from_callable(std::function<double(double)> fn, double max_rate,
                                     double horizon, std::vector<double> breakpoints = {}) {
        RateProfile r;
        r.value = fn;
        r.max_rate = max_rate;
        r.horizon = horizon;
        auto cache = std::make_shared<detail::PrefixIntegral>(fn, horizon, breakpoints);
        r.cumulative_fn = [cache](double t) { return cache->at(t); };
        r.time_breakpoints = std::move(breakpoints);
        r.validate();
        return r;
    }
};

/// Mean function m(t) = \int_0^t lambda(s) ds by adaptive quadrature.
inline double mean_function(const RateProfile& rate, double t) {
    if (!(t >= 0.0 && t <= rate.horizon))
        throw std::domain_error("mean_function: t outside [0,T]");
    if (t == 0.0) return 0.0;
    return integrate_adaptive(rate.value, 0.0, t, 1e-10);
}

/// P(pi_t - pi_s = k): Poisson pmf with mean m(t) - m(s), log-space for
/// large k.
inline double increment_pmf(const RateProfile& rate, double s, double t, unsigned k) {
    if (!(s >= 0.0 && t <= rate.horizon) || s > t)
        throw std::domain_error("increment_pmf: need 0 <= s <= t <= T");
    const double mu = rate.mean(t) - rate.mean(s);
    if (mu <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1.0));
}

/// One sampled trajectory: strictly increasing jump times in (0,T].
struct PoissonPath {
    std::vector<double> jump_times;
    std::uint64_t seed = 0;
};

namespace detail {

inline void enforce_strictly_increasing(std::vector<double>& times) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1])
            times[i] = std::nextafter(times[i - 1], times[i - 1] + 1.0);
}

}  // namespace detail

/// Inversion sampler: N ~ Poisson(m(T)) uniforms on (0, m(T)] mapped through
/// the monotone inverse of the mean function.
inline PoissonPath sample_path_inversion(const RateProfile& rate, std::uint64_t seed) {
    PoissonPath path;
    path.seed = seed;
    const double total = rate.mean(rate.horizon);
    if (total <= 0.0) return path;
    Rng rng = Rng::keyed(seed, 0x1);
    const int n = rng.poisson(total);
    path.jump_times.reserve(n);
    for (int i = 0; i < n; ++i)
        path.jump_times.push_back(rate.inverse_mean(total * rng.uniform_pos()));
    detail::enforce_strictly_increasing(path.jump_times);
    return path;
}

/// Thinning sampler: homogeneous candidates at max_rate, each accepted with
/// probability lambda(t)/max_rate.
inline PoissonPath sample_path_thinning(const RateProfile& rate, std::uint64_t seed) {
    PoissonPath path;
    path.seed = seed;
    if (rate.max_rate <= 0.0) return path;
    Rng rng = Rng::keyed(seed, 0x2);
    const int n = rng.poisson(rate.max_rate * rate.horizon);
    std::vector<double> candidates(n);
    for (int i = 0; i < n; ++i) candidates[i] = rate.horizon * rng.uniform_pos();
    std::sort(candidates.begin(), candidates.end());
    for (double t : candidates)
        if (rng.uniform01() * rate.max_rate < rate.at(t)) path.jump_times.push_back(t);
    detail::enforce_strictly_increasing(path.jump_times);
    return path;
}

/// Number of jumps at or before t (left_limit: strictly before t).
inline int count_at(const PoissonPath& path, double t, bool left_limit = false) {
    const auto& v = path.jump_times;
    auto it = left_limit ? std::lower_bound(v.begin(), v.end(), t)
                         : std::upper_bound(v.begin(), v.end(), t);
    return static_cast<int>(it - v.begin());
}

/// Debug dump: one line per path, comma-separated jump times.
inline void write_path_dump(std::ostream& os, const std::vector<PoissonPath>& paths) {
    for (const auto& p : paths) {
        for (std::size_t i = 0; i < p.jump_times.size(); ++i) {
            if (i) os << ',';
            os << p.jump_times[i];
        }
        os << '\n';
    }
}

}  // namespace heatlift
