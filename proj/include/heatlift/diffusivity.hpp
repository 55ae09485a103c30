#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "heatlift/quadrature.hpp"

namespace heatlift {

/// Raised when an input violates a documented precondition of a solver or
/// experiment configuration (window too small, mismatched spacing, ...).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Prefix-integral cache for a nonnegative coefficient on [0,T]. Node set is
/// uniform plus any supplied breakpoints, each cell integrated adaptively;
/// inside a cell the remainder is integrated adaptively from the nearest node
/// below, so values track the true integral to ~1e-12 regardless of kinks at
/// the registered breakpoints.
class PrefixIntegral {
  public:
    PrefixIntegral(std::function<double(double)> f, double horizon,
                   const std::vector<double>& breakpoints, int base_nodes = 2048)
        : f_(std::move(f)) {
        nodes_.reserve(base_nodes + breakpoints.size() + 2);
        for (int i = 0; i <= base_nodes; ++i)
            nodes_.push_back(horizon * static_cast<double>(i) / base_nodes);
        for (double b : breakpoints)
            if (b > 0.0 && b < horizon) nodes_.push_back(b);
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
        prefix_.assign(nodes_.size(), 0.0);
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            prefix_[i] = prefix_[i - 1] +
                         integrate_adaptive(f_, nodes_[i - 1], nodes_[i], 1e-13);
        }
    }

    double at(double t) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        if (t == nodes_[k]) return prefix_[k];
        return prefix_[k] + integrate_adaptive(f_, nodes_[k], t, 1e-13);
    }

  private:
    std::function<double(double)> f_;
    std::vector<double> nodes_;
    std::vector<double> prefix_;
};

}  // namespace detail

/// Time-dependent diffusivity a(t) on [0,T] with positive bounds and a
/// cumulative integral A(t) = \int_0^t a. Factories install a closed-form
/// cumulative where one exists; the generic factory backs it by a cached
/// adaptive prefix integral.
struct DiffusivityProfile {
    std::function<double(double)> value;
    double lower = 0.0;
    double upper = 0.0;
    double horizon = 0.0;
    std::function<double(double)> cumulative_fn;
    std::vector<double> time_breakpoints;  // interior kinks of a(t)

    double at(double t) const { return value(t); }

    /// A(t); domain error outside [0, horizon].
    double cumulative(double t) const {
        if (!(t >= 0.0 && t <= horizon))
            throw std::domain_error("DiffusivityProfile::cumulative: t outside [0,T]");
        return t == 0.0 ? 0.0 : cumulative_fn(t);
    }

    /// Sampled invariant check: 0 < lower <= a(t) <= upper on [0,T], T > 0.
    void validate(int samples = 2048) const {
        if (!(horizon > 0.0)) throw std::invalid_argument("diffusivity: horizon must be positive");
        if (!(lower > 0.0)) throw std::invalid_argument("diffusivity: lower bound must be positive");
        for (int i = 0; i <= samples; ++i) {
            const double t = horizon * static_cast<double>(i) / samples;
            const double a = value(t);
            if (!std::isfinite(a) || a < lower - 1e-12 || a > upper + 1e-12)
                throw std::invalid_argument("diffusivity: a(t) escapes [lower, upper]");
        }
    }

    static DiffusivityProfile constant(double a0, double horizon) {
        if (!(a0 > 0.0)) throw std::invalid_argument("diffusivity: a0 must be positive");
        DiffusivityProfile p;
        p.value = [a0](double) { return a0; };
        p.lower = p.upper = a0;
        p.horizon = horizon;
        p.cumulative_fn = [a0](double t) { return a0 * t; };
        p.validate(8);
        return p;
    }

    static DiffusivityProfile linear_ramp(double a0, double slope, double horizon) {
        DiffusivityProfile p;
        p.value = [a0, slope](double t) { return a0 + slope * t; };
        p.lower = std::min(a0, a0 + slope * horizon);
        p.upper = std::max(a0, a0 + slope * horizon);
        p.horizon = horizon;
        p.cumulative_fn = [a0, slope](double t) { return a0 * t + 0.5 * slope * t * t; };
        p.validate();
        return p;
    }

    static DiffusivityProfile piecewise_constant(std::vector<double> breaks,
                                                 std::vector<double> values, double horizon) {
        if (values.size() != breaks.size() + 1)
            throw std::invalid_argument("diffusivity: need one more value than breakpoints");
        // Exact piecewise-linear cumulative.
        std::vector<double> edges{0.0};
        for (double b : breaks) edges.push_back(b);
        edges.push_back(horizon);
        if (!std::is_sorted(edges.begin(), edges.end()))
            throw std::invalid_argument("diffusivity: breakpoints must be sorted in (0,T)");
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
        DiffusivityProfile p;
        p.value = [seg, values](double t) { return values[seg(t)]; };
        p.lower = *std::min_element(values.begin(), values.end());
        p.upper = *std::max_element(values.begin(), values.end());
        p.horizon = horizon;
        p.cumulative_fn = [seg, edges, values, prefix](double t) {
            const std::size_t k = seg(t);
            return prefix[k] + values[k] * (t - edges[k]);
        };
        p.time_breakpoints = breaks;
        p.validate();
        return p;
    }

    static DiffusivityProfile from_callable(std::function<double(double)> fn, double lower,
                                            double upper, double horizon,
                                            std::vector<double> breakpoints = {}) {
        DiffusivityProfile p;
        p.value = fn;
        p.lower = lower;
        p.upper = upper;
        p.horizon = horizon;
        auto cache = std::make_shared<detail::PrefixIntegral>(fn, horizon, breakpoints);
        p.cumulative_fn = [cache](double t) { return cache->at(t); };
        p.time_breakpoints = std::move(breakpoints);
        p.validate();
        return p;
    }
};

/// Cumulative diffusivity A(t) = \int_0^t a(s) ds.
inline double cumulative_diffusivity(const DiffusivityProfile& a, double t) {
    return a.cumulative(t);
}

}  // namespace heatlift
