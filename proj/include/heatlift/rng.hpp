#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace heatlift {

/// Splittable counter-keyed random stream. A stream is fully determined by
/// (master seed, stream index, salt), so ensembles can be generated on any
/// number of workers in any order and still reproduce bit-exactly.
struct Rng {
    std::uint64_t state;

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static Rng keyed(std::uint64_t master, std::uint64_t stream, std::uint64_t salt = 0) {
        Rng r;
        r.state = mix(master) ^ mix(mix(stream) + 0x632BE59BD9B4E019ull * (salt + 1));
        return r;
    }

    std::uint64_t next_u64() {
        state += kGolden;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1].
    double uniform_pos() { return 1.0 - uniform01(); }

    /// Exact Poisson draw. Large means are split as sums of independent
    /// Poisson draws so the Knuth product never underflows.
    int poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean)) throw std::invalid_argument("poisson: bad mean");
        int total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

  private:
    int poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }
};

}  // namespace heatlift
