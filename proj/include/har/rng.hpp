#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace har {

/// Portable seeded random source.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// standard. The distribution helpers below are written out explicitly rather
/// than using <random> distributions, whose algorithms are implementation
/// defined, so identical seeds give identical splits, shuffles and initial
/// weights on every platform:
///   uniform()     = (bits >> 11) * 2^-53, in [0, 1)
///   below(n)      = rejection sampling on the top of the 64-bit range
///   normal(m, s)  = Box-Muller, both variates used in order
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r = engine_();
        while (r >= limit) r = engine_();
        return r % bound;
    }

    double normal(double mean, double stddev) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return mean + stddev * radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace har
