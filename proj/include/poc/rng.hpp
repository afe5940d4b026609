#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace poc {

// Deterministic random stream. Built on std::mt19937_64 (bit-specified by
// the standard) with explicit uniform/normal mappings, so draws are
// reproducible across platforms and standard library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() {
        // 53 random mantissa bits, then nudge away from 0.
        const std::uint64_t bits = engine_() >> 11;
        double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (explicit, not std::normal_distribution,
    // which is implementation-defined). One spare value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double prob) { return uniform() < prob; }

    // Index in [0, n) for resampling.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace poc
