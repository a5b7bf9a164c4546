#pragma once

#include <cmath>
#include <cstdint>

namespace flaresim {

// Deterministic counter-based PRNG (SplitMix64, Vigna 2015). The output is a
// bijective mix of seed + n*GAMMA, so the stream depends only on the seed and
// the draw index; identical seeds give identical streams on every platform.
// Constants: GAMMA = 0x9E3779B97F4A7C15 (golden ratio), mixers
// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one spare value is cached, so draws come
    // in deterministic pairs of two uniforms.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derived stream for batch item i (base_seed XOR item index, re-mixed by
    // the constructor's counter scheme).
    static SeededRng for_item(std::uint64_t base_seed, std::uint64_t index) {
        return SeededRng(base_seed ^ index);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace flaresim
