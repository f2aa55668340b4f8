#pragma once

#include <cmath>
#include <cstdint>

namespace sigdet {

inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic splitmix64 stream. Streams derived from (seed, a, b) are
// stable across platforms, runs and schedulers, which is what makes
// per-patient and per-replicate results independent of parallel execution.
class Rng {
  public:
    explicit Rng(uint64_t state) : state_(state) {}

    static Rng from(uint64_t seed, uint64_t a = 0, uint64_t b = 0) {
        return Rng(mix64(mix64(mix64(seed) ^ a) ^ b));
    }

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer on [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = uint64_t(hi - lo) + 1;
        return lo + int64_t(next_u64() % span);
    }

    // Knuth's product method; splits large means to stay inside the range
    // of exp(-mean).
    int64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 600.0) return poisson(mean / 2) + poisson(mean / 2);
        const double limit = std::exp(-mean);
        int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Geometric on {1, 2, ...} with the given mean (>= 1).
    int64_t geometric_min1(double mean) {
        if (mean <= 1.0) return 1;
        const double p = 1.0 / mean;
        double u = uniform();
        return 1 + int64_t(std::floor(std::log1p(-u) / std::log1p(-p)));
    }

  private:
    uint64_t state_;
};

}  // namespace sigdet
