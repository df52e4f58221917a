#pragma once

// Reproducible random streams and a Poisson sampler.
//
// std::mt19937_64 and std::seed_seq are fully specified by the standard, but the
// library distributions are not, so uniforms and Poisson variates are produced
// here to keep trajectories identical across standard library implementations.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "gwqs/errors.hpp"

namespace gwqs {

struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // replica id
};

class RandomStream {
public:
    explicit RandomStream(RngSpec spec) : engine_(make_engine(spec)) {}
    RandomStream(std::uint64_t seed, std::uint64_t stream) : RandomStream(RngSpec{seed, stream}) {}

    std::uint64_t bits() { return engine_(); }

    // uniform on [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // reject the top partial block to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    static std::mt19937_64 make_engine(RngSpec spec) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(spec.stream),
                          static_cast<std::uint32_t>(spec.stream >> 32), 0x9e3779b9u};
        return std::mt19937_64(seq);
    }

    std::mt19937_64 engine_;
};

// Means at or above this use transformed rejection; below it, sequential inversion.
inline constexpr double kPoissonInversionLimit = 10.0;
// Largest mean accepted; variates stay well inside the exact-integer range of double.
inline constexpr double kPoissonMaxMean = 1e15;

// Poisson(mean) variate.
// mean < 10: inversion by sequential search of the cdf.
// mean >= 10: PTRS, Hormann's transformed rejection with squeeze (1993).
inline std::uint64_t sample_poisson(double mean, RandomStream& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw UsageError("sample_poisson: mean must be finite and >= 0");
    if (mean > kPoissonMaxMean)
        throw ResourceError("sample_poisson: mean " + std::to_string(mean) + " exceeds sampler range");
    if (mean == 0.0) return 0;

    if (mean < kPoissonInversionLimit) {
        const double u = rng.uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b)
            <= -mean + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

}  // namespace gwqs
