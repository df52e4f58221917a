#pragma once

// Log-space binomial and Poisson probability mass functions.
//
// Uses Loader's saddle-point decomposition ("Fast and Accurate Computation of
// Binomial Probabilities", 2000): the log pmf is written as a sum of Stirling
// remainders and deviance terms, each of which is small and well conditioned.
// The naive lgamma(n+1) - lgamma(k+1) - lgamma(n-k+1) form loses about
// log10(n) digits to cancellation, which shows up in row sums at n ~ 1e4.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace gwqs::detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// lgamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi)
inline double stirling_remainder(double n) {
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    if (n <= 15.0) {
        const long double nl = n;
        const long double half_log_2pi = 0.918938533204672741780329736406L;
        return static_cast<double>(std::lgamma(nl + 1.0L) - (nl + 0.5L) * std::log(nl) + nl
                                   - half_log_2pi);
    }
    const double nn = n * n;
    if (n > 500.0) return (s0 - s1 / nn) / n;
    if (n > 80.0) return (s0 - (s1 - s2 / nn) / nn) / n;
    if (n > 35.0) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x / np) + np - x, evaluated without cancellation near x = np.
inline double deviance(double x, double np) {
    if (std::fabs(x - np) < 0.1 * (x + np)) {
        double v = (x - np) / (x + np);
        double s = (x - np) * v;
        double ej = 2.0 * x * v;
        v = v * v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / np) + np - x;
}

}  // namespace gwqs::detail

namespace gwqs {

// log P(Bin(n, p) = k); returns -inf outside the support.
inline double log_binomial_pmf(std::int64_t k, std::int64_t n, double p) {
    using detail::deviance;
    using detail::kNegInf;
    using detail::stirling_remainder;
    if (k < 0 || k > n) return kNegInf;
    const double q = 1.0 - p;
    if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
    if (q == 0.0) return k == n ? 0.0 : kNegInf;
    const double nd = static_cast<double>(n);
    if (k == 0) {
        if (n == 0) return 0.0;
        return p < 0.1 ? -deviance(nd, nd * q) - nd * p : nd * std::log(q);
    }
    if (k == n) {
        return q < 0.1 ? -deviance(nd, nd * p) - nd * q : nd * std::log(p);
    }
    const double x = static_cast<double>(k);
    const double lc = stirling_remainder(nd) - stirling_remainder(x) - stirling_remainder(nd - x)
                      - deviance(x, nd * p) - deviance(nd - x, nd * q);
    const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / nd);
    return lc - 0.5 * lf;
}

// log P(Poisson(mean) = k); returns -inf outside the support.
inline double log_poisson_pmf(std::int64_t k, double mean) {
    using detail::kNegInf;
    if (k < 0) return kNegInf;
    if (mean == 0.0) return k == 0 ? 0.0 : kNegInf;
    if (k == 0) return -mean;
    const double x = static_cast<double>(k);
    return -detail::stirling_remainder(x) - detail::deviance(x, mean)
           - 0.5 * std::log(2.0 * std::numbers::pi * x);
}

}  // namespace gwqs
