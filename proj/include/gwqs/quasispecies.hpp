#pragma once

// Limiting distribution of the Hamming-class frequencies as ell -> inf, q -> 0,
// ell q -> a. Below the error threshold (sigma e^{-a} > 1) the frequencies
// converge to
//
//     Q(sigma, a)(k) = (sigma e^{-a} - 1) a^k / k! * sum_{i >= 1} i^k sigma^{-i},
//
// otherwise every class frequency tends to 0.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gwqs/errors.hpp"

namespace gwqs {

struct QuasispeciesParams {
    double sigma = 2.0;  // > 1
    double a = 0.0;      // >= 0, finite

    static QuasispeciesParams make(double sigma, double a) {
        QuasispeciesParams p{sigma, a};
        p.validate();
        return p;
    }

    void validate() const {
        if (!(sigma > 1.0) || !std::isfinite(sigma))
            throw UsageError("quasispecies: sigma must be a finite real > 1, got " + std::to_string(sigma));
        if (!(a >= 0.0) || !std::isfinite(a))
            throw UsageError("quasispecies: a must be finite and >= 0, got " + std::to_string(a));
    }

    // log(sigma e^{-a}), compared against 0 so that sigma = 2, a = log 2 lands
    // exactly on the boundary.
    double log_threshold() const { return std::log(sigma) - a; }
    double threshold() const { return std::exp(log_threshold()); }
};

enum class Regime { Disordered, Quasispecies };

inline const char* to_string(Regime r) { return r == Regime::Disordered ? "disordered" : "quasispecies"; }

inline Regime classify_regime(const QuasispeciesParams& p) {
    p.validate();
    return p.log_threshold() <= 0.0 ? Regime::Disordered : Regime::Quasispecies;
}

// Limit of the Perron eigenvalue: max(1, sigma e^{-a}).
inline double limit_eigenvalue(const QuasispeciesParams& p) {
    return classify_regime(p) == Regime::Quasispecies ? p.threshold() : 1.0;
}

struct SeriesSum {
    double log_value = 0.0;       // log S
    long terms = 0;
    double relative_tail = 0.0;   // bound on (S - partial) / partial
};

// S_k(sigma) = sum_{i >= 1} i^k sigma^{-i}, accumulated in log space.
//
// Past the peak of i^k sigma^{-i}, consecutive term ratios are bounded by
// r_i = (1 + 1/i)^k / sigma, which decreases in i, so once r_i < 1 the
// remainder is at most t_i r_i / (1 - r_i). Summation stops when that bound
// drops below rel_tol times the partial sum.
inline SeriesSum log_power_series(std::size_t k, double sigma, double rel_tol = 1e-16) {
    if (!(sigma > 1.0)) throw UsageError("power series needs sigma > 1");
    const double kd = static_cast<double>(k);
    const double log_sigma = std::log(sigma);
    double shift = 0.0;  // partial = e^shift * acc
    double acc = 0.0;
    constexpr long max_terms = 200'000'000;
    for (long i = 1; i <= max_terms; ++i) {
        const double id = static_cast<double>(i);
        const double lt = kd * std::log(id) - id * log_sigma;
        if (acc == 0.0) {
            shift = lt;
            acc = 1.0;
        } else if (lt > shift) {
            acc = acc * std::exp(shift - lt) + 1.0;
            shift = lt;
        } else {
            acc += std::exp(lt - shift);
        }
        const double log_ratio = kd * std::log1p(1.0 / id) - log_sigma;
        if (log_ratio < 0.0) {
            const double r = std::exp(log_ratio);
            // log of tail bound relative to the partial sum
            const double rel = std::exp(lt - shift - std::log(acc)) * r / (1.0 - r);
            if (rel <= rel_tol) return SeriesSum{shift + std::log(acc), i, rel};
        }
    }
    throw ConvergenceError("power series did not converge", 0.0, max_terms);
}

// Q(sigma, a)(k); zero in the disordered regime. tol bounds the relative
// truncation error of the inner series.
inline double qs_pmf(const QuasispeciesParams& p, std::size_t k, double tol = 1e-16) {
    if (classify_regime(p) == Regime::Disordered) return 0.0;
    if (p.a == 0.0) return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    const double log_prefactor = std::log(std::expm1(p.log_threshold()));
    const double log_poisson_weight = kd * std::log(p.a) - std::lgamma(kd + 1.0);
    const SeriesSum s = log_power_series(k, p.sigma, tol);
    return std::exp(log_prefactor + log_poisson_weight + s.log_value);
}

// Upper bound on sum_{k > K} Q(sigma, a)(k).
//
// Expanding Q and swapping sums gives C sum_i sigma^{-i} sum_{k > K} (a i)^k / k!
// with C = sigma e^{-a} - 1. For a i <= (K + 2)/2 the inner Poisson tail is at
// most 2 (a i)^{K+1} / (K+1)!, and summing that over all i gives
// 2 a^{K+1}/(K+1)! S_{K+1}(sigma). For the remaining i the inner sum is at most
// e^{a i}, a geometric series in r = e^a / sigma < 1.
inline double qs_tail_bound(const QuasispeciesParams& p, std::size_t K) {
    if (classify_regime(p) == Regime::Disordered) return 0.0;
    if (p.a == 0.0) return 0.0;
    const double c = std::expm1(p.log_threshold());
    const double k1 = static_cast<double>(K + 1);
    const SeriesSum s = log_power_series(K + 1, p.sigma);
    const double near = 2.0 * std::exp(k1 * std::log(p.a) - std::lgamma(k1 + 1.0) + s.log_value)
                        * (1.0 + 1e-12);
    const double i0 = std::floor((static_cast<double>(K) + 2.0) / (2.0 * p.a));
    const double log_r = p.a - std::log(p.sigma);
    const double far = std::exp((i0 + 1.0) * log_r) / (-std::expm1(log_r));
    return c * (near + far);
}

struct QuasispeciesPMF {
    std::vector<double> probs;  // k = 0..K
    std::size_t K = 0;
    double tail_bound = 0.0;    // bound on the mass beyond K
};

// Solves the triangular system obtained from lambda rho = rho^T W in the limit,
//   (sigma - 1) rho(k) = sigma rho(0) a^k / k! + sum_{i=1}^{k-1} rho(i) a^{k-i} / (k-i)!,
// seeded with rho(0) = (sigma e^{-a} - 1) / (sigma - 1).
inline QuasispeciesPMF qs_pmf_by_recurrence(const QuasispeciesParams& p, std::size_t K) {
    if (classify_regime(p) == Regime::Disordered)
        throw DomainError("qs_pmf_by_recurrence: disordered regime (sigma e^{-a} <= 1), limit pmf is zero");
    std::vector<double> w(K + 1, 0.0);
    for (std::size_t j = 0; j <= K; ++j) {
        if (p.a == 0.0) {
            w[j] = j == 0 ? 1.0 : 0.0;
        } else {
            const double jd = static_cast<double>(j);
            w[j] = std::exp(jd * std::log(p.a) - std::lgamma(jd + 1.0));
        }
    }
    std::vector<double> rho(K + 1, 0.0);
    rho[0] = std::expm1(p.log_threshold()) / (p.sigma - 1.0);
    for (std::size_t k = 1; k <= K; ++k) {
        double rhs = p.sigma * rho[0] * w[k];
        for (std::size_t i = 1; i < k; ++i) rhs += rho[i] * w[k - i];
        rho[k] = rhs / (p.sigma - 1.0);
    }
    return QuasispeciesPMF{std::move(rho), K, qs_tail_bound(p, K)};
}

// Closed-form pmf on 0..K together with the analytic tail bound.
inline QuasispeciesPMF qs_pmf_table(const QuasispeciesParams& p, std::size_t K, double tol = 1e-16) {
    QuasispeciesPMF out;
    out.K = K;
    out.probs.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) out.probs[k] = qs_pmf(p, k, tol);
    out.tail_bound = qs_tail_bound(p, K);
    return out;
}

struct NormalizationCheck {
    double partial_sum = 0.0;  // sum_{k <= K} Q(k)
    double tail_bound = 0.0;   // bound on sum_{k > K} Q(k)
};

inline NormalizationCheck qs_normalization_check(const QuasispeciesParams& p, std::size_t K) {
    if (classify_regime(p) == Regime::Disordered)
        throw DomainError("qs_normalization_check: disordered regime has no limit pmf");
    NormalizationCheck out;
    for (std::size_t k = 0; k <= K; ++k) out.partial_sum += qs_pmf(p, k);
    out.tail_bound = qs_tail_bound(p, K);
    return out;
}

}  // namespace gwqs
