#pragma once

// Sharp-peak fitness and per-locus mutation kernels.
//
// Three levels are provided:
//   - genotype level: sequences of length ell over kappa letters (small-instance oracle),
//   - lumped level:   (ell+1) x (ell+1) kernel between Hamming classes,
//   - limit level:    the Poisson(a) shift kernel obtained as ell -> inf, ell*q -> a.
//
// The master sequence is the all-zeros genotype.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gwqs/binomial.hpp"
#include "gwqs/errors.hpp"
#include "gwqs/matrix.hpp"

namespace gwqs {

struct ModelParams {
    double sigma = 1.0;      // master-sequence fitness, >= 1
    std::size_t ell = 1;     // sequence length, >= 1
    std::size_t kappa = 2;   // alphabet size, >= 2
    double q = 0.0;          // per-locus mutation probability, in [0, 1)

    static ModelParams make(double sigma, std::size_t ell, std::size_t kappa, double q) {
        ModelParams p{sigma, ell, kappa, q};
        p.validate();
        return p;
    }

    // q derived as a / ell.
    static ModelParams with_a(double sigma, std::size_t ell, std::size_t kappa, double a) {
        return make(sigma, ell, kappa, a / static_cast<double>(ell));
    }

    void validate() const {
        if (!(sigma >= 1.0) || !std::isfinite(sigma))
            throw UsageError("sigma must be a finite real >= 1, got " + std::to_string(sigma));
        if (ell < 1) throw UsageError("ell must be >= 1");
        if (kappa < 2) throw UsageError("kappa must be >= 2 (mutation needs another letter)");
        if (!(q >= 0.0 && q < 1.0))
            throw UsageError("q must lie in [0, 1), got " + std::to_string(q));
    }

    double a() const { return static_cast<double>(ell) * q; }
    std::size_t classes() const { return ell + 1; }

    // probability that a mutating locus lands on one specific other letter
    double back_mutation() const { return q / static_cast<double>(kappa - 1); }
};

class Genotype {
public:
    Genotype() = default;
    explicit Genotype(std::vector<std::uint32_t> letters) : letters_(std::move(letters)) {}

    static Genotype master(std::size_t ell) { return Genotype(std::vector<std::uint32_t>(ell, 0)); }

    std::size_t length() const noexcept { return letters_.size(); }
    std::uint32_t operator[](std::size_t i) const { return letters_[i]; }
    std::uint32_t& operator[](std::size_t i) { return letters_[i]; }
    const std::vector<std::uint32_t>& letters() const noexcept { return letters_; }

    void check(const ModelParams& params) const {
        if (letters_.size() != params.ell)
            throw UsageError("genotype length " + std::to_string(letters_.size())
                             + " does not match ell = " + std::to_string(params.ell));
        for (auto x : letters_)
            if (x >= params.kappa) throw UsageError("genotype letter out of alphabet range");
    }

    auto operator<=>(const Genotype&) const = default;

private:
    std::vector<std::uint32_t> letters_;
};

inline std::size_t hamming_distance(const Genotype& u, const Genotype& v) {
    if (u.length() != v.length())
        throw UsageError("hamming_distance: length mismatch (" + std::to_string(u.length()) + " vs "
                         + std::to_string(v.length()) + ")");
    std::size_t d = 0;
    for (std::size_t i = 0; i < u.length(); ++i) d += (u[i] != v[i]) ? 1 : 0;
    return d;
}

// Number of zero-free letters, i.e. the Hamming class of u.
inline std::size_t hamming_class(const Genotype& u) {
    return static_cast<std::size_t>(
        std::count_if(u.letters().begin(), u.letters().end(), [](auto x) { return x != 0; }));
}

inline double fitness_class(std::size_t l, const ModelParams& params) {
    if (l > params.ell)
        throw UsageError("class index " + std::to_string(l) + " out of range [0, "
                         + std::to_string(params.ell) + "]");
    return l == 0 ? params.sigma : 1.0;
}

inline double fitness_genotype(const Genotype& u, const ModelParams& params) {
    u.check(params);
    return fitness_class(hamming_class(u), params);
}

inline double mutation_prob_genotype(const Genotype& u, const Genotype& v, const ModelParams& params) {
    u.check(params);
    v.check(params);
    const double stay = 1.0 - params.q;
    const double move = params.back_mutation();
    double p = 1.0;
    for (std::size_t i = 0; i < params.ell; ++i) p *= (u[i] == v[i]) ? stay : move;
    return p;
}

// Calls f(genotype) for every genotype in A^ell, in lexicographic order.
// Intended for small instances only (kappa^ell terms).
template <class F>
void for_each_genotype(std::size_t ell, std::size_t kappa, F&& f) {
    std::vector<std::uint32_t> letters(ell, 0);
    while (true) {
        f(Genotype(letters));
        std::size_t i = ell;
        while (i > 0) {
            --i;
            if (++letters[i] < kappa) break;
            letters[i] = 0;
            if (i == 0) return;
        }
        if (ell == 0) return;
    }
}

// log card(C_k) = log( C(ell, k) (kappa - 1)^k )
inline double log_class_size(std::size_t ell, std::size_t kappa, std::size_t k) {
    if (k > ell) return detail::kNegInf;
    const double n = static_cast<double>(ell);
    const double x = static_cast<double>(k);
    return std::lgamma(n + 1) - std::lgamma(x + 1) - std::lgamma(n - x + 1)
           + x * std::log(static_cast<double>(kappa - 1));
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& terms) {
    double m = kNegInf;
    for (double t : terms) m = std::max(m, t);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

inline void check_class(std::size_t c, const ModelParams& params) {
    if (c > params.ell)
        throw UsageError("class index " + std::to_string(c) + " out of range [0, "
                         + std::to_string(params.ell) + "]");
}

}  // namespace detail

// M_H(b, c): probability that a child of a class-b parent lands in class c.
//
// A class-b parent has ell - b master letters and b non-master letters. The child
// gains k non-master letters among the former (Bin(ell - b, q)) and loses l among
// the latter by mutating back to the master letter (Bin(b, q / (kappa - 1))), with
// c = b + k - l. Each term of the double sum is formed in log space.
inline double lumped_kernel_entry(std::size_t b, std::size_t c, const ModelParams& params) {
    detail::check_class(b, params);
    detail::check_class(c, params);
    const auto ell = static_cast<std::int64_t>(params.ell);
    const auto bi = static_cast<std::int64_t>(b);
    const auto ci = static_cast<std::int64_t>(c);
    const std::int64_t l_lo = std::max<std::int64_t>(0, bi - ci);
    const std::int64_t l_hi = std::min<std::int64_t>(bi, ell - ci);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, l_hi - l_lo + 1)));
    for (std::int64_t l = l_lo; l <= l_hi; ++l) {
        const std::int64_t k = ci - bi + l;
        terms.push_back(log_binomial_pmf(k, ell - bi, params.q)
                        + log_binomial_pmf(l, bi, params.back_mutation()));
    }
    const double lse = detail::log_sum_exp(terms);
    return lse == detail::kNegInf ? 0.0 : std::exp(lse);
}

// Row-stochastic kernel between Hamming classes.
class LumpedKernel {
public:
    LumpedKernel() = default;
    explicit LumpedKernel(SquareMatrix entries) : entries_(std::move(entries)) {}

    std::size_t size() const noexcept { return entries_.size(); }
    double operator()(std::size_t b, std::size_t c) const { return entries_(b, c); }
    const SquareMatrix& matrix() const noexcept { return entries_; }

    double row_deviation(std::size_t b) const { return std::fabs(entries_.row_sum(b) - 1.0); }

    double max_row_deviation() const {
        double d = 0.0;
        for (std::size_t b = 0; b < size(); ++b) d = std::max(d, row_deviation(b));
        return d;
    }

private:
    SquareMatrix entries_;
};

// Full lumped kernel. Row b is the law of b + K - L with K ~ Bin(ell - b, q) and
// L ~ Bin(b, q/(kappa-1)) independent, so each row is a convolution of two
// binomial pmfs. Both pmfs are formed in log space and shifted by their maxima;
// terms more than ~745 nats below the maximum cannot contribute a representable
// amount and are skipped.
inline LumpedKernel lumped_kernel_matrix(const ModelParams& params) {
    params.validate();
    const std::size_t n = params.classes();
    const std::size_t ell = params.ell;
    SquareMatrix m(n);
    constexpr double cutoff = -745.0;

    auto log_pmf_row = [](std::size_t trials, double p) {
        std::vector<double> lp(trials + 1);
        for (std::size_t k = 0; k <= trials; ++k)
            lp[k] = log_binomial_pmf(static_cast<std::int64_t>(k), static_cast<std::int64_t>(trials), p);
        return lp;
    };
    struct Scaled {
        double log_max;
        std::size_t lo, hi;
        std::vector<double> values;
    };
    auto scale = [&](const std::vector<double>& lp) {
        const double mx = *std::max_element(lp.begin(), lp.end());
        std::size_t lo = lp.size(), hi = 0;
        for (std::size_t i = 0; i < lp.size(); ++i) {
            if (lp[i] - mx > cutoff) {
                lo = std::min(lo, i);
                hi = i;
            }
        }
        std::vector<double> v(lp.size(), 0.0);
        for (std::size_t i = lo; i <= hi; ++i) v[i] = std::exp(lp[i] - mx);
        return Scaled{mx, lo, hi, std::move(v)};
    };

    for (std::size_t b = 0; b < n; ++b) {
        const Scaled fwd = scale(log_pmf_row(ell - b, params.q));
        const Scaled back = scale(log_pmf_row(b, params.back_mutation()));
        auto row = m.row(b);
        for (std::size_t l = back.lo; l <= back.hi; ++l) {
            const double pl = back.values[l];
            // c = b + k - l >= 0 always holds since k >= 0 and l <= b.
            double* out = row.data() + (b - l);
            for (std::size_t k = fwd.lo; k <= fwd.hi; ++k) out[k] += pl * fwd.values[k];
        }
        const double factor = std::exp(fwd.log_max + back.log_max);
        for (double& x : row) x *= factor;
    }
    return LumpedKernel(std::move(m));
}

// lim M_H(i, k) as ell -> inf, q -> 0, ell q -> a: Poisson(a) pmf at k - i.
inline double limit_kernel(std::size_t i, std::size_t k, double a) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw UsageError("limit_kernel: a must be finite and >= 0");
    if (k < i) return 0.0;
    const double lp = log_poisson_pmf(static_cast<std::int64_t>(k - i), a);
    return lp == detail::kNegInf ? 0.0 : std::exp(lp);
}

}  // namespace gwqs
