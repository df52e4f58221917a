#pragma once

// Mean matrix of the occupancy process, its Perron eigenpair, and extinction
// probabilities as the minimal fixed point of the offspring generating map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gwqs/errors.hpp"
#include "gwqs/kernel.hpp"
#include "gwqs/matrix.hpp"

namespace gwqs {

// W(i, j) = A_H(i) M_H(i, j): expected class-j children of one class-i parent.
class MeanMatrix {
public:
    MeanMatrix() = default;
    explicit MeanMatrix(SquareMatrix entries) : entries_(std::move(entries)) {
        const std::size_t n = entries_.size();
        first_.assign(n, 0);
        last_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = entries_.row(i);
            std::size_t lo = 0, hi = n;
            while (lo < n && r[lo] == 0.0) ++lo;
            while (hi > lo && r[hi - 1] == 0.0) --hi;
            first_[i] = lo;
            last_[i] = hi;
        }
    }

    std::size_t size() const noexcept { return entries_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
    const SquareMatrix& matrix() const noexcept { return entries_; }

    // z^T W. Rows of the kernel vanish (underflow to exact zero) outside a band
    // around the diagonal; only the nonzero span of each row is visited, which
    // leaves every sum unchanged.
    std::vector<double> apply_left(std::span<const double> z) const {
        const std::size_t n = size();
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double zi = z[i];
            if (zi == 0.0) continue;
            const double* r = entries_.row(i).data();
            for (std::size_t j = first_[i]; j < last_[i]; ++j) y[j] += zi * r[j];
        }
        return y;
    }

private:
    SquareMatrix entries_;
    std::vector<std::size_t> first_, last_;  // nonzero span [first, last) per row
};

inline MeanMatrix mean_matrix(const ModelParams& params, const LumpedKernel& kernel) {
    SquareMatrix w = kernel.matrix();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double a = fitness_class(i, params);
        for (double& x : w.row(i)) x *= a;
    }
    return MeanMatrix(std::move(w));
}

inline MeanMatrix mean_matrix(const ModelParams& params) {
    return mean_matrix(params, lumped_kernel_matrix(params));
}

struct PerronPair {
    double lambda = 0.0;
    std::vector<double> rho;  // left eigenvector, unit 1-norm
    double residual = 0.0;    // ||rho^T W - lambda rho^T||_1
    long iterations = 0;
};

inline constexpr double kPerronTol = 1e-12;
inline constexpr long kPerronMaxIter = 1'000'000;

// Left power iteration from the uniform vector with 1-norm renormalization.
// Stops once both the residual and the change in the eigenvalue estimate are
// below tol * lambda.
inline PerronPair perron(const MeanMatrix& w, double tol = kPerronTol, long max_iter = kPerronMaxIter) {
    const std::size_t n = w.size();
    if (n == 0) throw UsageError("perron: empty matrix");
    if (!(tol > 0.0)) throw UsageError("perron: tol must be > 0");
    for (double x : w.matrix().data())
        if (!(x >= 0.0) || !std::isfinite(x)) throw UsageError("perron: matrix must be finite and nonnegative");

    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    double lambda_prev = 0.0;
    double residual = 0.0;
    for (long it = 1; it <= max_iter; ++it) {
        std::vector<double> y = w.apply_left(v);
        double lambda = 0.0;
        for (double x : y) lambda += x;
        if (!(lambda > 0.0)) throw ConvergenceError("perron: iterate vanished", 0.0, it);
        residual = 0.0;
        for (std::size_t k = 0; k < n; ++k) residual += std::fabs(y[k] - lambda * v[k]);
        if (residual < tol * lambda && std::fabs(lambda - lambda_prev) <= tol * lambda)
            return PerronPair{lambda, std::move(v), residual, it};
        lambda_prev = lambda;
        for (std::size_t k = 0; k < n; ++k) v[k] = y[k] / lambda;
    }
    throw ConvergenceError("perron: power iteration did not converge", residual, max_iter);
}

// One sandwich inequality lower <= lambda rho(k) <= upper, where lower collects the
// contributions from classes 0..k and upper adds the largest single kernel entry
// reaching k from above.
struct PerronBound {
    std::size_t k = 0;
    double lower = 0.0;
    double middle = 0.0;
    double upper = 0.0;
    bool lower_ok = false;
    bool upper_ok = false;
    bool strict = false;  // both inequalities hold strictly
};

struct PerronBoundsReport {
    std::vector<PerronBound> bounds;
    bool all_pass() const {
        return std::all_of(bounds.begin(), bounds.end(),
                           [](const PerronBound& b) { return b.lower_ok && b.upper_ok; });
    }
};

inline PerronBoundsReport perron_bounds_check(const PerronPair& pair, const ModelParams& params,
                                              const LumpedKernel& kernel, std::size_t k_report = 10) {
    const std::size_t ell = params.ell;
    if (pair.rho.size() != ell + 1 || kernel.size() != ell + 1)
        throw UsageError("perron_bounds_check: dimension mismatch");
    const auto& rho = pair.rho;
    const double sigma = params.sigma;
    PerronBoundsReport report;
    const std::size_t kmax = std::min(k_report, ell);
    for (std::size_t k = 0; k <= kmax; ++k) {
        double lower = sigma * rho[0] * kernel(0, k);
        for (std::size_t i = 1; i <= k; ++i) lower += rho[i] * kernel(i, k);
        double reach = 0.0;
        for (std::size_t i = k + 1; i <= ell; ++i) reach = std::max(reach, kernel(i, k));
        PerronBound b;
        b.k = k;
        b.lower = lower;
        b.middle = pair.lambda * rho[k];
        b.upper = lower + reach;
        const double slack = 1e-12 + 1e-10 * std::fabs(b.middle);
        b.lower_ok = b.lower <= b.middle + slack;
        b.upper_ok = b.middle <= b.upper + slack;
        b.strict = b.lower < b.middle && b.middle < b.upper;
        report.bounds.push_back(b);
    }
    return report;
}

inline PerronBoundsReport perron_bounds_check(const PerronPair& pair, const ModelParams& params,
                                              std::size_t k_report = 10) {
    return perron_bounds_check(pair, params, lumped_kernel_matrix(params), k_report);
}

struct ExtinctionVector {
    std::vector<double> probs;  // probs[k]: extinction from one class-k individual
    long iterations = 0;
    double last_step = 0.0;     // sup-norm of the final update
};

inline constexpr double kExtinctionTol = 1e-12;
inline constexpr long kExtinctionMaxIter = 100'000;

// Offspring generating map of the occupancy process:
//   f_k(s) = exp(A_H(k) (sum_l M_H(k, l) s(l) - 1)).
// The lumped offspring law is a product of independent Poisson(A_H(k) M_H(k, l))
// laws, whose joint pgf is exactly this expression.
inline double generating_function(std::size_t k, std::span<const double> s, const ModelParams& params,
                                  const LumpedKernel& kernel) {
    double m = 0.0;
    const auto row = kernel.matrix().row(k);
    for (std::size_t l = 0; l < row.size(); ++l) m += row[l] * s[l];
    return std::exp(fitness_class(k, params) * (m - 1.0));
}

inline std::vector<double> generating_map(std::span<const double> s, const ModelParams& params,
                                          const LumpedKernel& kernel) {
    std::vector<double> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = generating_function(k, s, params, kernel);
    return out;
}

// Iterates s <- f(s) from s0 over the coordinates flagged active; inactive
// coordinates stay at their s0 value.
inline ExtinctionVector iterate_generating_map(const ModelParams& params, const LumpedKernel& kernel,
                                               std::vector<double> s, const std::vector<bool>& active,
                                               double tol, long max_iter) {
    if (!(tol > 0.0)) throw UsageError("extinction: tol must be > 0");
    double step = 0.0;
    for (long it = 1; it <= max_iter; ++it) {
        std::vector<double> next = s;
        step = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (!active[k]) continue;
            next[k] = generating_function(k, s, params, kernel);
            step = std::max(step, std::fabs(next[k] - s[k]));
        }
        s = std::move(next);
        if (step < tol) return ExtinctionVector{std::move(s), it, step};
    }
    throw ConvergenceError("extinction: fixed-point iteration did not converge", step, max_iter);
}

// Minimal fixed point of the generating map, reached by monotone iteration from 0.
// Critical coordinates are resolved directly: with sigma = 1 every individual has
// Poisson(1) offspring, and with q = 0 every class k >= 1 is a closed Poisson(1)
// line; both die out with probability 1, which the iteration would only
// approach at rate O(1/m).
inline ExtinctionVector extinction_probabilities(const ModelParams& params, const LumpedKernel& kernel,
                                                 double tol = kExtinctionTol,
                                                 long max_iter = kExtinctionMaxIter) {
    const std::size_t n = params.classes();
    std::vector<double> s(n, 0.0);
    std::vector<bool> active(n, true);
    if (params.sigma == 1.0) return ExtinctionVector{std::vector<double>(n, 1.0), 0, 0.0};
    if (params.q == 0.0) {
        for (std::size_t k = 1; k < n; ++k) {
            s[k] = 1.0;
            active[k] = false;
        }
    }
    return iterate_generating_map(params, kernel, std::move(s), active, tol, max_iter);
}

inline ExtinctionVector extinction_probabilities(const ModelParams& params, double tol = kExtinctionTol,
                                                 long max_iter = kExtinctionMaxIter) {
    return extinction_probabilities(params, lumped_kernel_matrix(params), tol, max_iter);
}

}  // namespace gwqs
