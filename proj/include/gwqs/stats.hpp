#pragma once

// Small statistics toolkit for the Monte Carlo checks: chi-square tail
// probabilities, binned two-sample and goodness-of-fit tests, total variation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace gwqs {

// P(X >= x) for X ~ chi-square(df).
inline double chi_square_sf(double x, double df) {
    if (df <= 0.0) return 1.0;
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

struct TwoSampleReport {
    double total_variation = 0.0;
    ChiSquareResult chi_square;
};

// Compares two empirical distributions over the same key space. Keys whose
// combined count is below min_pool are merged into a single pooled bin.
template <class Key>
TwoSampleReport two_sample_compare(const std::map<Key, std::uint64_t>& a, const std::map<Key, std::uint64_t>& b,
                                   std::uint64_t min_pool = 10) {
    double na = 0.0, nb = 0.0;
    for (const auto& [k, c] : a) na += static_cast<double>(c);
    for (const auto& [k, c] : b) nb += static_cast<double>(c);

    std::map<Key, std::pair<double, double>> joint;
    for (const auto& [k, c] : a) joint[k].first += static_cast<double>(c);
    for (const auto& [k, c] : b) joint[k].second += static_cast<double>(c);

    TwoSampleReport out;
    std::vector<std::pair<double, double>> bins;
    std::pair<double, double> pooled{0.0, 0.0};
    for (const auto& [k, ab] : joint) {
        out.total_variation += std::fabs(ab.first / na - ab.second / nb);
        if (ab.first + ab.second < static_cast<double>(min_pool)) {
            pooled.first += ab.first;
            pooled.second += ab.second;
        } else {
            bins.push_back(ab);
        }
    }
    out.total_variation *= 0.5;
    if (pooled.first + pooled.second > 0.0) bins.push_back(pooled);

    const double ra = std::sqrt(nb / na);
    const double rb = std::sqrt(na / nb);
    double stat = 0.0;
    for (const auto& [x, y] : bins) {
        const double d = ra * x - rb * y;
        stat += d * d / (x + y);
    }
    out.chi_square.statistic = stat;
    out.chi_square.bins = bins.size();
    out.chi_square.df = bins.empty() ? 0 : bins.size() - 1;
    out.chi_square.p_value = chi_square_sf(stat, static_cast<double>(out.chi_square.df));
    return out;
}

// Pearson goodness of fit of observed counts against exact cell probabilities.
// Cells with expected count below min_expected are pooled; the residual mass
// 1 - sum(probs) forms its own cell (observations falling outside `probs`
// must be passed in `overflow`).
inline ChiSquareResult goodness_of_fit(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs,
                                       std::uint64_t overflow, double min_expected = 5.0) {
    double n = static_cast<double>(overflow);
    for (auto c : observed) n += static_cast<double>(c);
    double rest_p = 1.0;
    for (double p : probs) rest_p -= p;
    rest_p = std::max(rest_p, 0.0);

    std::vector<std::pair<double, double>> cells;  // (observed, expected)
    std::pair<double, double> pooled{static_cast<double>(overflow), n * rest_p};
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double e = n * probs[i];
        if (e < min_expected) {
            pooled.first += static_cast<double>(observed[i]);
            pooled.second += e;
        } else {
            cells.emplace_back(static_cast<double>(observed[i]), e);
        }
    }
    if (pooled.second > 0.0) cells.push_back(pooled);

    ChiSquareResult out;
    for (const auto& [o, e] : cells) out.statistic += (o - e) * (o - e) / e;
    out.bins = cells.size();
    out.df = cells.empty() ? 0 : cells.size() - 1;
    out.p_value = chi_square_sf(out.statistic, static_cast<double>(out.df));
    return out;
}

struct MeanAndError {
    double mean = 0.0;
    double standard_error = 0.0;
};

inline MeanAndError mean_and_error(const std::vector<double>& xs) {
    MeanAndError out;
    const double n = static_cast<double>(xs.size());
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= n;
    if (xs.size() < 2) {
        out.standard_error = std::numeric_limits<double>::infinity();
        return out;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.standard_error = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace gwqs
