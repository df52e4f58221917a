#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gwqs/binomial.hpp"
#include "gwqs/kernel.hpp"

namespace gwqs {
namespace {

// Independent reference: sum of M(u, v) over all v in class c, by enumeration.
double brute_force_class_mass(const Genotype& u, std::size_t c, const ModelParams& p) {
    double s = 0.0;
    for_each_genotype(p.ell, p.kappa, [&](const Genotype& v) {
        if (hamming_class(v) == c) s += mutation_prob_genotype(u, v, p);
    });
    return s;
}

TEST(Hamming, IdentityAndDirectCount) {
    const Genotype u({0, 0, 0, 0});
    const Genotype v({1, 0, 1, 0});
    EXPECT_EQ(hamming_distance(u, u), 0u);
    EXPECT_EQ(hamming_distance(v, v), 0u);
    EXPECT_EQ(hamming_distance(u, v), 2u);
}

TEST(Hamming, SymmetricOnRandomPairs) {
    std::mt19937 gen(7);
    std::uniform_int_distribution<std::uint32_t> letter(0, 3);
    for (int t = 0; t < 100; ++t) {
        std::vector<std::uint32_t> a(9), b(9);
        for (auto& x : a) x = letter(gen);
        for (auto& x : b) x = letter(gen);
        std::size_t expected = 0;
        for (std::size_t i = 0; i < 9; ++i) expected += a[i] != b[i];
        const Genotype u(a), v(b);
        EXPECT_EQ(hamming_distance(u, v), expected);
        EXPECT_EQ(hamming_distance(u, v), hamming_distance(v, u));
        EXPECT_EQ(hamming_distance(u, v) == 0, u == v);
    }
}

TEST(Hamming, LengthMismatchIsUsageError) {
    EXPECT_THROW(hamming_distance(Genotype({0, 1}), Genotype({0, 1, 2})), UsageError);
}

TEST(Params, Validation) {
    EXPECT_THROW(ModelParams::make(0.5, 3, 2, 0.1), UsageError);
    EXPECT_THROW(ModelParams::make(2.0, 0, 2, 0.1), UsageError);
    EXPECT_THROW(ModelParams::make(2.0, 3, 1, 0.1), UsageError);
    EXPECT_THROW(ModelParams::make(2.0, 3, 2, 1.0), UsageError);
    EXPECT_THROW(ModelParams::make(2.0, 3, 2, -0.1), UsageError);
    EXPECT_NO_THROW(ModelParams::make(1.0, 1, 2, 0.0));
    const auto p = ModelParams::with_a(4.0, 1000, 2, std::log(2.0));
    EXPECT_DOUBLE_EQ(p.a(), std::log(2.0));
}

TEST(Fitness, SharpPeak) {
    const auto p = ModelParams::make(4.0, 10, 2, 0.1);
    EXPECT_EQ(fitness_class(0, p), 4.0);
    EXPECT_EQ(fitness_class(7, p), 1.0);
    EXPECT_THROW(fitness_class(11, p), UsageError);
    const auto neutral = ModelParams::make(1.0, 10, 2, 0.1);
    for (std::size_t l = 0; l <= 10; ++l) EXPECT_EQ(fitness_class(l, neutral), 1.0);
}

TEST(Fitness, GenotypeAgreesWithClassExhaustively) {
    const auto p = ModelParams::make(3.0, 4, 3, 0.2);
    const Genotype w = Genotype::master(4);
    for_each_genotype(4, 3, [&](const Genotype& u) {
        EXPECT_EQ(fitness_genotype(u, p), fitness_class(hamming_distance(u, w), p));
    });
}

TEST(Genotype, ClassSizesSumToSequenceSpace) {
    for (std::size_t ell : {1, 3, 5}) {
        for (std::size_t kappa : {2, 3, 4}) {
            std::vector<std::size_t> counted(ell + 1, 0);
            std::size_t total = 0;
            for_each_genotype(ell, kappa, [&](const Genotype& u) {
                ++counted[hamming_class(u)];
                ++total;
            });
            EXPECT_EQ(total, static_cast<std::size_t>(std::pow(kappa, ell)));
            for (std::size_t k = 0; k <= ell; ++k)
                EXPECT_NEAR(std::exp(log_class_size(ell, kappa, k)), counted[k], 1e-9 * counted[k]);
        }
    }
}

TEST(MutationGenotype, FaithfulCopying) {
    const auto p = ModelParams::make(2.0, 3, 3, 0.0);
    const Genotype u({0, 1, 2});
    EXPECT_EQ(mutation_prob_genotype(u, u, p), 1.0);
    EXPECT_EQ(mutation_prob_genotype(u, Genotype({0, 1, 1}), p), 0.0);
}

TEST(MutationGenotype, DirectProduct) {
    const auto p = ModelParams::make(2.0, 2, 2, 0.25);
    EXPECT_DOUBLE_EQ(mutation_prob_genotype(Genotype({0, 0}), Genotype({0, 1}), p), 0.1875);
}

TEST(MutationGenotype, RowsSumToOneExhaustively) {
    const auto p = ModelParams::make(2.0, 3, 3, 0.4);
    for_each_genotype(3, 3, [&](const Genotype& u) {
        double s = 0.0;
        int n = 0;
        for_each_genotype(3, 3, [&](const Genotype& v) {
            s += mutation_prob_genotype(u, v, p);
            ++n;
        });
        EXPECT_EQ(n, 27);
        EXPECT_NEAR(s, 1.0, 1e-14);
    });
}

TEST(LumpedKernel, IdentityWithoutMutation) {
    const auto p = ModelParams::make(2.0, 6, 4, 0.0);
    for (std::size_t b = 0; b <= 6; ++b)
        for (std::size_t c = 0; c <= 6; ++c) EXPECT_EQ(lumped_kernel_entry(b, c, p), b == c ? 1.0 : 0.0);
    const auto m = lumped_kernel_matrix(p);
    for (std::size_t b = 0; b <= 6; ++b)
        for (std::size_t c = 0; c <= 6; ++c) EXPECT_EQ(m(b, c), b == c ? 1.0 : 0.0);
}

TEST(LumpedKernel, MasterRowIsBinomial) {
    const auto p = ModelParams::make(2.0, 2, 2, 0.5);
    EXPECT_NEAR(lumped_kernel_entry(0, 0, p), 0.25, 1e-15);
    EXPECT_NEAR(lumped_kernel_entry(0, 1, p), 0.5, 1e-15);
    EXPECT_NEAR(lumped_kernel_entry(0, 2, p), 0.25, 1e-15);
}

TEST(LumpedKernel, SingleLocusTwoLetters) {
    for (double q : {0.1, 0.37, 0.9}) {
        const auto p = ModelParams::make(2.0, 1, 2, q);
        const auto m = lumped_kernel_matrix(p);
        EXPECT_NEAR(m(0, 0), 1 - q, 1e-15);
        EXPECT_NEAR(m(0, 1), q, 1e-15);
        EXPECT_NEAR(m(1, 0), q, 1e-15);
        EXPECT_NEAR(m(1, 1), 1 - q, 1e-15);
    }
}

TEST(LumpedKernel, EqualsBruteForceClassMass) {
    const auto p = ModelParams::make(2.0, 3, 2, 0.2);
    for_each_genotype(3, 2, [&](const Genotype& u) {
        const std::size_t b = hamming_class(u);
        for (std::size_t c = 0; c <= 3; ++c)
            EXPECT_NEAR(lumped_kernel_entry(b, c, p), brute_force_class_mass(u, c, p), 1e-15);
    });
}

TEST(LumpedKernel, LumpingConsistencyGrid) {
    for (std::size_t ell = 1; ell <= 4; ++ell) {
        for (std::size_t kappa : {2, 3}) {
            for (double q : {0.1, 0.3, 0.5}) {
                const auto p = ModelParams::make(1.5, ell, kappa, q);
                const auto m = lumped_kernel_matrix(p);
                for_each_genotype(ell, kappa, [&](const Genotype& u) {
                    const std::size_t b = hamming_class(u);
                    for (std::size_t c = 0; c <= ell; ++c) {
                        const double brute = brute_force_class_mass(u, c, p);
                        EXPECT_NEAR(lumped_kernel_entry(b, c, p), brute, 1e-12);
                        EXPECT_NEAR(m(b, c), brute, 1e-12);
                    }
                });
            }
        }
    }
}

TEST(LumpedKernel, OutOfRangeClass) {
    const auto p = ModelParams::make(2.0, 3, 2, 0.2);
    EXPECT_THROW(lumped_kernel_entry(4, 0, p), UsageError);
    EXPECT_THROW(lumped_kernel_entry(0, 4, p), UsageError);
}

TEST(LumpedKernel, MatrixMatchesEntrywiseSum) {
    // two assembly routes: per-entry log-sum-exp vs row convolution
    for (double q : {0.001, 0.05, 0.4}) {
        const auto p = ModelParams::make(2.0, 60, 3, q);
        const auto m = lumped_kernel_matrix(p);
        for (std::size_t b = 0; b <= 60; b += 7)
            for (std::size_t c = 0; c <= 60; ++c) {
                const double e = lumped_kernel_entry(b, c, p);
                EXPECT_NEAR(m(b, c), e, 1e-14 + 1e-12 * e) << "b=" << b << " c=" << c << " q=" << q;
            }
    }
}

TEST(LumpedKernel, RowStochasticAndPositive) {
    const auto small = lumped_kernel_matrix(ModelParams::make(2.0, 30, 4, 0.05));
    for (std::size_t b = 0; b <= 30; ++b)
        for (std::size_t c = 0; c <= 30; ++c) EXPECT_GT(small(b, c), 0.0);
    const auto big = lumped_kernel_matrix(ModelParams::make(2.0, 500, 2, 0.001));
    EXPECT_LT(big.max_row_deviation(), 1e-10);
}

TEST(LimitKernel, Values) {
    EXPECT_DOUBLE_EQ(limit_kernel(3, 3, 0.7), std::exp(-0.7));
    EXPECT_EQ(limit_kernel(2, 2, 0.0), 1.0);
    EXPECT_EQ(limit_kernel(2, 3, 0.0), 0.0);
    EXPECT_EQ(limit_kernel(4, 3, 1.0), 0.0);
    EXPECT_NEAR(limit_kernel(0, 1, std::numbers::ln2), std::numbers::ln2 / 2.0, 1e-15);
    EXPECT_NEAR(limit_kernel(0, 1, std::numbers::ln2), 0.34657, 1e-5);
    double s = 0.0;
    for (std::size_t k = 5; k < 200; ++k) s += limit_kernel(5, k, 3.0);
    EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(LimitKernel, FiniteKernelConverges) {
    const double a = 0.8;
    const auto near = lumped_kernel_matrix(ModelParams::with_a(2.0, 100, 2, a));
    const auto far = lumped_kernel_matrix(ModelParams::with_a(2.0, 10000, 2, a));
    for (std::size_t i = 0; i <= 5; ++i)
        for (std::size_t k = 0; k <= 5; ++k) {
            const double lim = limit_kernel(i, k, a);
            EXPECT_LT(std::fabs(far(i, k) - lim), std::fabs(near(i, k) - lim)) << i << "," << k;
        }
}

TEST(Binomial, MatchesDirectFormulaSmallN) {
    for (int n : {1, 5, 20, 60}) {
        for (double p : {0.01, 0.3, 0.5, 0.97}) {
            for (int k = 0; k <= n; ++k) {
                const long double direct = std::lgamma(n + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(n - k + 1.0L)
                                           + k * std::log(static_cast<long double>(p))
                                           + (n - k) * std::log1p(-static_cast<long double>(p));
                EXPECT_NEAR(log_binomial_pmf(k, n, p), static_cast<double>(direct),
                            1e-12 * (1 + std::fabs(static_cast<double>(direct))));
            }
        }
    }
}

TEST(Binomial, NormalizedForLargeN) {
    for (std::int64_t n : {2000, 10000, 100000}) {
        long double s = 0.0L;
        for (std::int64_t k = 0; k <= n; ++k) s += std::exp(static_cast<long double>(log_binomial_pmf(k, n, 0.013)));
        EXPECT_NEAR(static_cast<double>(s), 1.0, 1e-13) << n;
    }
}

TEST(Poisson, LogPmf) {
    EXPECT_DOUBLE_EQ(log_poisson_pmf(0, 2.5), -2.5);
    EXPECT_NEAR(log_poisson_pmf(3, 2.5), std::log(std::exp(-2.5) * 2.5 * 2.5 * 2.5 / 6.0), 1e-14);
    EXPECT_EQ(log_poisson_pmf(0, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(log_poisson_pmf(1, 0.0)));
}

}  // namespace
}  // namespace gwqs
