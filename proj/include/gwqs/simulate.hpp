#pragma once

// Monte Carlo engines for the genotype-level Galton-Watson process and for the
// occupancy (Hamming-class count) process, plus replica harnesses.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gwqs/errors.hpp"
#include "gwqs/kernel.hpp"
#include "gwqs/random.hpp"
#include "gwqs/spectral.hpp"
#include "gwqs/stats.hpp"

namespace gwqs {

// Individuals per Hamming class.
class OccupancyVector {
public:
    OccupancyVector() = default;
    explicit OccupancyVector(std::size_t classes) : counts_(classes, 0) {}
    explicit OccupancyVector(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {}

    // n individuals in class cls, nobody elsewhere
    static OccupancyVector single(std::size_t classes, std::size_t cls, std::uint64_t n) {
        if (cls >= classes) throw UsageError("OccupancyVector::single: class out of range");
        OccupancyVector z(classes);
        z.counts_[cls] = n;
        return z;
    }

    std::size_t classes() const noexcept { return counts_.size(); }
    std::uint64_t operator[](std::size_t l) const { return counts_[l]; }
    std::uint64_t& operator[](std::size_t l) { return counts_[l]; }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
    bool extinct() const { return total() == 0; }

    std::vector<double> frequencies() const {
        std::vector<double> f(counts_.size(), 0.0);
        const double n = static_cast<double>(total());
        if (n == 0.0) return f;
        for (std::size_t l = 0; l < counts_.size(); ++l) f[l] = static_cast<double>(counts_[l]) / n;
        return f;
    }

    auto operator<=>(const OccupancyVector&) const = default;

private:
    std::vector<std::uint64_t> counts_;
};

// Genotype -> number of individuals carrying it.
class GenotypePopulation {
public:
    void add(const Genotype& g, std::uint64_t n = 1) {
        if (n > 0) counts_[g] += n;
    }

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [g, c] : counts_) n += c;
        return n;
    }
    bool empty() const { return counts_.empty(); }
    const std::map<Genotype, std::uint64_t>& counts() const noexcept { return counts_; }

    // Lumping map: counts per Hamming class from the master sequence.
    OccupancyVector occupancy(const ModelParams& params) const {
        OccupancyVector z(params.classes());
        for (const auto& [g, c] : counts_) z[hamming_class(g)] += c;
        return z;
    }

private:
    std::map<Genotype, std::uint64_t> counts_;
};

inline constexpr std::uint64_t kGenotypePopulationGuard = 1'000'000;

// One generation of the genotype-level process: every individual independently
// has Poisson(A(u)) children, and each child copies its parent with each locus
// independently replaced, with probability q, by one of the other kappa - 1
// letters chosen uniformly.
inline GenotypePopulation step_genotype(const GenotypePopulation& pop, const ModelParams& params,
                                        RandomStream& rng) {
    if (pop.total() > kGenotypePopulationGuard)
        throw ResourceError("step_genotype: population exceeds " + std::to_string(kGenotypePopulationGuard)
                            + " individuals");
    GenotypePopulation next;
    const auto others = static_cast<std::uint64_t>(params.kappa - 1);
    for (const auto& [parent, count] : pop.counts()) {
        parent.check(params);
        const double fitness = fitness_genotype(parent, params);
        for (std::uint64_t ind = 0; ind < count; ++ind) {
            const std::uint64_t children = sample_poisson(fitness, rng);
            for (std::uint64_t c = 0; c < children; ++c) {
                Genotype child = parent;
                for (std::size_t i = 0; i < params.ell; ++i) {
                    if (rng.uniform() < params.q) {
                        const auto r = static_cast<std::uint32_t>(rng.below(others));
                        child[i] = r < parent[i] ? r : r + 1;
                    }
                }
                next.add(child);
            }
        }
    }
    return next;
}

// One generation of the occupancy process. The class-l children of all class-k
// parents together are Poisson(z(k) W(k, l)) and independent over (k, l), so
// the step costs O((ell+1)^2) draws regardless of population size.
inline OccupancyVector step_occupancy(const OccupancyVector& z, const MeanMatrix& w, RandomStream& rng) {
    const std::size_t n = w.size();
    if (z.classes() != n) throw UsageError("step_occupancy: occupancy vector has wrong dimension");
    OccupancyVector next(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (z[k] == 0) continue;
        const double zk = static_cast<double>(z[k]);
        const auto row = w.matrix().row(k);
        for (std::size_t l = 0; l < n; ++l) {
            const double mean = zk * row[l];
            if (mean > 0.0) next[l] += sample_poisson(mean, rng);
        }
    }
    return next;
}

inline OccupancyVector step_occupancy(const OccupancyVector& z, const ModelParams& params, RandomStream& rng) {
    return step_occupancy(z, mean_matrix(params), rng);
}

struct LumpingReport {
    TwoSampleReport comparison;
    std::size_t samples = 0;
};

// Draws n_samples one-generation outcomes both as Z(step_genotype(start)) and as
// step_occupancy(Z(start)) and compares the two empirical laws of the
// next-generation occupancy vector. Streams spec.stream and spec.stream + 1 are used.
inline LumpingReport lumping_equivalence_test(const ModelParams& params, const GenotypePopulation& start,
                                              std::size_t n_samples, RngSpec spec) {
    const MeanMatrix w = mean_matrix(params);
    const OccupancyVector z0 = start.occupancy(params);
    RandomStream genotype_rng(spec.seed, spec.stream);
    RandomStream occupancy_rng(spec.seed, spec.stream + 1);
    std::map<std::vector<std::uint64_t>, std::uint64_t> via_genotypes, via_occupancy;
    for (std::size_t s = 0; s < n_samples; ++s) {
        ++via_genotypes[step_genotype(start, params, genotype_rng).occupancy(params).counts()];
        ++via_occupancy[step_occupancy(z0, w, occupancy_rng).counts()];
    }
    return LumpingReport{two_sample_compare(via_genotypes, via_occupancy), n_samples};
}

struct GenerationRecord {
    std::size_t generation = 0;
    OccupancyVector state;
    std::uint64_t total = 0;

    bool operator==(const GenerationRecord&) const = default;
};

struct Trajectory {
    std::vector<GenerationRecord> records;  // generation 0 first
    bool extinct = false;
    bool capped = false;

    const GenerationRecord& last() const { return records.back(); }

    // Population at generation n; zero past an extinction.
    std::uint64_t total_at(std::size_t n) const {
        if (n < records.size()) return records[n].total;
        if (extinct) return 0;
        throw UsageError("Trajectory::total_at: generation not simulated");
    }

    bool operator==(const Trajectory&) const = default;
};

inline constexpr std::uint64_t kDefaultPopCap = 1'000'000'000'000ULL;

// Iterates the occupancy step for up to n_gens generations. Stops early when the
// population dies out (extinct) or exceeds pop_cap (capped).
inline Trajectory run_trajectory(const OccupancyVector& z0, const MeanMatrix& w, std::size_t n_gens,
                                 std::uint64_t pop_cap, RandomStream& rng) {
    Trajectory t;
    OccupancyVector z = z0;
    t.records.push_back({0, z, z.total()});
    if (z.total() == 0) {
        t.extinct = true;
        return t;
    }
    for (std::size_t g = 1; g <= n_gens; ++g) {
        if (t.records.back().total > pop_cap) {
            t.capped = true;
            return t;
        }
        z = step_occupancy(z, w, rng);
        const std::uint64_t total = z.total();
        t.records.push_back({g, z, total});
        if (total == 0) {
            t.extinct = true;
            return t;
        }
    }
    if (t.records.back().total > pop_cap) t.capped = true;
    return t;
}

inline Trajectory run_trajectory(const OccupancyVector& z0, const ModelParams& params, std::size_t n_gens,
                                 std::uint64_t pop_cap, RandomStream& rng) {
    return run_trajectory(z0, mean_matrix(params), n_gens, pop_cap, rng);
}

// Runs body(r) for r in [0, n) on up to `threads` workers. Each index is
// handled by exactly one worker.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t r = 0; r < n; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t r = t; r < n; r += threads) body(r);
        });
    }
    for (auto& th : pool) th.join();
}

struct FrequencyEstimate {
    std::vector<double> mean;            // per-class frequency averaged over survivors
    std::vector<double> standard_error;  // per-class standard error of that mean
    std::size_t survivors = 0;
    std::size_t replicas = 0;
    std::size_t capped = 0;              // survivors stopped by the population cap
};

// Replica r runs on stream spec.stream + r. Replicas extinct by generation
// n_gens are discarded; each survivor contributes the class frequencies of its
// last simulated generation. Results are folded in replica order, so they do
// not depend on the number of threads.
inline FrequencyEstimate conditioned_frequencies(const ModelParams& params, const OccupancyVector& z0,
                                                 std::size_t n_gens, std::size_t n_replicas, std::uint64_t pop_cap,
                                                 RngSpec spec, unsigned threads = 1) {
    if (n_replicas < 1) throw UsageError("conditioned_frequencies: need at least one replica");
    const MeanMatrix w = mean_matrix(params);
    std::vector<Trajectory> runs(n_replicas);
    parallel_for(n_replicas, threads, [&](std::size_t r) {
        RandomStream rng(spec.seed, spec.stream + r);
        Trajectory t = run_trajectory(z0, w, n_gens, pop_cap, rng);
        // keep only the final generation
        t.records.erase(t.records.begin(), t.records.end() - 1);
        runs[r] = std::move(t);
    });

    const std::size_t n = params.classes();
    std::vector<std::vector<double>> per_class(n);
    FrequencyEstimate est;
    est.replicas = n_replicas;
    for (const Trajectory& t : runs) {
        if (t.extinct) continue;
        ++est.survivors;
        if (t.capped) ++est.capped;
        const auto f = t.last().state.frequencies();
        for (std::size_t k = 0; k < n; ++k) per_class[k].push_back(f[k]);
    }
    if (est.survivors == 0)
        throw StatisticalError("conditioned_frequencies: all " + std::to_string(n_replicas)
                               + " replicas went extinct; use a larger initial population or more replicas");
    for (std::size_t k = 0; k < n; ++k) {
        const MeanAndError m = mean_and_error(per_class[k]);
        est.mean.push_back(m.mean);
        est.standard_error.push_back(m.standard_error);
    }
    return est;
}

struct ExtinctionEstimate {
    std::size_t extinct = 0;
    std::size_t replicas = 0;
    double frequency = 0.0;
    double standard_error = 0.0;  // binomial, sqrt(p (1 - p) / n)
};

// Fraction of replicas started from one class-`start_class` individual that die
// out within n_gens generations. A replica exceeding pop_cap counts as a survivor.
inline ExtinctionEstimate extinction_frequency(const ModelParams& params, std::size_t start_class,
                                               std::size_t n_replicas, std::size_t n_gens, std::uint64_t pop_cap,
                                               RngSpec spec, unsigned threads = 1) {
    if (n_replicas < 1) throw UsageError("extinction_frequency: need at least one replica");
    const MeanMatrix w = mean_matrix(params);
    const OccupancyVector z0 = OccupancyVector::single(params.classes(), start_class, 1);
    std::vector<char> died(n_replicas, 0);
    parallel_for(n_replicas, threads, [&](std::size_t r) {
        RandomStream rng(spec.seed, spec.stream + r);
        died[r] = run_trajectory(z0, w, n_gens, pop_cap, rng).extinct ? 1 : 0;
    });
    ExtinctionEstimate est;
    est.replicas = n_replicas;
    for (char d : died) est.extinct += static_cast<std::size_t>(d);
    const double n = static_cast<double>(n_replicas);
    est.frequency = static_cast<double>(est.extinct) / n;
    est.standard_error = std::sqrt(est.frequency * (1.0 - est.frequency) / n);
    return est;
}

}  // namespace gwqs
