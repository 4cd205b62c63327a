#pragma once

// Nonparametric bootstrap over compressed samples.
//
// Shot data are mostly small integers, so a sample of N shots is stored as
// a tally of distinct keys with multiplicities. Resampling N shots with
// replacement is then a multinomial draw over the distinct keys, which
// costs O(#keys) instead of O(N) per replicate.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "spt/error.hpp"
#include "spt/random.hpp"

namespace spt {

/// Point value with an asymmetric interval (value - err_low, value + err_high)
/// and the bootstrap standard deviation.
struct Estimate {
    double value = 0.0;
    double err_low = 0.0;
    double err_high = 0.0;
    double sigma = 0.0;
};

struct BootstrapOptions {
    std::size_t resamples = 1000;
    std::uint64_t seed = 0;
    double confidence = 0.95;
};

template <class Key>
struct Tally {
    std::vector<Key> keys;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

template <class Key, class Range, class KeyOf>
Tally<Key> make_tally(const Range& items, KeyOf key_of) {
    std::map<Key, std::uint64_t> m;
    for (const auto& item : items) ++m[key_of(item)];
    Tally<Key> t;
    t.keys.reserve(m.size());
    t.counts.reserve(m.size());
    for (const auto& [k, c] : m) {
        t.keys.push_back(k);
        t.counts.push_back(c);
    }
    return t;
}

/// Multinomial(total, counts/total) via sequential conditional binomials.
std::vector<std::uint64_t> multinomial_resample(std::span<const std::uint64_t> counts, Rng& rng);

/// Percentile interval and standard deviation of the replicates around `value`.
Estimate summarize_replicates(double value, std::vector<double> replicates, double confidence);

/// Empirical quantile with linear interpolation; `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double q);

/// Bootstrap of an arbitrary statistic of one tally. `stat(keys, weights)`
/// may throw EstimationError on a degenerate replicate, which is dropped.
template <class Key, class Stat>
Estimate bootstrap_tally(const Tally<Key>& tally, Stat stat, const BootstrapOptions& options,
                         std::uint64_t stream) {
    const double value = stat(std::span<const Key>(tally.keys),
                              std::span<const std::uint64_t>(tally.counts));
    Rng rng(options.seed, stream);
    std::vector<double> reps;
    reps.reserve(options.resamples);
    for (std::size_t b = 0; b < options.resamples; ++b) {
        const auto w = multinomial_resample(tally.counts, rng);
        try {
            reps.push_back(stat(std::span<const Key>(tally.keys), std::span<const std::uint64_t>(w)));
        } catch (const EstimationError&) {
        }
    }
    return summarize_replicates(value, std::move(reps), options.confidence);
}

}  // namespace spt
