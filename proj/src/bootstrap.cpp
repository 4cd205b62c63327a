#include "spt/bootstrap.hpp"

#include <cmath>
#include <stdexcept>

namespace spt {

std::vector<std::uint64_t> multinomial_resample(std::span<const std::uint64_t> counts, Rng& rng) {
    std::uint64_t remaining = 0;
    for (auto c : counts) remaining += c;
    std::uint64_t mass = remaining;
    std::vector<std::uint64_t> out(counts.size(), 0);
    for (std::size_t i = 0; i < counts.size() && remaining > 0; ++i) {
        if (i + 1 == counts.size() || counts[i] == mass) {
            out[i] = remaining;
            break;
        }
        const double p = static_cast<double>(counts[i]) / static_cast<double>(mass);
        const auto k = static_cast<std::uint64_t>(binomial(rng, static_cast<int>(remaining), p));
        out[i] = k;
        remaining -= k;
        mass -= counts[i];
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Estimate summarize_replicates(double value, std::vector<double> replicates, double confidence) {
    Estimate e;
    e.value = value;
    if (replicates.empty()) return e;
    std::sort(replicates.begin(), replicates.end());
    const double alpha = 0.5 * (1.0 - confidence);
    const double lo = quantile_sorted(replicates, alpha);
    const double hi = quantile_sorted(replicates, 1.0 - alpha);
    e.err_low = std::max(0.0, value - lo);
    e.err_high = std::max(0.0, hi - value);

    double mean = 0.0;
    for (double r : replicates) mean += r;
    mean /= static_cast<double>(replicates.size());
    double var = 0.0;
    for (double r : replicates) var += (r - mean) * (r - mean);
    if (replicates.size() > 1) var /= static_cast<double>(replicates.size() - 1);
    e.sigma = std::sqrt(var);
    return e;
}

}  // namespace spt
