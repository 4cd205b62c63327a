#include "spt/random.hpp"

#include <random>

namespace spt {

int poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<int> dist(mean);
    return dist(rng);
}

int binomial(Rng& rng, int trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    std::binomial_distribution<int> dist(trials, p);
    return dist(rng);
}

}  // namespace spt
