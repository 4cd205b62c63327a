#pragma once

#include <span>
#include <vector>

namespace spt {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;  // y - fit
};

/// y = amplitude * exp(-x / decay)
struct ExponentialFit {
    double amplitude = 0.0;
    double decay = 0.0;
    std::vector<double> residuals;
};

/// y = g_max * (1 - exp(-x / scale))
struct SaturationFit {
    double g_max = 0.0;
    double scale = 0.0;
    std::vector<double> residuals;
};

/// Ordinary least squares. Needs >= 3 points and two distinct xs.
LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys);

/// Unweighted least squares on the linear scale (Levenberg-Marquardt,
/// seeded from a log-linear fit). Throws EstimationError when the data do
/// not decay.
ExponentialFit fit_exponential(std::span<const double> xs, std::span<const double> ys);

SaturationFit fit_saturation(std::span<const double> xs, std::span<const double> ys);

double rms(std::span<const double> residuals);

}  // namespace spt
