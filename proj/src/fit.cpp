#include "spt/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spt/error.hpp"

namespace spt {

namespace {

void check_inputs(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw EstimationError("fit: xs and ys differ in length");
    if (xs.size() < 3) throw EstimationError("fit: need at least 3 points");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw EstimationError("fit: non-finite input");
    }
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) throw EstimationError("fit: rank-deficient input (all xs equal)");
}

struct Eval {
    double f;
    double d0;
    double d1;
};

// Levenberg-Marquardt for two-parameter models.
template <class Model>
std::array<double, 2> levenberg_marquardt(std::span<const double> xs, std::span<const double> ys,
                                          std::array<double, 2> p, Model model) {
    auto cost = [&](const std::array<double, 2>& q) {
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - model(xs[i], q).f;
            s += r * r;
        }
        return s;
    };

    double lambda = 1e-3;
    double current = cost(p);
    for (int iter = 0; iter < 500; ++iter) {
        double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const Eval e = model(xs[i], p);
            const double r = ys[i] - e.f;
            a00 += e.d0 * e.d0;
            a01 += e.d0 * e.d1;
            a11 += e.d1 * e.d1;
            b0 += e.d0 * r;
            b1 += e.d1 * r;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            const double m00 = a00 * (1.0 + lambda);
            const double m11 = a11 * (1.0 + lambda);
            const double det = m00 * m11 - a01 * a01;
            if (!(std::abs(det) > 0.0)) {
                lambda *= 10.0;
                continue;
            }
            const std::array<double, 2> step{(m11 * b0 - a01 * b1) / det,
                                             (m00 * b1 - a01 * b0) / det};
            const std::array<double, 2> trial{p[0] + step[0], p[1] + step[1]};
            const double c = cost(trial);
            if (std::isfinite(c) && c <= current) {
                const bool tiny = std::abs(step[0]) <= 1e-14 * (std::abs(p[0]) + 1e-300) &&
                                  std::abs(step[1]) <= 1e-14 * (std::abs(p[1]) + 1e-300);
                p = trial;
                const double previous = current;
                current = c;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                if (tiny || previous - c <= 1e-30 * (previous + 1e-300)) return p;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return p;
}

std::vector<double> residuals_of(std::span<const double> xs, std::span<const double> ys,
                                 auto&& f) {
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) r[i] = ys[i] - f(xs[i]);
    return r;
}

}  // namespace

LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
    check_inputs(xs, ys);
    const auto n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw EstimationError("fit: rank-deficient input");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.residuals = residuals_of(xs, ys, [&](double x) { return fit.slope * x + fit.intercept; });
    return fit;
}

ExponentialFit fit_exponential(std::span<const double> xs, std::span<const double> ys) {
    check_inputs(xs, ys);

    // Seed from log-linear regression on the positive points.
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] > 0.0) {
            lx.push_back(xs[i]);
            ly.push_back(std::log(ys[i]));
        }
    }
    std::array<double, 2> p{*std::max_element(ys.begin(), ys.end()), 0.0};
    const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
    p[1] = 1.0 / (*xhi - *xlo);
    if (lx.size() >= 3) {
        try {
            const LinearFit seed = fit_linear(lx, ly);
            if (seed.slope < 0.0) p = {std::exp(seed.intercept), -seed.slope};
        } catch (const EstimationError&) {
        }
    }

    // Parameters: amplitude and rate = 1/decay.
    p = levenberg_marquardt(xs, ys, p, [](double x, const std::array<double, 2>& q) {
        const double e = std::exp(-q[1] * x);
        return Eval{q[0] * e, e, -q[0] * x * e};
    });
    if (!(p[1] > 0.0) || !std::isfinite(p[1]) || !(p[0] > 0.0))
        throw EstimationError("exponential fit failed: data are not decaying");

    ExponentialFit fit;
    fit.amplitude = p[0];
    fit.decay = 1.0 / p[1];
    fit.residuals = residuals_of(
        xs, ys, [&](double x) { return fit.amplitude * std::exp(-x / fit.decay); });
    return fit;
}

SaturationFit fit_saturation(std::span<const double> xs, std::span<const double> ys) {
    check_inputs(xs, ys);
    const double ymax = *std::max_element(ys.begin(), ys.end());
    if (!(ymax > 0.0)) throw EstimationError("saturation fit failed: no positive data");

    // Initial rate from the smallest-x points: slope0 = g_max * rate.
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    const std::size_t k = order[std::min<std::size_t>(1, order.size() - 1)];
    const double slope0 = xs[k] > 0.0 ? ys[k] / xs[k] : ymax / (xs[order.back()] + 1.0);
    std::array<double, 2> p{ymax, std::max(slope0 / ymax, 1e-12)};

    p = levenberg_marquardt(xs, ys, p, [](double x, const std::array<double, 2>& q) {
        const double e = std::exp(-q[1] * x);
        return Eval{q[0] * (1.0 - e), 1.0 - e, q[0] * x * e};
    });
    if (!(p[1] > 0.0) || !std::isfinite(p[1]) || !(p[0] > 0.0))
        throw EstimationError("saturation fit failed");

    SaturationFit fit;
    fit.g_max = p[0];
    fit.scale = 1.0 / p[1];
    fit.residuals = residuals_of(
        xs, ys, [&](double x) { return fit.g_max * (1.0 - std::exp(-x / fit.scale)); });
    return fit;
}

double rms(std::span<const double> residuals) {
    if (residuals.empty()) return 0.0;
    double s = 0.0;
    for (double r : residuals) s += r * r;
    return std::sqrt(s / static_cast<double>(residuals.size()));
}

}  // namespace spt
