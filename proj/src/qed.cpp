#include "spt/qed.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "spt/error.hpp"

namespace spt {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw InvariantError(field, what);
}

void require_finite(double v, const char* field) {
    require(std::isfinite(v), field, "must be finite");
}

void check_eta(double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta))
        throw std::domain_error("cooperativity must be finite and >= 0");
}

std::complex<double> inverse_amplitude(double delta, std::span<const Blocker> blockers,
                                       const CavityParams& cavity, const AtomParams& atoms) {
    using namespace std::complex_literals;
    std::complex<double> d = 1.0 + 2.0i * (delta / cavity.kappa);
    for (const auto& b : blockers) {
        check_eta(b.eta);
        d += b.eta / (1.0 + 2.0i * (b.detuning / atoms.gamma));
    }
    return d;
}

}  // namespace

void validate(const CavityParams& c) {
    require_finite(c.kappa, "CavityParams.kappa");
    require(c.kappa > 0.0, "CavityParams.kappa", "must be > 0");
    require_finite(c.mirror_transmission, "CavityParams.mirror_transmission");
    require(c.mirror_transmission > 0.0, "CavityParams.mirror_transmission", "must be > 0");
    require_finite(c.mirror_loss, "CavityParams.mirror_loss");
    require(c.mirror_loss >= 0.0, "CavityParams.mirror_loss", "must be >= 0");
}

void validate(const AtomParams& a) {
    require_finite(a.gamma, "AtomParams.gamma");
    require(a.gamma > 0.0, "AtomParams.gamma", "must be > 0");
    require_finite(a.tau_spinwave, "AtomParams.tau_spinwave");
    require(a.tau_spinwave > 0.0, "AtomParams.tau_spinwave", "must be > 0");
    require_finite(a.optical_depth, "AtomParams.optical_depth");
    require(a.optical_depth >= 0.0, "AtomParams.optical_depth", "must be >= 0");
    require_finite(a.atom_cavity_detuning, "AtomParams.atom_cavity_detuning");
}

void validate(const CooperativityModel& m) {
    require_finite(m.eta0, "CooperativityModel.eta0");
    require(m.eta0 >= 0.0, "CooperativityModel.eta0", "must be >= 0");
    require_finite(m.geometric_weight, "CooperativityModel.geometric_weight");
    require(m.geometric_weight > 0.0 && m.geometric_weight <= 1.0,
            "CooperativityModel.geometric_weight", "must be in (0, 1]");
    require_finite(m.eta_bar_t, "CooperativityModel.eta_bar_t");
    require(m.eta_bar_t >= 0.0, "CooperativityModel.eta_bar_t", "must be >= 0");
    require_finite(m.eta_bar_a, "CooperativityModel.eta_bar_a");
    require(m.eta_bar_a >= 0.0, "CooperativityModel.eta_bar_a", "must be >= 0");
}

double extinction(double eta) {
    check_eta(eta);
    const double s = 1.0 + eta;
    return 1.0 / (s * s);
}

double free_space_scatter_prob(double eta) {
    check_eta(eta);
    const double s = 1.0 + eta;
    return 2.0 * eta / (s * s);
}

double cavity_transmission_spectrum(double delta, std::span<const Blocker> blockers,
                                    const CavityParams& cavity, const AtomParams& atoms) {
    return 1.0 / std::norm(inverse_amplitude(delta, blockers, cavity, atoms));
}

double scatter_weight(const Blocker& b, const AtomParams& atoms) {
    const double x = 2.0 * b.detuning / atoms.gamma;
    return b.eta / (1.0 + x * x);
}

double free_space_scatter_spectrum(double delta, std::span<const Blocker> blockers,
                                   const CavityParams& cavity, const AtomParams& atoms) {
    if (blockers.empty()) return 0.0;
    const double t2 = cavity_transmission_spectrum(delta, blockers, cavity, atoms);
    double re_sum = 0.0;
    for (const auto& b : blockers) re_sum += scatter_weight(b, atoms);
    return 2.0 * re_sum * t2;
}

double sample_cooperativity(const CooperativityModel& model, Rng& rng) {
    const double peak = model.eta0 * model.geometric_weight;
    if (!model.standing_wave) return peak;
    // kz uniform over one period of cos^2, i.e. [0, pi).
    const double c = std::cos(std::numbers::pi * uniform01(rng));
    return peak * c * c;
}

Coupling sample_coupling(const CooperativityModel& model, Rng& rng) {
    if (model.mode == CooperativityMode::effective) return {model.eta_bar_t, model.eta_bar_a};
    const double eta = sample_cooperativity(model, rng);
    return {eta, eta};
}

double extinction_matched_cooperativity(double transmission) {
    if (!(transmission > 0.0 && transmission <= 1.0))
        throw std::domain_error("transmission must be in (0, 1]");
    return 1.0 / std::sqrt(transmission) - 1.0;
}

double scatter_matched_cooperativity(double p) {
    if (!(p >= 0.0 && p <= 0.5)) throw std::domain_error("scatter probability must be in [0, 0.5]");
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    // x^2 + (2 - 2/p) x + 1 = 0, take the larger root.
    const double a = 2.0 / p - 2.0;
    const double disc = std::max(0.0, a * a - 4.0);
    return 0.5 * (a + std::sqrt(disc));
}

EffectiveCooperativities effective_cooperativities(const CooperativityModel& model,
                                                   std::size_t n_samples, Rng& rng) {
    if (n_samples < kMinEffectiveSamples)
        throw PrecisionError("effective_cooperativities needs at least 10^4 samples");
    validate(model);
    double sum_eta = 0.0;
    double sum_t = 0.0;
    double sum_p = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double eta = sample_cooperativity(model, rng);
        sum_eta += eta;
        sum_t += extinction(eta);
        sum_p += free_space_scatter_prob(eta);
    }
    const auto n = static_cast<double>(n_samples);
    EffectiveCooperativities out;
    out.mean = sum_eta / n;
    out.transmission = extinction_matched_cooperativity(sum_t / n);
    out.scattering = scatter_matched_cooperativity(std::min(0.5, sum_p / n));
    return out;
}

}  // namespace spt
