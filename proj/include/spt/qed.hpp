#pragma once

// Closed-form cavity-QED quantities for one cavity mode coupled to atoms
// stored in the upper ground state: extinction, free-space scattering,
// transmission lineshapes and averaging of the single-atom cooperativity.
//
// All frequencies are angular (rad/s). Everything here is a pure function
// of its arguments; randomness comes from the caller's Rng.

#include <cstddef>
#include <span>

#include "spt/random.hpp"

namespace spt {

struct CavityParams {
    double kappa = 0.0;                // full linewidth, rad/s
    double mirror_transmission = 0.0;  // fraction per mirror pass
    double mirror_loss = 0.0;          // fraction per mirror pass

    /// Fraction of intracavity photons that leave through the output mirror.
    double outcoupling() const noexcept {
        return mirror_transmission / (mirror_transmission + mirror_loss);
    }

    friend bool operator==(const CavityParams&, const CavityParams&) = default;
};

struct AtomParams {
    double gamma = 0.0;         // excited-state linewidth, rad/s
    double tau_spinwave = 0.0;  // collective excitation lifetime, s
    double optical_depth = 0.0;
    double atom_cavity_detuning = 0.0;  // rad/s, atom minus cavity resonance

    friend bool operator==(const AtomParams&, const AtomParams&) = default;
};

/// How per-excitation cooperativities are produced.
enum class CooperativityMode {
    /// Each excitation samples eta0 * weight * cos^2(kz) (or eta0 * weight
    /// without the standing wave) and uses it for both transmission and
    /// scattering.
    sampled,
    /// Each excitation carries the pair of effective cooperativities
    /// (eta_bar_t, eta_bar_a): the first sets the extinction, the second
    /// the free-space scattering rate.
    effective,
};

struct CooperativityModel {
    CooperativityMode mode = CooperativityMode::sampled;
    double eta0 = 0.0;
    bool standing_wave = true;
    double geometric_weight = 1.0;
    double eta_bar_t = 0.0;
    double eta_bar_a = 0.0;

    friend bool operator==(const CooperativityModel&, const CooperativityModel&) = default;
};

/// Cooperativity of one stored excitation as seen by the two processes it
/// takes part in. In sampled mode both fields are equal.
struct Coupling {
    double transmission = 0.0;
    double scattering = 0.0;

    friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// One blocking atom for the lineshape functions.
struct Blocker {
    double eta = 0.0;
    double detuning = 0.0;  // source minus atomic resonance, rad/s

    friend bool operator==(const Blocker&, const Blocker&) = default;
};

void validate(const CavityParams& cavity);
void validate(const AtomParams& atoms);
void validate(const CooperativityModel& model);

/// Resonant transmission with one atom of cooperativity eta: (1+eta)^-2.
double extinction(double eta);

/// Resonant probability that an intracavity photon is scattered into free
/// space by an atom of cooperativity eta: 2 eta / (1+eta)^2.
double free_space_scatter_prob(double eta);

/// Transmission |1 + 2i delta/kappa + sum_j eta_j / (1 + 2i Delta_j/gamma)|^-2,
/// normalized to the empty resonant cavity.
double cavity_transmission_spectrum(double delta, std::span<const Blocker> blockers,
                                    const CavityParams& cavity, const AtomParams& atoms);

/// Free-space scattering probability per intracavity photon for the same
/// configuration: 2 Re(sum_j eta_j chi_j) |t|^2. Reduces to
/// free_space_scatter_prob(sum eta) on resonance.
double free_space_scatter_spectrum(double delta, std::span<const Blocker> blockers,
                                   const CavityParams& cavity, const AtomParams& atoms);

/// Relative share of blocker j in the total scattering rate.
double scatter_weight(const Blocker& blocker, const AtomParams& atoms);

double sample_cooperativity(const CooperativityModel& model, Rng& rng);

Coupling sample_coupling(const CooperativityModel& model, Rng& rng);

struct EffectiveCooperativities {
    double mean = 0.0;          // <eta>
    double transmission = 0.0;  // (1+eta_T)^-2 = <(1+eta)^-2>
    double scattering = 0.0;    // 2 eta_a/(1+eta_a)^2 = <2 eta/(1+eta)^2>, root > 1
};

inline constexpr std::size_t kMinEffectiveSamples = 10'000;

/// Monte-Carlo averages of the sampled geometry (mode is ignored).
EffectiveCooperativities effective_cooperativities(const CooperativityModel& model,
                                                   std::size_t n_samples, Rng& rng);

/// Cooperativity whose extinction equals `transmission`.
double extinction_matched_cooperativity(double transmission);

/// Root >= 1 of 2x/(1+x)^2 = p. Returns +inf for p == 0.
double scatter_matched_cooperativity(double p);

}  // namespace spt
