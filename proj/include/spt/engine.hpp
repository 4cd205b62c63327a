#pragma once

// Shot-by-shot simulation of the transistor sequence:
//   store gate pulse -> spin-wave decay -> source window -> retrieve -> detect.
//
// Every shot draws from its own counter-based stream keyed by
// (master_seed, shot_index), so run_experiment gives identical records no
// matter how many threads execute it.

#include <cstdint>
#include <vector>

#include "spt/qed.hpp"
#include "spt/random.hpp"

namespace spt {

struct TimingSequence {
    double storage_ramp = 0.0;           // s
    double hold_before_source = 0.0;     // s
    double source_window = 0.0;          // s
    double hold_before_retrieval = 0.0;  // s

    /// Time between storage and retrieval; the argument of the spin-wave decay.
    double storage_time() const noexcept {
        return storage_ramp + hold_before_source + source_window + hold_before_retrieval;
    }

    friend bool operator==(const TimingSequence&, const TimingSequence&) = default;
};

struct GatePulse {
    double mean_incident_photons = 0.0;
    double storage_efficiency = 1.0;
    double retrieval_efficiency = 1.0;  // per surviving excitation

    double mean_stored() const noexcept { return mean_incident_photons * storage_efficiency; }

    friend bool operator==(const GatePulse&, const GatePulse&) = default;
};

struct SpinWave {
    int n_exc = 0;
    bool coherent = true;
    bool survived_decay = true;
    std::vector<Coupling> etas;  // one entry per stored excitation

    friend bool operator==(const SpinWave&, const SpinWave&) = default;
};

struct SourceDrive {
    /// Expected source photons leaving the empty resonant cavity over the
    /// window, counted before outcoupling (<M_s>|_{n_g=0}, intracavity units).
    double mean_source_photons = 0.0;
    double detuning = 0.0;  // source minus cavity resonance, rad/s

    friend bool operator==(const SourceDrive&, const SourceDrive&) = default;
};

struct PumpingModel {
    double hop_prob_per_scatter = 0.0;
    double eta_ratio_after_hop = 1.0;

    friend bool operator==(const PumpingModel&, const PumpingModel&) = default;
};

struct DetectorPath {
    double efficiency = 1.0;
    double dark_rate = 0.0;  // counts/s

    friend bool operator==(const DetectorPath&, const DetectorPath&) = default;
};

struct DetectionChain {
    double gate_path_efficiency = 1.0;
    double source_path_efficiency = 1.0;
    double gate_dark_rate = 0.0;    // counts/s
    double source_dark_rate = 0.0;  // counts/s
    double gate_window = 1e-6;      // s, retrieval detection window

    DetectorPath gate_path() const noexcept { return {gate_path_efficiency, gate_dark_rate}; }
    DetectorPath source_path() const noexcept {
        return {source_path_efficiency, source_dark_rate};
    }

    friend bool operator==(const DetectionChain&, const DetectionChain&) = default;
};

struct ShotRecord {
    std::uint64_t shot_index = 0;
    int n_stored = 0;
    int source_attempted = 0;
    int source_transmitted_intracavity = 0;
    int source_transmitted_outside = 0;
    int photons_to_first_collapse = 0;  // 1-based index of the first scattered photon, 0 if none
    bool collapsed = false;
    bool survived_decay = true;
    bool retrieved = false;
    int n_retrieved = 0;
    int detected_source = 0;
    int detected_gate = 0;

    friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

struct RunConfig {
    CavityParams cavity;
    AtomParams atoms;
    CooperativityModel coop;
    TimingSequence timing;
    GatePulse gate;
    SourceDrive source;
    PumpingModel pumping;
    DetectionChain detection;
    std::uint64_t n_shots = 1;
    std::uint64_t master_seed = 0;
    bool retrieval_mode = false;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void validate(const TimingSequence& timing);
void validate(const GatePulse& gate);
void validate(const SourceDrive& source);
void validate(const PumpingModel& pumping);
void validate(const DetectionChain& detection);
void validate(const RunConfig& config);

SpinWave sample_gate_storage(const GatePulse& gate, const CooperativityModel& coop, Rng& rng);

struct WindowOutcome {
    int attempted = 0;
    int transmitted = 0;
    int scatters = 0;
    int photons_to_first_collapse = 0;
    SpinWave spin;
};

/// Photon-by-photon source window over a Poisson number of attempts. Each
/// photon is transmitted, scattered into free space or reflected, with the
/// lineshape probabilities of the current blockers. A scatter collapses the
/// spin wave (the atom keeps blocking) and may pump the scattering atom to
/// weaker coupling.
WindowOutcome evolve_source_window(SpinWave spin, const SourceDrive& source,
                                   const PumpingModel& pumping, const CavityParams& cavity,
                                   const AtomParams& atoms, Rng& rng);

/// Marks the spin wave as decayed with probability 1 - exp(-elapsed/tau).
/// Decay removes retrievability only; the atoms keep blocking.
SpinWave apply_spin_decay(SpinWave spin, double elapsed, const AtomParams& atoms, Rng& rng);

/// Number of retrieved gate photons: each excitation of a coherent,
/// undecayed spin wave is emitted with `retrieval_efficiency`.
int retrieve_gate(const SpinWave& spin, double retrieval_efficiency, Rng& rng);

/// Binomial thinning of `true_count` plus Poisson dark counts over `window`.
int detect(int true_count, double window, const DetectorPath& path, Rng& rng);

ShotRecord run_shot(const RunConfig& config, std::uint64_t shot_index);

/// All n_shots records, ordered by shot index. threads == 0 uses the
/// hardware concurrency. Throws if any shot fails; never returns partial
/// results.
std::vector<ShotRecord> run_experiment(const RunConfig& config, unsigned threads = 0);

}  // namespace spt
