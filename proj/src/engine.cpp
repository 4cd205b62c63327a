#include "spt/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "spt/error.hpp"

namespace spt {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw InvariantError(field, what);
}

void require_nonnegative(double v, const char* field) {
    require(std::isfinite(v) && v >= 0.0, field, "must be finite and >= 0");
}

void require_probability(double v, const char* field) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, field, "must be in [0, 1]");
}

struct LineProbabilities {
    double transmit = 1.0;
    double scatter = 0.0;
};

class BlockerSet {
  public:
    BlockerSet(const SpinWave& spin, double atom_detuning) {
        transmission_.reserve(spin.etas.size());
        scattering_.reserve(spin.etas.size());
        for (const auto& c : spin.etas) {
            transmission_.push_back({c.transmission, atom_detuning});
            scattering_.push_back({c.scattering, atom_detuning});
        }
    }

    // With distinct transmission and scattering cooperativities the two
    // probabilities can sum past 1 far off resonance; scattering is capped.
    LineProbabilities probabilities(double delta, const CavityParams& cavity,
                                    const AtomParams& atoms) const {
        const double t = cavity_transmission_spectrum(delta, transmission_, cavity, atoms);
        const double s = free_space_scatter_spectrum(delta, scattering_, cavity, atoms);
        return {t, std::min(s, 1.0 - t)};
    }

    std::size_t pick_scatterer(const AtomParams& atoms, Rng& rng) const {
        if (scattering_.size() == 1) return 0;
        double total = 0.0;
        for (const auto& b : scattering_) total += scatter_weight(b, atoms);
        double u = uniform01(rng) * total;
        for (std::size_t j = 0; j < scattering_.size(); ++j) {
            u -= scatter_weight(scattering_[j], atoms);
            if (u < 0.0) return j;
        }
        return scattering_.size() - 1;
    }

    void scale(std::size_t j, double ratio) {
        transmission_[j].eta *= ratio;
        scattering_[j].eta *= ratio;
    }

  private:
    std::vector<Blocker> transmission_;
    std::vector<Blocker> scattering_;
};

}  // namespace

void validate(const TimingSequence& t) {
    require_nonnegative(t.storage_ramp, "TimingSequence.storage_ramp");
    require_nonnegative(t.hold_before_source, "TimingSequence.hold_before_source");
    require_nonnegative(t.source_window, "TimingSequence.source_window");
    require_nonnegative(t.hold_before_retrieval, "TimingSequence.hold_before_retrieval");
}

void validate(const GatePulse& g) {
    require_nonnegative(g.mean_incident_photons, "GatePulse.mean_incident_photons");
    require_probability(g.storage_efficiency, "GatePulse.storage_efficiency");
    require_probability(g.retrieval_efficiency, "GatePulse.retrieval_efficiency");
}

void validate(const SourceDrive& s) {
    require_nonnegative(s.mean_source_photons, "SourceDrive.mean_source_photons");
    require(std::isfinite(s.detuning), "SourceDrive.detuning", "must be finite");
}

void validate(const PumpingModel& p) {
    require_probability(p.hop_prob_per_scatter, "PumpingModel.hop_prob_per_scatter");
    require_probability(p.eta_ratio_after_hop, "PumpingModel.eta_ratio_after_hop");
}

void validate(const DetectionChain& d) {
    require_probability(d.gate_path_efficiency, "DetectionChain.gate_path_efficiency");
    require_probability(d.source_path_efficiency, "DetectionChain.source_path_efficiency");
    require_nonnegative(d.gate_dark_rate, "DetectionChain.gate_dark_rate");
    require_nonnegative(d.source_dark_rate, "DetectionChain.source_dark_rate");
    require_nonnegative(d.gate_window, "DetectionChain.gate_window");
}

void validate(const RunConfig& c) {
    validate(c.cavity);
    validate(c.atoms);
    validate(c.coop);
    validate(c.timing);
    validate(c.gate);
    validate(c.source);
    validate(c.pumping);
    validate(c.detection);
    require(c.n_shots >= 1, "RunConfig.n_shots", "must be >= 1");
}

SpinWave sample_gate_storage(const GatePulse& gate, const CooperativityModel& coop, Rng& rng) {
    SpinWave spin;
    spin.n_exc = poisson(rng, gate.mean_stored());
    spin.etas.reserve(static_cast<std::size_t>(spin.n_exc));
    for (int i = 0; i < spin.n_exc; ++i) spin.etas.push_back(sample_coupling(coop, rng));
    return spin;
}

WindowOutcome evolve_source_window(SpinWave spin, const SourceDrive& source,
                                   const PumpingModel& pumping, const CavityParams& cavity,
                                   const AtomParams& atoms, Rng& rng) {
    WindowOutcome out;
    out.attempted = poisson(rng, source.mean_source_photons);
    const double atom_detuning = source.detuning - atoms.atom_cavity_detuning;

    if (spin.n_exc == 0) {
        // Nothing blocks: every photon sees the empty-cavity line.
        const double t0 = cavity_transmission_spectrum(source.detuning, {}, cavity, atoms);
        out.transmitted = binomial(rng, out.attempted, t0);
        out.spin = std::move(spin);
        return out;
    }

    BlockerSet blockers(spin, atom_detuning);
    auto line = blockers.probabilities(source.detuning, cavity, atoms);
    for (int photon = 1; photon <= out.attempted; ++photon) {
        // Transmit, scatter into free space, or reflect: one draw, exclusive outcomes.
        const double u = uniform01(rng);
        if (u < line.transmit) {
            ++out.transmitted;
            continue;
        }
        if (u >= line.transmit + line.scatter) continue;

        ++out.scatters;
        if (out.photons_to_first_collapse == 0) out.photons_to_first_collapse = photon;
        spin.coherent = false;
        const std::size_t j = blockers.pick_scatterer(atoms, rng);
        if (bernoulli(rng, pumping.hop_prob_per_scatter)) {
            blockers.scale(j, pumping.eta_ratio_after_hop);
            spin.etas[j].transmission *= pumping.eta_ratio_after_hop;
            spin.etas[j].scattering *= pumping.eta_ratio_after_hop;
            line = blockers.probabilities(source.detuning, cavity, atoms);
        }
    }
    out.spin = std::move(spin);
    return out;
}

SpinWave apply_spin_decay(SpinWave spin, double elapsed, const AtomParams& atoms, Rng& rng) {
    if (elapsed < 0.0) throw std::invalid_argument("elapsed time must be >= 0");
    const double survival = std::exp(-elapsed / atoms.tau_spinwave);
    if (!bernoulli(rng, survival)) spin.survived_decay = false;
    return spin;
}

int retrieve_gate(const SpinWave& spin, double retrieval_efficiency, Rng& rng) {
    if (!(retrieval_efficiency >= 0.0 && retrieval_efficiency <= 1.0))
        throw std::invalid_argument("retrieval efficiency must be in [0, 1]");
    if (spin.n_exc < 1 || !spin.coherent || !spin.survived_decay) return 0;
    return binomial(rng, spin.n_exc, retrieval_efficiency);
}

int detect(int true_count, double window, const DetectorPath& path, Rng& rng) {
    if (true_count < 0) throw std::invalid_argument("true count must be >= 0");
    return binomial(rng, true_count, path.efficiency) + poisson(rng, path.dark_rate * window);
}

ShotRecord run_shot(const RunConfig& config, std::uint64_t shot_index) {
    Rng rng(config.master_seed, shot_index);
    ShotRecord rec;
    rec.shot_index = shot_index;

    SpinWave spin = sample_gate_storage(config.gate, config.coop, rng);
    rec.n_stored = spin.n_exc;
    spin = apply_spin_decay(std::move(spin), config.timing.storage_time(), config.atoms, rng);

    auto window = evolve_source_window(std::move(spin), config.source, config.pumping,
                                       config.cavity, config.atoms, rng);
    rec.source_attempted = window.attempted;
    rec.source_transmitted_intracavity = window.transmitted;
    rec.source_transmitted_outside =
        binomial(rng, window.transmitted, config.cavity.outcoupling());
    rec.photons_to_first_collapse = window.photons_to_first_collapse;
    rec.collapsed = !window.spin.coherent;
    rec.survived_decay = window.spin.survived_decay;

    if (config.retrieval_mode) {
        rec.n_retrieved = retrieve_gate(window.spin, config.gate.retrieval_efficiency, rng);
        rec.retrieved = rec.n_retrieved > 0;
    }

    rec.detected_source = detect(rec.source_transmitted_outside, config.timing.source_window,
                                 config.detection.source_path(), rng);
    if (config.retrieval_mode) {
        rec.detected_gate = detect(rec.n_retrieved, config.detection.gate_window,
                                   config.detection.gate_path(), rng);
    }
    return rec;
}

std::vector<ShotRecord> run_experiment(const RunConfig& config, unsigned threads) {
    validate(config);
    std::vector<ShotRecord> records(config.n_shots);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const auto n = config.n_shots;
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n));

    if (threads <= 1) {
        for (std::uint64_t i = 0; i < n; ++i) records[i] = run_shot(config, i);
        return records;
    }

    constexpr std::uint64_t kChunk = 256;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<bool> stop{false};

    auto worker = [&] {
        try {
            while (!stop.load(std::memory_order_relaxed)) {
                const std::uint64_t begin = next.fetch_add(kChunk);
                if (begin >= n) break;
                const std::uint64_t end = std::min(n, begin + kChunk);
                for (std::uint64_t i = begin; i < end; ++i) records[i] = run_shot(config, i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop = true;
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

}  // namespace spt
