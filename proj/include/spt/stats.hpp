#pragma once

// Estimators that turn shot records into observables: spectra, switching
// contrast, transmission histograms, gain, retrieval curves and the
// gate-source cross-correlation. All uncertainties except the spectrum SEM
// come from a seeded percentile bootstrap.

#include <cstdint>
#include <span>
#include <vector>

#include "spt/bootstrap.hpp"
#include "spt/engine.hpp"
#include "spt/qed.hpp"

namespace spt {

/// Which source photon count of a shot an estimator looks at.
enum class CountChannel {
    intracavity,  // photons leaving the cavity mode, before outcoupling
    outside,      // after outcoupling
    detected,     // after the detection path, including dark counts
};

int count_of(const ShotRecord& record, CountChannel channel);
double mean_count(std::span<const ShotRecord> records, CountChannel channel);

/// Shots taken at one source detuning.
struct SweepColumn {
    double detuning = 0.0;  // rad/s
    std::span<const ShotRecord> records;
};

struct Spectrum {
    std::vector<double> detunings;
    std::vector<double> mean_transmission;
    std::vector<double> sem;
};

/// Mean count per detuning divided by `reference` (the no-gate resonant
/// mean), with standard errors of the mean.
Spectrum average_spectrum(std::span<const SweepColumn> columns, double reference,
                          CountChannel channel);

/// Largest average contrast a coherent gate with this stored mean can give.
double contrast_bound(double mean_stored);

/// 1 - <count with gate> / <count without gate>.
Estimate switching_contrast(std::span<const ShotRecord> with_gate,
                            std::span<const ShotRecord> without_gate, CountChannel channel,
                            const BootstrapOptions& options);

struct CountBinning {
    int min_count = 0;
    int max_count = 0;  // inclusive upper edge of the last bin
    int bin_width = 1;

    int bins() const { return (max_count - min_count) / bin_width + 1; }
    int bin_of(int count) const;
};

struct ComponentStats {
    std::uint64_t shots = 0;
    double mean = 0.0;
};

struct HistogramColumn {
    double detuning = 0.0;
    std::uint64_t shots = 0;
    std::vector<double> rates;  // occurrence rate per count bin, sums to 1
    // Ground truth split: high = no stored excitation, low = at least one.
    ComponentStats high;
    ComponentStats low;
    // Observational split at the histogram valley.
    double threshold = 0.0;
    ComponentStats high_by_threshold;
    ComponentStats low_by_threshold;
};

struct TransmissionHistogram {
    CountBinning binning;
    std::vector<HistogramColumn> columns;
};

inline constexpr std::uint64_t kMinHistogramShots = 1000;

/// Counts outside the binning range fall into the first or last bin.
TransmissionHistogram build_histogram(std::span<const SweepColumn> columns,
                                      const CountBinning& binning,
                                      CountChannel channel = CountChannel::detected);

/// High-component mean over low-component mean (ground truth labels).
double extinction_factor(const HistogramColumn& column);
double extinction_factor_by_threshold(const HistogramColumn& column);

/// Split point of a bimodal count sample: Otsu's threshold refined to the
/// minimum of the smoothed histogram between the two class means. Counts
/// above the returned value belong to the high component.
double valley_threshold(std::span<const int> counts);

struct GainEstimate {
    double source_strength = 0.0;  // <M_s>|_{n_g=0}, intracavity units
    Estimate intracavity;
    Estimate outside;
};

/// G = <M_s>|_{n_g=0} - <M_s>|_{n_g>=1} using ground-truth stored numbers.
GainEstimate gain(std::span<const ShotRecord> records, const BootstrapOptions& options);

/// Same difference from detected counts split at `threshold`, converted to
/// outside-cavity photons by dividing by the source path efficiency.
Estimate gain_by_threshold(std::span<const ShotRecord> records, double threshold,
                           double source_path_efficiency, const BootstrapOptions& options);

/// Small-signal gain slope dG/d<M_s> from the component separation:
/// 1 - E[T(sum of stored eta_t) | n >= 1] for Poisson(mean_stored) storage.
/// Sampled cooperativity models are averaged with `samples` draws.
double predicted_gain_slope(double mean_stored, const CooperativityModel& coop,
                            const CavityParams& cavity, const AtomParams& atoms,
                            double detuning, Rng& rng, std::size_t samples = 200'000);

struct RetrievalPoint {
    double source_strength = 0.0;  // nominal <M_s>|_{n_g=0}, intracavity units
    std::span<const ShotRecord> records;
};

enum class RetrievalNormalization {
    per_stored_excitation,  // sum n_retrieved / sum n_stored over all shots
    single_excitation,      // mean n_retrieved over shots with exactly one stored excitation
};

struct RetrievalCurve {
    std::vector<double> source_strengths;
    std::vector<double> fractions;  // normalized to the zero-source point
    std::vector<double> fraction_sigma;
    double raw_reference = 0.0;  // un-normalized retrieval at zero source
    double amplitude = 0.0;
    Estimate m_s0_intracavity;
    Estimate m_s0_outside;
    std::vector<double> residuals;
};

RetrievalCurve retrieval_curve(std::span<const RetrievalPoint> points, double outcoupling,
                               RetrievalNormalization normalization,
                               const BootstrapOptions& options);

/// Mean dark counts per shot in each channel.
struct Backgrounds {
    double gate = 0.0;
    double source = 0.0;
};

struct G2Result {
    Estimate raw;
    Estimate corrected;
    double mean_gate = 0.0;
    double mean_source = 0.0;
};

/// g2 = <n_g n_s> / (<n_g><n_s>); the corrected value removes independent
/// dark counts from numerator and denominators.
G2Result g2_cross(std::span<const int> gate_counts, std::span<const int> source_counts,
                  const Backgrounds& backgrounds, const BootstrapOptions& options);

}  // namespace spt
