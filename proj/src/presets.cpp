#include "spt/presets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "spt/error.hpp"
#include "spt/fit.hpp"
#include "spt/stats.hpp"

#ifndef SPT_VERSION
#define SPT_VERSION "unknown"
#endif

namespace spt {

namespace {

using Records = std::vector<ShotRecord>;

// Bootstrap domains for preset-level observables.
enum : std::uint64_t {
    kAnalysisTag = 0xB0070000,
    kExtinctionStream = 0xD0,
    kSingleStream = 0xD1,
    kMeanStream = 0xD2,
    kFitStream = 0xD3,
    kPredictionStream = 0xD4,
};

constexpr double kFig3DetectedPeak = 17.0;
constexpr double kFig3EtaT = 2.35;

std::vector<double> linspace_steps(int from, int to, double step) {
    std::vector<double> v;
    for (int k = from; k <= to; ++k) v.push_back(k * step);
    return v;
}

std::string label(double v) { return format_double(v); }

Estimate exact(double v) { return {v, 0.0, 0.0, 0.0}; }

BootstrapOptions analysis_options(std::uint64_t seed, std::uint64_t k) {
    BootstrapOptions o;
    o.seed = mix_seed(seed, kAnalysisTag + k);
    return o;
}

PointSummary summarize(const Records& records) {
    PointSummary p;
    p.shots = records.size();
    const auto n = static_cast<double>(records.size());
    for (const auto& r : records) {
        p.mean_stored += r.n_stored;
        p.mean_attempted += r.source_attempted;
        p.mean_transmitted_intracavity += r.source_transmitted_intracavity;
        p.mean_transmitted_outside += r.source_transmitted_outside;
        p.mean_detected_source += r.detected_source;
        p.collapsed_fraction += r.collapsed ? 1.0 : 0.0;
        p.retrieved_fraction += r.retrieved ? 1.0 : 0.0;
        p.mean_detected_gate += r.detected_gate;
    }
    for (double* f : {&p.mean_stored, &p.mean_attempted, &p.mean_transmitted_intracavity,
                      &p.mean_transmitted_outside, &p.mean_detected_source, &p.collapsed_fraction,
                      &p.retrieved_fraction, &p.mean_detected_gate})
        *f /= n;
    return p;
}

std::size_t index_of(const std::vector<double>& grid, double value) {
    const auto it = std::find(grid.begin(), grid.end(), value);
    if (it == grid.end()) throw std::logic_error("preset grid lacks a required point");
    return static_cast<std::size_t>(it - grid.begin());
}

template <class Fn>
Estimate mean_estimate(const Records& records, Fn value_of, const BootstrapOptions& options) {
    const auto tally = make_tally<int>(records, value_of);
    return bootstrap_tally(
        tally,
        [](std::span<const int> keys, std::span<const std::uint64_t> w) {
            double s = 0.0, n = 0.0;
            for (std::size_t i = 0; i < keys.size(); ++i) {
                s += static_cast<double>(w[i]) * keys[i];
                n += static_cast<double>(w[i]);
            }
            if (n == 0.0) throw EstimationError("mean of empty sample");
            return s / n;
        },
        options, kMeanStream);
}

double standard_normal(Rng& rng) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * uniform01(rng));
}

// Parametric bootstrap of a fit: every point is redrawn from a normal with
// its own bootstrap sigma and the fit is repeated. Returns one Estimate per
// fitted parameter.
template <class FitFn>
std::vector<Estimate> fit_uncertainty(std::span<const double> xs, std::span<const double> ys,
                                      std::span<const double> sigmas, FitFn fit,
                                      const BootstrapOptions& options) {
    const std::vector<double> value = fit(xs, ys);
    std::vector<std::vector<double>> reps(value.size());
    Rng rng(options.seed, kFitStream);
    std::vector<double> y(ys.size());
    for (std::size_t b = 0; b < options.resamples; ++b) {
        for (std::size_t i = 0; i < ys.size(); ++i) y[i] = ys[i] + sigmas[i] * standard_normal(rng);
        try {
            const auto p = fit(xs, y);
            for (std::size_t k = 0; k < p.size(); ++k) reps[k].push_back(p[k]);
        } catch (const EstimationError&) {
        }
    }
    std::vector<Estimate> out;
    for (std::size_t k = 0; k < value.size(); ++k)
        out.push_back(summarize_replicates(value[k], std::move(reps[k]), options.confidence));
    return out;
}

Estimate scaled(Estimate e, double factor) {
    e.value /= factor;
    e.err_low /= factor;
    e.err_high /= factor;
    e.sigma /= factor;
    return e;
}

struct Sweep {
    std::vector<PointSummary> points;
    std::deque<Records> records;  // stable addresses while the sweep grows
};

class Runner {
  public:
    Runner(std::uint64_t seed, std::uint64_t shots, unsigned threads)
        : seed_(seed), shots_(shots), threads_(threads) {}

    const Records& run(RunConfig config, double series, double axis) {
        const std::size_t index = sweep_.points.size();
        config.n_shots = shots_;
        config.master_seed = mix_seed(seed_, index);
        sweep_.records.push_back(run_experiment(config, threads_));
        PointSummary p = summarize(sweep_.records.back());
        p.index = index;
        p.series = series;
        p.axis = axis;
        p.seed = config.master_seed;
        sweep_.points.push_back(p);
        return sweep_.records.back();
    }

    Sweep& sweep() { return sweep_; }

  private:
    std::uint64_t seed_;
    std::uint64_t shots_;
    unsigned threads_;
    Sweep sweep_;
};

void analyze_fig2(const ExperimentPreset& preset, PresetResult& out, Runner& runner) {
    const RunConfig& base = preset.base;
    std::vector<std::vector<const Records*>> by_series;
    for (double stored : preset.series) {
        auto& column = by_series.emplace_back();
        for (double d : preset.grid) {
            RunConfig c = base;
            c.gate.mean_incident_photons = stored / base.gate.storage_efficiency;
            c.source.detuning = mhz_to_angular(d);
            column.push_back(&runner.run(c, stored, d));
        }
    }

    const std::size_t res = index_of(preset.grid, 0.0);
    const std::size_t none = index_of(preset.series, 0.0);
    const Records& reference_records = *by_series[none][res];
    const double reference = mean_count(reference_records, CountChannel::detected);

    CsvTable contrast{"contrast", {"stored_mean", "contrast", "err_low", "err_high", "bound"}, {}};
    for (std::size_t s = 0; s < preset.series.size(); ++s) {
        std::vector<SweepColumn> columns;
        for (std::size_t i = 0; i < preset.grid.size(); ++i)
            columns.push_back({mhz_to_angular(preset.grid[i]), *by_series[s][i]});
        const Spectrum spectrum = average_spectrum(columns, reference, CountChannel::detected);
        CsvTable t{"spectrum_ng" + label(preset.series[s]),
                   {"detuning_mhz", "mean_transmission", "sem"},
                   {}};
        for (std::size_t i = 0; i < preset.grid.size(); ++i)
            t.rows.push_back({preset.grid[i], spectrum.mean_transmission[i], spectrum.sem[i]});
        out.tables.push_back(std::move(t));

        if (s == none) continue;
        const double stored = preset.series[s];
        const Estimate c = switching_contrast(*by_series[s][res], reference_records,
                                              CountChannel::detected, analysis_options(out.seed, s));
        const double bound = contrast_bound(stored);
        out.summary["contrast_ng" + label(stored)] = c;
        out.summary["contrast_bound_ng" + label(stored)] = exact(bound);
        contrast.rows.push_back({stored, c.value, c.err_low, c.err_high, bound});
    }
    out.tables.push_back(std::move(contrast));
}

void analyze_fig3(const ExperimentPreset& preset, PresetResult& out, Runner& runner) {
    const RunConfig& base = preset.base;
    std::vector<const Records*> columns_records;
    for (double d : preset.grid) {
        RunConfig c = base;
        c.source.detuning = mhz_to_angular(d);
        columns_records.push_back(&runner.run(c, preset.series.front(), d));
    }

    std::vector<SweepColumn> columns;
    int max_count = 1;
    for (std::size_t i = 0; i < preset.grid.size(); ++i) {
        columns.push_back({mhz_to_angular(preset.grid[i]), *columns_records[i]});
        for (const auto& r : *columns_records[i]) max_count = std::max(max_count, r.detected_source);
    }
    const CountBinning binning{0, max_count, 1};
    const TransmissionHistogram h = build_histogram(columns, binning, CountChannel::detected);

    CsvTable hist{"histogram", {"detuning_mhz", "count", "rate"}, {}};
    CsvTable comp{"components",
                  {"detuning_mhz", "high_mean", "low_mean", "extinction_factor", "threshold",
                   "high_mean_threshold", "low_mean_threshold", "extinction_factor_threshold"},
                  {}};
    for (std::size_t i = 0; i < h.columns.size(); ++i) {
        const auto& col = h.columns[i];
        for (int b = 0; b < binning.bins(); ++b)
            hist.rows.push_back({preset.grid[i], static_cast<double>(binning.min_count + b),
                                 col.rates[static_cast<std::size_t>(b)]});
        comp.rows.push_back({preset.grid[i], col.high.mean, col.low.mean, extinction_factor(col),
                             col.threshold, col.high_by_threshold.mean, col.low_by_threshold.mean,
                             extinction_factor_by_threshold(col)});
    }
    out.tables.push_back(std::move(hist));
    out.tables.push_back(std::move(comp));

    const std::size_t res = index_of(preset.grid, 0.0);
    const Records& resonant = *columns_records[res];
    const auto& col = h.columns[res];

    using Key = std::pair<bool, int>;
    const auto tally = make_tally<Key>(resonant, [](const ShotRecord& r) {
        return Key{r.n_stored > 0, r.detected_source};
    });
    auto component_ratio = [](double threshold, bool by_truth) {
        return [threshold, by_truth](std::span<const Key> keys, std::span<const std::uint64_t> w) {
            double n_hi = 0, n_lo = 0, s_hi = 0, s_lo = 0;
            for (std::size_t i = 0; i < keys.size(); ++i) {
                const auto c = static_cast<double>(w[i]);
                const bool low = by_truth ? keys[i].first : keys[i].second <= threshold;
                (low ? n_lo : n_hi) += c;
                (low ? s_lo : s_hi) += c * keys[i].second;
            }
            if (n_hi == 0 || n_lo == 0 || s_lo == 0)
                throw EstimationError("extinction factor: empty component");
            return (s_hi / n_hi) / (s_lo / n_lo);
        };
    };
    const auto opts = analysis_options(out.seed, 0);
    out.summary["extinction_factor"] =
        bootstrap_tally(tally, component_ratio(0.0, true), opts, kExtinctionStream);
    out.summary["extinction_factor_threshold"] =
        bootstrap_tally(tally, component_ratio(col.threshold, false), opts, kExtinctionStream);
    Records high, low;
    for (const auto& r : resonant) (r.n_stored == 0 ? high : low).push_back(r);
    auto detected = [](const ShotRecord& r) { return r.detected_source; };
    out.summary["high_mean"] = mean_estimate(high, detected, opts);
    out.summary["low_mean"] = mean_estimate(low, detected, opts);
    out.summary["threshold"] = exact(col.threshold);

    const auto stored = make_tally<int>(resonant, [](const ShotRecord& r) {
        return std::min(r.n_stored, 2);
    });
    out.summary["p_single_given_any"] = bootstrap_tally(
        stored,
        [](std::span<const int> keys, std::span<const std::uint64_t> w) {
            double one = 0, any = 0;
            for (std::size_t i = 0; i < keys.size(); ++i) {
                if (keys[i] >= 1) any += static_cast<double>(w[i]);
                if (keys[i] == 1) one += static_cast<double>(w[i]);
            }
            if (any == 0) throw EstimationError("no shots with a stored excitation");
            return one / any;
        },
        opts, kSingleStream);
}

void analyze_fig4ab(const ExperimentPreset& preset, PresetResult& out, Runner& runner) {
    const RunConfig& base = preset.base;
    Rng prediction_rng(mix_seed(out.seed, kAnalysisTag), kPredictionStream);
    const double predicted =
        predicted_gain_slope(base.gate.mean_stored(), base.coop, base.cavity, base.atoms,
                             base.source.detuning, prediction_rng);
    out.summary["gain_slope_predicted"] = exact(predicted);

    std::size_t k = 0;
    for (double window_us : preset.series) {
        const std::string tag = "_w" + label(window_us) + "us";
        CsvTable t{"gain" + tag,
                   {"source_strength", "gain_intracavity", "err_low", "err_high", "gain_outside",
                    "err_low_outside", "err_high_outside"},
                   {}};
        std::vector<double> xs, ys, sig;
        Estimate peak_in, peak_out;
        for (double s : preset.grid) {
            RunConfig c = base;
            c.timing.source_window = window_us * 1e-6;
            c.source.mean_source_photons = s;
            const Records& records = runner.run(c, window_us, s);
            const GainEstimate g = gain(records, analysis_options(out.seed, ++k));
            t.rows.push_back({s, g.intracavity.value, g.intracavity.err_low, g.intracavity.err_high,
                              g.outside.value, g.outside.err_low, g.outside.err_high});
            xs.push_back(s);
            ys.push_back(g.intracavity.value);
            sig.push_back(g.intracavity.sigma);
            if (g.intracavity.value > peak_in.value) peak_in = g.intracavity;
            if (g.outside.value > peak_out.value) peak_out = g.outside;
        }
        out.tables.push_back(std::move(t));

        const std::size_t n_linear = std::min<std::size_t>(9, xs.size());
        const auto opts = analysis_options(out.seed, 1000 + k);
        const auto linear = fit_uncertainty(
            std::span(xs).first(n_linear), std::span(ys).first(n_linear),
            std::span(sig).first(n_linear),
            [](std::span<const double> x, std::span<const double> y) {
                const auto f = fit_linear(x, y);
                return std::vector<double>{f.slope, f.intercept};
            },
            opts);
        const auto saturation = fit_uncertainty(
            xs, ys, sig,
            [](std::span<const double> x, std::span<const double> y) {
                const auto f = fit_saturation(x, y);
                return std::vector<double>{f.g_max, f.scale};
            },
            opts);
        out.summary["gain_slope" + tag] = linear[0];
        out.summary["gain_slope_ratio" + tag] = scaled(linear[0], predicted);
        out.summary["gain_max" + tag] = saturation[0];
        out.summary["gain_saturation_scale" + tag] = saturation[1];
        out.summary["gain_peak_intracavity" + tag] = peak_in;
        out.summary["gain_peak_outside" + tag] = peak_out;
    }
}

void analyze_fig4e(const ExperimentPreset& preset, PresetResult& out, Runner& runner) {
    const RunConfig& base = preset.base;
    std::vector<const Records*> sets;
    for (double s : preset.grid) {
        RunConfig c = base;
        c.source.mean_source_photons = s;
        sets.push_back(&runner.run(c, 0.0, s));
    }
    std::vector<RetrievalPoint> points;
    for (std::size_t i = 0; i < preset.grid.size(); ++i)
        points.push_back({preset.grid[i], *sets[i]});
    const RetrievalCurve curve =
        retrieval_curve(points, base.cavity.outcoupling(), RetrievalNormalization::single_excitation,
                        analysis_options(out.seed, 0));

    CsvTable t{"retrieval", {"source_strength", "fraction", "sigma", "residual"}, {}};
    for (std::size_t i = 0; i < curve.source_strengths.size(); ++i)
        t.rows.push_back({curve.source_strengths[i], curve.fractions[i], curve.fraction_sigma[i],
                          curve.residuals[i]});
    out.tables.push_back(std::move(t));

    out.summary["m_s0_intracavity"] = curve.m_s0_intracavity;
    out.summary["m_s0_outside"] = curve.m_s0_outside;
    out.summary["retrieval_fit_amplitude"] = exact(curve.amplitude);
    out.summary["retrieval_fit_rms"] = exact(rms(curve.residuals));
    for (std::size_t i = 0; i < curve.residuals.size(); ++i) {
        char key[32];
        std::snprintf(key, sizeof key, "retrieval_fit_residual_%02zu", i);
        out.summary[key] = exact(curve.residuals[i]);
    }

    // Combined storage and retrieval efficiency per incident gate photon.
    const std::size_t zero = index_of(preset.grid, 0.0);
    const double incident = base.gate.mean_incident_photons;
    if (incident > 0.0) {
        out.summary["combined_efficiency"] =
            scaled(mean_estimate(*sets[zero], [](const ShotRecord& r) { return r.n_retrieved; },
                                 analysis_options(out.seed, 1)),
                   incident);
    }

    // Gain with the gate photon retrieved, at the 1/e source strength.
    const double m_s0 = curve.m_s0_intracavity.value;
    RunConfig c = base;
    c.source.mean_source_photons = m_s0;
    const Records& at_m_s0 = runner.run(c, 1.0, m_s0);
    const GainEstimate g = gain(at_m_s0, analysis_options(out.seed, 2));
    out.summary["g_r_intracavity"] = g.intracavity;
    out.summary["g_r_outside"] = g.outside;
}

void analyze_single(const ExperimentPreset& preset, PresetResult& out, Runner& runner) {
    const RunConfig& base = preset.base;
    const Records& records = runner.run(base, 0.0, 0.0);
    const auto opts = analysis_options(out.seed, 0);

    if (preset.kind == PresetKind::custom) {
        out.summary["mean_transmitted_intracavity"] = mean_estimate(
            records, [](const ShotRecord& r) { return r.source_transmitted_intracavity; }, opts);
        out.summary["mean_transmitted_outside"] = mean_estimate(
            records, [](const ShotRecord& r) { return r.source_transmitted_outside; }, opts);
        out.summary["mean_detected_source"] =
            mean_estimate(records, [](const ShotRecord& r) { return r.detected_source; }, opts);
        out.summary["collapsed_fraction"] =
            mean_estimate(records, [](const ShotRecord& r) { return r.collapsed ? 1 : 0; }, opts);
        bool blocked = false, open = false;
        for (const auto& r : records) (r.n_stored > 0 ? blocked : open) = true;
        if (blocked && open) {
            const GainEstimate g = gain(records, opts);
            out.summary["gain_intracavity"] = g.intracavity;
            out.summary["gain_outside"] = g.outside;
        }
        if (!base.retrieval_mode) return;
        out.summary["retrieved_fraction"] =
            mean_estimate(records, [](const ShotRecord& r) { return r.retrieved ? 1 : 0; }, opts);
        out.summary["mean_detected_gate"] =
            mean_estimate(records, [](const ShotRecord& r) { return r.detected_gate; }, opts);
    }

    std::vector<int> gate, source;
    gate.reserve(records.size());
    source.reserve(records.size());
    for (const auto& r : records) {
        gate.push_back(r.detected_gate);
        source.push_back(r.detected_source);
    }
    const Backgrounds backgrounds{base.detection.gate_dark_rate * base.detection.gate_window,
                                  base.detection.source_dark_rate * base.timing.source_window};
    try {
        const G2Result g2 = g2_cross(gate, source, backgrounds, opts);
        out.summary["g2_raw"] = g2.raw;
        out.summary["g2_corrected"] = g2.corrected;
        out.summary["mean_detected_gate"] = exact(g2.mean_gate);
        out.summary["mean_detected_source"] = exact(g2.mean_source);
    } catch (const EstimationError&) {
        if (preset.kind != PresetKind::custom) throw;
    }
}

nlohmann::ordered_json estimate_json(const Estimate& e) {
    nlohmann::ordered_json j;
    j["value"] = e.value;
    j["err_low"] = e.err_low;
    j["err_high"] = e.err_high;
    return j;
}

}  // namespace

std::string_view preset_name(PresetKind kind) {
    switch (kind) {
        case PresetKind::fig2: return "fig2";
        case PresetKind::fig3: return "fig3";
        case PresetKind::fig4ab: return "fig4ab";
        case PresetKind::fig4e: return "fig4e";
        case PresetKind::g2: return "g2";
        case PresetKind::custom: return "custom";
    }
    return "custom";
}

const std::vector<std::string_view>& preset_names() {
    static const std::vector<std::string_view> names{"fig2", "fig3", "fig4ab",
                                                     "fig4e", "g2", "custom"};
    return names;
}

PresetKind parse_preset_name(std::string_view name) {
    for (auto kind : {PresetKind::fig2, PresetKind::fig3, PresetKind::fig4ab, PresetKind::fig4e,
                      PresetKind::g2, PresetKind::custom})
        if (preset_name(kind) == name) return kind;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

std::string_view artifact_version() { return SPT_VERSION; }

double calibrated_source_strength(const RunConfig& c, double detected) {
    const double dark = c.detection.source_dark_rate * c.timing.source_window;
    const double t0 = cavity_transmission_spectrum(c.source.detuning, {}, c.cavity, c.atoms);
    const double per_photon = t0 * c.cavity.outcoupling() * c.detection.source_path_efficiency;
    if (!(per_photon > 0.0) || detected <= dark)
        throw std::invalid_argument("source calibration: detected peak below the dark level");
    return (detected - dark) / per_photon;
}

ExperimentPreset make_preset(PresetKind kind, const RunConfig& base) {
    ExperimentPreset p;
    p.kind = kind;
    p.base = base;
    RunConfig& c = p.base;
    switch (kind) {
        case PresetKind::fig2:
        case PresetKind::fig3:
            c.retrieval_mode = false;
            c.timing.source_window = 24e-6;
            c.source.detuning = 0.0;
            c.coop.eta_bar_t = kFig3EtaT;
            c.source.mean_source_photons = calibrated_source_strength(c, kFig3DetectedPeak);
            if (kind == PresetKind::fig2) {
                c.n_shots = 10'000;
                p.series_name = "stored_mean";
                p.series = {0.0, 0.4, 1.4, 2.9};
                p.axis_name = "detuning_mhz";
                p.grid = linspace_steps(-10, 10, 0.1);
            } else {
                c.n_shots = 100'000;
                c.gate.mean_incident_photons = 0.5 / c.gate.storage_efficiency;
                p.series_name = "stored_mean";
                p.series = {0.5};
                p.axis_name = "detuning_mhz";
                p.grid = linspace_steps(-5, 5, 0.1);
            }
            break;
        case PresetKind::fig4ab:
            c.retrieval_mode = false;
            c.n_shots = 10'000;
            c.source.detuning = 0.0;
            c.gate.mean_incident_photons = 0.4 / c.gate.storage_efficiency;
            p.series_name = "window_us";
            p.series = {25.0, 50.0};
            p.axis_name = "source_strength";
            p.grid = {10, 20, 30, 40, 50, 60, 70, 80, 90, 150, 300, 600, 1000, 1500, 2000, 3000, 4000};
            break;
        case PresetKind::fig4e:
            c.retrieval_mode = true;
            c.n_shots = 100'000;
            c.source.detuning = 0.0;
            c.timing = TimingSequence{0.0, 0.0, 1e-6, 0.0};
            c.gate.mean_incident_photons = 0.2 / c.gate.storage_efficiency;
            p.series_name = "g_r_point";
            p.axis_name = "source_strength";
            p.grid = {0, 0.5, 1, 1.5, 2, 2.5, 3, 4, 5, 6, 8, 10};
            break;
        case PresetKind::g2:
            c.retrieval_mode = true;
            c.n_shots = 1'000'000;
            c.source.detuning = 0.0;
            c.timing = TimingSequence{0.0, 0.0, 1e-6, 0.0};
            c.gate.mean_incident_photons = 0.2 / c.gate.storage_efficiency;
            c.source.mean_source_photons = 0.1 / c.cavity.outcoupling();
            break;
        case PresetKind::custom: break;
    }
    validate(p.base);
    return p;
}

PresetResult run_preset(const ExperimentPreset& preset, const RunOptions& options) {
    PresetResult out;
    out.preset = preset;
    out.seed = options.seed_given ? options.seed : preset.base.master_seed;
    out.shots_per_point = options.shots > 0 ? options.shots : preset.base.n_shots;
    out.preset.base.n_shots = out.shots_per_point;
    out.preset.base.master_seed = out.seed;

    Runner runner(out.seed, out.shots_per_point, options.threads);
    switch (preset.kind) {
        case PresetKind::fig2: analyze_fig2(out.preset, out, runner); break;
        case PresetKind::fig3: analyze_fig3(out.preset, out, runner); break;
        case PresetKind::fig4ab: analyze_fig4ab(out.preset, out, runner); break;
        case PresetKind::fig4e: analyze_fig4e(out.preset, out, runner); break;
        case PresetKind::g2:
        case PresetKind::custom: analyze_single(out.preset, out, runner); break;
    }
    out.points = std::move(runner.sweep().points);
    return out;
}

std::string to_csv(const CsvTable& table) {
    std::string s;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) s += ',';
        s += table.header[i];
    }
    s += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += ',';
            s += format_double(row[i]);
        }
        s += '\n';
    }
    return s;
}

std::string points_csv(const PresetResult& result) {
    const auto& p = result.preset;
    CsvTable t{"points",
               {"point", p.series_name.empty() ? "series" : p.series_name,
                p.axis_name.empty() ? "axis" : p.axis_name, "seed", "shots", "mean_stored",
                "mean_attempted", "mean_transmitted_intracavity", "mean_transmitted_outside",
                "mean_detected_source", "collapsed_fraction", "retrieved_fraction",
                "mean_detected_gate"},
               {}};
    std::string s = to_csv(t);
    for (const auto& pt : result.points) {
        s += std::to_string(pt.index) + ',' + format_double(pt.series) + ',' +
             format_double(pt.axis) + ',' + std::to_string(pt.seed) + ',' +
             std::to_string(pt.shots);
        for (double v : {pt.mean_stored, pt.mean_attempted, pt.mean_transmitted_intracavity,
                         pt.mean_transmitted_outside, pt.mean_detected_source,
                         pt.collapsed_fraction, pt.retrieved_fraction, pt.mean_detected_gate})
            s += ',' + format_double(v);
        s += '\n';
    }
    return s;
}

std::string manifest_json(const PresetResult& result) {
    nlohmann::ordered_json j;
    j["version"] = std::string(artifact_version());
    j["preset"] = std::string(preset_name(result.preset.kind));
    j["seed"] = result.seed;
    j["shots_per_point"] = result.shots_per_point;
    auto& points = j["points"] = nlohmann::ordered_json::array();
    for (const auto& pt : result.points) {
        nlohmann::ordered_json e;
        e["point"] = pt.index;
        e[result.preset.series_name.empty() ? "series" : result.preset.series_name] = pt.series;
        e[result.preset.axis_name.empty() ? "axis" : result.preset.axis_name] = pt.axis;
        e["seed"] = pt.seed;
        points.push_back(std::move(e));
    }
    auto& files = j["files"] = nlohmann::ordered_json::array();
    files.push_back("points.csv");
    for (const auto& t : result.tables) files.push_back(t.name + ".csv");
    files.push_back("summary.json");
    j["config"] = write_config(result.preset.base);
    return j.dump(2) + '\n';
}

std::string summary_json(const PresetResult& result) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, e] : result.summary) j[name] = estimate_json(e);
    return j.dump(2) + '\n';
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw std::runtime_error("cannot rename into " + path.string());
    }
}

void write_artifacts(const PresetResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    write_file_atomic(out_dir / "points.csv", points_csv(result));
    for (const auto& t : result.tables) write_file_atomic(out_dir / (t.name + ".csv"), to_csv(t));
    write_file_atomic(out_dir / "summary.json", summary_json(result));
    write_file_atomic(out_dir / "manifest.json", manifest_json(result));
}

}  // namespace spt
