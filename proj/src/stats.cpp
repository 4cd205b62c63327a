#include "spt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "spt/error.hpp"
#include "spt/fit.hpp"

namespace spt {

namespace {

// Bootstrap stream ids, one per estimator.
enum : std::uint64_t {
    kContrastStream = 0xC0,
    kGainStream = 0xC1,
    kThresholdGainStream = 0xC2,
    kRetrievalStream = 0xC3,
    kG2Stream = 0xC4,
};

template <class Key>
double weighted_mean(const Tally<Key>& t, std::span<const std::uint64_t> w, auto value_of) {
    double s = 0.0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < t.keys.size(); ++i) {
        s += static_cast<double>(w[i]) * value_of(t.keys[i]);
        n += w[i];
    }
    if (n == 0) throw EstimationError("mean of empty sample");
    return s / static_cast<double>(n);
}

struct Moments {
    double mean = 0.0;
    double sem = 0.0;
};

Moments moments(std::span<const ShotRecord> records, CountChannel channel) {
    const auto n = static_cast<double>(records.size());
    double s = 0.0;
    for (const auto& r : records) s += count_of(r, channel);
    const double mean = s / n;
    double v = 0.0;
    for (const auto& r : records) {
        const double d = count_of(r, channel) - mean;
        v += d * d;
    }
    v /= (n - 1.0);
    return {mean, std::sqrt(v / n)};
}

}  // namespace

int count_of(const ShotRecord& r, CountChannel channel) {
    switch (channel) {
        case CountChannel::intracavity: return r.source_transmitted_intracavity;
        case CountChannel::outside: return r.source_transmitted_outside;
        case CountChannel::detected: return r.detected_source;
    }
    return 0;
}

double mean_count(std::span<const ShotRecord> records, CountChannel channel) {
    if (records.empty()) throw EstimationError("mean of empty record set");
    double s = 0.0;
    for (const auto& r : records) s += count_of(r, channel);
    return s / static_cast<double>(records.size());
}

Spectrum average_spectrum(std::span<const SweepColumn> columns, double reference,
                          CountChannel channel) {
    if (!(reference > 0.0)) throw EstimationError("spectrum reference must be > 0");
    Spectrum out;
    for (const auto& col : columns) {
        if (col.records.empty()) throw EstimationError("spectrum: empty detuning group");
        if (col.records.size() < 2) throw EstimationError("spectrum: need >= 2 shots per detuning");
        const Moments m = moments(col.records, channel);
        out.detunings.push_back(col.detuning);
        out.mean_transmission.push_back(m.mean / reference);
        out.sem.push_back(m.sem / reference);
    }
    return out;
}

double contrast_bound(double mean_stored) { return 1.0 - std::exp(-mean_stored); }

Estimate switching_contrast(std::span<const ShotRecord> with_gate,
                            std::span<const ShotRecord> without_gate, CountChannel channel,
                            const BootstrapOptions& options) {
    if (with_gate.empty() || without_gate.empty())
        throw EstimationError("switching contrast: empty record set");
    auto key = [&](const ShotRecord& r) { return count_of(r, channel); };
    const auto on = make_tally<int>(with_gate, key);
    const auto off = make_tally<int>(without_gate, key);
    auto as_double = [](int k) { return static_cast<double>(k); };

    auto contrast = [&](std::span<const std::uint64_t> w_on, std::span<const std::uint64_t> w_off) {
        const double denom = weighted_mean(off, w_off, as_double);
        if (denom == 0.0) throw EstimationError("switching contrast: zero reference transmission");
        return 1.0 - weighted_mean(on, w_on, as_double) / denom;
    };

    const double value = contrast(on.counts, off.counts);
    Rng rng(options.seed, kContrastStream);
    std::vector<double> reps;
    reps.reserve(options.resamples);
    for (std::size_t b = 0; b < options.resamples; ++b) {
        const auto w_on = multinomial_resample(on.counts, rng);
        const auto w_off = multinomial_resample(off.counts, rng);
        try {
            reps.push_back(contrast(w_on, w_off));
        } catch (const EstimationError&) {
        }
    }
    return summarize_replicates(value, std::move(reps), options.confidence);
}

int CountBinning::bin_of(int count) const {
    const int b = (count - min_count) / bin_width;
    if (count < min_count) return 0;
    return std::min(b, bins() - 1);
}

double valley_threshold(std::span<const int> counts) {
    if (counts.empty()) throw EstimationError("valley threshold of empty sample");
    const int top = *std::max_element(counts.begin(), counts.end());
    const int bottom = *std::min_element(counts.begin(), counts.end());
    if (bottom < 0) throw EstimationError("valley threshold: negative counts");
    if (top == bottom) return top - 0.5;

    std::vector<double> hist(static_cast<std::size_t>(top) + 1, 0.0);
    for (int c : counts) hist[static_cast<std::size_t>(c)] += 1.0;
    const double n = static_cast<double>(counts.size());

    // Otsu: maximize between-class variance over split points t (low: c <= t).
    double total_sum = 0.0;
    for (std::size_t c = 0; c < hist.size(); ++c) total_sum += static_cast<double>(c) * hist[c];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    std::size_t split = static_cast<std::size_t>(bottom);
    for (std::size_t t = static_cast<std::size_t>(bottom); t + 1 < hist.size(); ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        const double w1 = n - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (total_sum - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            split = t;
        }
    }

    double lo_sum = 0.0, lo_n = 0.0, hi_sum = 0.0, hi_n = 0.0;
    for (std::size_t c = 0; c < hist.size(); ++c) {
        if (c <= split) {
            lo_sum += static_cast<double>(c) * hist[c];
            lo_n += hist[c];
        } else {
            hi_sum += static_cast<double>(c) * hist[c];
            hi_n += hist[c];
        }
    }
    const auto first = static_cast<std::size_t>(std::floor(lo_sum / lo_n));
    const auto last = static_cast<std::size_t>(std::ceil(hi_sum / hi_n));

    // Smoothed histogram minimum between the class means. Ties go to the
    // point closest to the Otsu split.
    auto smoothed = [&](std::size_t c) {
        double s = hist[c];
        double w = 1.0;
        if (c > 0) {
            s += hist[c - 1];
            w += 1.0;
        }
        if (c + 1 < hist.size()) {
            s += hist[c + 1];
            w += 1.0;
        }
        return s / w;
    };
    std::size_t valley = split;
    double valley_height = smoothed(split);
    for (std::size_t c = first; c <= last && c < hist.size(); ++c) {
        const double h = smoothed(c);
        const auto dist = [&](std::size_t x) { return x > split ? x - split : split - x; };
        if (h < valley_height || (h == valley_height && dist(c) < dist(valley))) {
            valley = c;
            valley_height = h;
        }
    }
    return static_cast<double>(valley) + 0.5;
}

TransmissionHistogram build_histogram(std::span<const SweepColumn> columns,
                                      const CountBinning& binning, CountChannel channel) {
    if (binning.bin_width <= 0 || binning.max_count < binning.min_count)
        throw EstimationError("histogram: degenerate count binning");
    std::uint64_t total = 0;
    for (const auto& col : columns) total += col.records.size();
    if (total < kMinHistogramShots) throw EstimationError("histogram: need at least 10^3 shots");

    TransmissionHistogram hist;
    hist.binning = binning;
    for (const auto& col : columns) {
        if (col.records.empty()) throw EstimationError("histogram: empty detuning column");
        HistogramColumn out;
        out.detuning = col.detuning;
        out.shots = col.records.size();
        std::vector<std::uint64_t> bins(static_cast<std::size_t>(binning.bins()), 0);
        std::vector<int> counts;
        counts.reserve(col.records.size());
        double high_sum = 0.0, low_sum = 0.0;
        for (const auto& r : col.records) {
            const int c = count_of(r, channel);
            counts.push_back(c);
            ++bins[static_cast<std::size_t>(binning.bin_of(c))];
            if (r.n_stored == 0) {
                ++out.high.shots;
                high_sum += c;
            } else {
                ++out.low.shots;
                low_sum += c;
            }
        }
        const auto n = static_cast<double>(out.shots);
        out.rates.reserve(bins.size());
        for (auto b : bins) out.rates.push_back(static_cast<double>(b) / n);
        if (out.high.shots) out.high.mean = high_sum / static_cast<double>(out.high.shots);
        if (out.low.shots) out.low.mean = low_sum / static_cast<double>(out.low.shots);

        out.threshold = valley_threshold(counts);
        double th_hi = 0.0, th_lo = 0.0;
        for (int c : counts) {
            if (c > out.threshold) {
                ++out.high_by_threshold.shots;
                th_hi += c;
            } else {
                ++out.low_by_threshold.shots;
                th_lo += c;
            }
        }
        if (out.high_by_threshold.shots)
            out.high_by_threshold.mean = th_hi / static_cast<double>(out.high_by_threshold.shots);
        if (out.low_by_threshold.shots)
            out.low_by_threshold.mean = th_lo / static_cast<double>(out.low_by_threshold.shots);
        hist.columns.push_back(std::move(out));
    }
    return hist;
}

namespace {

double component_ratio(const ComponentStats& high, const ComponentStats& low) {
    if (high.shots == 0 || low.shots == 0)
        throw EstimationError("extinction factor: a component has no shots");
    if (!(low.mean > 0.0)) throw EstimationError("extinction factor: low component mean is zero");
    return high.mean / low.mean;
}

}  // namespace

double extinction_factor(const HistogramColumn& column) {
    return component_ratio(column.high, column.low);
}

double extinction_factor_by_threshold(const HistogramColumn& column) {
    return component_ratio(column.high_by_threshold, column.low_by_threshold);
}

GainEstimate gain(std::span<const ShotRecord> records, const BootstrapOptions& options) {
    using Key = std::tuple<bool, int, int>;  // (blocked, intracavity, outside)
    const auto tally = make_tally<Key>(records, [](const ShotRecord& r) {
        return Key{r.n_stored > 0, r.source_transmitted_intracavity, r.source_transmitted_outside};
    });

    struct Diff {
        double source_strength;
        double intracavity;
        double outside;
    };
    auto evaluate = [&](std::span<const std::uint64_t> w) {
        double n0 = 0, n1 = 0, in0 = 0, in1 = 0, out0 = 0, out1 = 0;
        for (std::size_t i = 0; i < tally.keys.size(); ++i) {
            const auto& [blocked, in, out] = tally.keys[i];
            const auto c = static_cast<double>(w[i]);
            if (blocked) {
                n1 += c;
                in1 += c * in;
                out1 += c * out;
            } else {
                n0 += c;
                in0 += c * in;
                out0 += c * out;
            }
        }
        if (n0 == 0.0 || n1 == 0.0) throw EstimationError("gain: a component has zero shots");
        return Diff{in0 / n0, in0 / n0 - in1 / n1, out0 / n0 - out1 / n1};
    };

    const Diff value = evaluate(tally.counts);
    Rng rng(options.seed, kGainStream);
    std::vector<double> reps_in, reps_out;
    for (std::size_t b = 0; b < options.resamples; ++b) {
        const auto w = multinomial_resample(tally.counts, rng);
        try {
            const Diff d = evaluate(w);
            reps_in.push_back(d.intracavity);
            reps_out.push_back(d.outside);
        } catch (const EstimationError&) {
        }
    }
    GainEstimate g;
    g.source_strength = value.source_strength;
    g.intracavity = summarize_replicates(value.intracavity, std::move(reps_in), options.confidence);
    g.outside = summarize_replicates(value.outside, std::move(reps_out), options.confidence);
    return g;
}

Estimate gain_by_threshold(std::span<const ShotRecord> records, double threshold,
                           double source_path_efficiency, const BootstrapOptions& options) {
    if (!(source_path_efficiency > 0.0))
        throw EstimationError("gain: source path efficiency must be > 0");
    const auto tally =
        make_tally<int>(records, [](const ShotRecord& r) { return r.detected_source; });
    auto evaluate = [&](std::span<const std::uint64_t> w) {
        double n_hi = 0, n_lo = 0, s_hi = 0, s_lo = 0;
        for (std::size_t i = 0; i < tally.keys.size(); ++i) {
            const auto c = static_cast<double>(w[i]);
            if (tally.keys[i] > threshold) {
                n_hi += c;
                s_hi += c * tally.keys[i];
            } else {
                n_lo += c;
                s_lo += c * tally.keys[i];
            }
        }
        if (n_hi == 0.0 || n_lo == 0.0) throw EstimationError("gain: a component has zero shots");
        return (s_hi / n_hi - s_lo / n_lo) / source_path_efficiency;
    };
    const double value = evaluate(tally.counts);
    Rng rng(options.seed, kThresholdGainStream);
    std::vector<double> reps;
    for (std::size_t b = 0; b < options.resamples; ++b) {
        try {
            reps.push_back(evaluate(multinomial_resample(tally.counts, rng)));
        } catch (const EstimationError&) {
        }
    }
    return summarize_replicates(value, std::move(reps), options.confidence);
}

double predicted_gain_slope(double mean_stored, const CooperativityModel& coop,
                            const CavityParams& cavity, const AtomParams& atoms, double detuning,
                            Rng& rng, std::size_t samples) {
    if (!(mean_stored > 0.0)) throw EstimationError("gain slope: mean stored must be > 0");
    const double atom_detuning = detuning - atoms.atom_cavity_detuning;
    const double empty = cavity_transmission_spectrum(detuning, {}, cavity, atoms);
    const bool deterministic = coop.mode == CooperativityMode::effective || !coop.standing_wave;
    const double p0 = std::exp(-mean_stored);

    // E[T | n] weighted by Poisson(n) / (1 - p0), truncated when the tail is negligible.
    double expected_t = 0.0;
    double pn = p0;
    std::vector<Blocker> blockers;
    for (int n = 1; n < 10'000; ++n) {
        pn *= mean_stored / n;
        double t_n = 0.0;
        if (deterministic) {
            const double eta = sample_coupling(coop, rng).transmission;
            blockers.assign(static_cast<std::size_t>(n), Blocker{eta, atom_detuning});
            t_n = cavity_transmission_spectrum(detuning, blockers, cavity, atoms);
        } else {
            const std::size_t m = std::max<std::size_t>(1, samples / static_cast<std::size_t>(n));
            for (std::size_t s = 0; s < m; ++s) {
                blockers.clear();
                for (int j = 0; j < n; ++j)
                    blockers.push_back({sample_coupling(coop, rng).transmission, atom_detuning});
                t_n += cavity_transmission_spectrum(detuning, blockers, cavity, atoms);
            }
            t_n /= static_cast<double>(m);
        }
        expected_t += pn * t_n;
        if (n > mean_stored && pn < 1e-14) break;
    }
    expected_t /= (1.0 - p0);
    return empty - expected_t;
}

RetrievalCurve retrieval_curve(std::span<const RetrievalPoint> points, double outcoupling,
                               RetrievalNormalization normalization,
                               const BootstrapOptions& options) {
    if (points.size() < 3) throw EstimationError("retrieval curve: need at least 3 points");
    std::size_t ref = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].source_strength == 0.0) {
            ref = i;
            break;
        }
    }
    if (ref == points.size()) throw EstimationError("retrieval curve: no zero-source point");

    // Per point: tally of (stored, retrieved) over the eligible shots.
    using Key = std::pair<int, int>;
    std::vector<Tally<Key>> tallies;
    for (const auto& p : points) {
        std::vector<Key> keys;
        for (const auto& r : p.records) {
            if (normalization == RetrievalNormalization::single_excitation && r.n_stored != 1)
                continue;
            keys.emplace_back(r.n_stored, r.n_retrieved);
        }
        if (keys.empty()) throw EstimationError("retrieval curve: point without eligible shots");
        tallies.push_back(make_tally<Key>(keys, [](const Key& k) { return k; }));
    }

    auto fraction = [](const Tally<Key>& t, std::span<const std::uint64_t> w) {
        double stored = 0.0, retrieved = 0.0;
        for (std::size_t i = 0; i < t.keys.size(); ++i) {
            stored += static_cast<double>(w[i]) * t.keys[i].first;
            retrieved += static_cast<double>(w[i]) * t.keys[i].second;
        }
        if (stored == 0.0) throw EstimationError("retrieval curve: no stored excitations");
        return retrieved / stored;
    };

    std::vector<double> xs;
    for (const auto& p : points) xs.push_back(p.source_strength);

    auto normalized = [&](const std::vector<std::vector<std::uint64_t>>& weights) {
        std::vector<double> ys(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) ys[i] = fraction(tallies[i], weights[i]);
        const double r0 = ys[ref];
        if (!(r0 > 0.0)) throw EstimationError("retrieval curve: zero retrieval at zero source");
        for (double& y : ys) y /= r0;
        return std::make_pair(ys, r0);
    };

    std::vector<std::vector<std::uint64_t>> base;
    for (const auto& t : tallies) base.push_back(t.counts);
    const auto [ys, r0] = normalized(base);

    ExponentialFit fit;
    try {
        fit = fit_exponential(xs, ys);
    } catch (const EstimationError& e) {
        throw EstimationError(std::string("retrieval curve fit failed: ") + e.what());
    }

    Rng rng(options.seed, kRetrievalStream);
    std::vector<double> reps;
    std::vector<std::vector<double>> ys_reps(points.size());
    for (std::size_t b = 0; b < options.resamples; ++b) {
        std::vector<std::vector<std::uint64_t>> w;
        for (const auto& t : tallies) w.push_back(multinomial_resample(t.counts, rng));
        try {
            const auto [yb, rb] = normalized(w);
            for (std::size_t i = 0; i < yb.size(); ++i) ys_reps[i].push_back(yb[i]);
            reps.push_back(fit_exponential(xs, yb).decay);
        } catch (const EstimationError&) {
        }
    }

    RetrievalCurve curve;
    curve.source_strengths = xs;
    curve.fractions = ys;
    for (auto& r : ys_reps) {
        curve.fraction_sigma.push_back(summarize_replicates(0.0, std::move(r), 0.68).sigma);
    }
    curve.raw_reference = r0;
    curve.amplitude = fit.amplitude;
    curve.residuals = fit.residuals;
    curve.m_s0_intracavity = summarize_replicates(fit.decay, reps, options.confidence);
    for (double& r : reps) r *= outcoupling;
    curve.m_s0_outside = summarize_replicates(fit.decay * outcoupling, std::move(reps),
                                              options.confidence);
    return curve;
}

G2Result g2_cross(std::span<const int> gate_counts, std::span<const int> source_counts,
                  const Backgrounds& backgrounds, const BootstrapOptions& options) {
    if (gate_counts.size() != source_counts.size())
        throw EstimationError("g2: gate and source counts must be paired");
    if (gate_counts.empty()) throw EstimationError("g2: no shots");

    using Key = std::pair<int, int>;
    std::vector<Key> pairs(gate_counts.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {gate_counts[i], source_counts[i]};
    const auto tally = make_tally<Key>(pairs, [](const Key& k) { return k; });

    struct Values {
        double raw, corrected, mg, ms;
    };
    auto evaluate = [&](std::span<const std::uint64_t> w) {
        double n = 0, sg = 0, ss = 0, sgs = 0;
        for (std::size_t i = 0; i < tally.keys.size(); ++i) {
            const auto c = static_cast<double>(w[i]);
            const auto [g, s] = tally.keys[i];
            n += c;
            sg += c * g;
            ss += c * s;
            sgs += c * g * s;
        }
        const double mg = sg / n, ms = ss / n, mgs = sgs / n;
        if (mg == 0.0 || ms == 0.0) throw EstimationError("g2: zero mean count in a channel");
        const double dg = backgrounds.gate, ds = backgrounds.source;
        const double denom = (mg - dg) * (ms - ds);
        if (!(denom > 0.0)) throw EstimationError("g2: backgrounds exceed mean counts");
        const double corrected = (mgs - mg * ds - dg * ms + dg * ds) / denom;
        return Values{mgs / (mg * ms), corrected, mg, ms};
    };

    const Values value = evaluate(tally.counts);
    Rng rng(options.seed, kG2Stream);
    std::vector<double> raw, corr;
    for (std::size_t b = 0; b < options.resamples; ++b) {
        try {
            const Values v = evaluate(multinomial_resample(tally.counts, rng));
            raw.push_back(v.raw);
            corr.push_back(v.corrected);
        } catch (const EstimationError&) {
        }
    }
    G2Result out;
    out.raw = summarize_replicates(value.raw, std::move(raw), options.confidence);
    out.corrected = summarize_replicates(value.corrected, std::move(corr), options.confidence);
    out.mean_gate = value.mg;
    out.mean_source = value.ms;
    return out;
}

}  // namespace spt
