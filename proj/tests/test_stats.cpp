#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spt/config.hpp"
#include "spt/error.hpp"
#include "spt/stats.hpp"

using namespace spt;

namespace {

RunConfig ideal(double eta) {
    RunConfig c = default_run_config();
    c.coop.mode = CooperativityMode::sampled;
    c.coop.standing_wave = false;
    c.coop.eta0 = eta;
    c.coop.geometric_weight = 1.0;
    c.pumping = PumpingModel{0.0, 1.0};
    c.detection = DetectionChain{1.0, 1.0, 0.0, 0.0, 1e-6};
    return c;
}

RunConfig stored(RunConfig c, double mean) {
    c.gate = GatePulse{mean, 1.0, 1.0};
    return c;
}

// Poisson(mean)-weighted average of extinction(n * eta) over n >= 1.
double blocked_transmission(double mean, double eta) {
    double s = 0.0, pn = std::exp(-mean);
    for (int n = 1; n < 200; ++n) {
        pn *= mean / n;
        s += pn * extinction(n * eta);
    }
    return s / (1.0 - std::exp(-mean));
}

ShotRecord record(int n_stored, int detected) {
    ShotRecord r;
    r.n_stored = n_stored;
    r.detected_source = detected;
    r.source_transmitted_intracavity = detected;
    r.source_transmitted_outside = detected;
    return r;
}

}  // namespace

TEST_SUITE("stats") {
    TEST_CASE("average_spectrum basics") {
        const std::vector<ShotRecord> same(10, record(0, 4));
        const std::vector<SweepColumn> cols{{0.0, same}};
        const auto s = average_spectrum(cols, 4.0, CountChannel::detected);
        CHECK(s.mean_transmission[0] == 1.0);
        CHECK(s.sem[0] == 0.0);
        const std::vector<SweepColumn> empty{{0.0, {}}};
        CHECK_THROWS_AS(average_spectrum(empty, 1.0, CountChannel::detected), EstimationError);
        const std::vector<ShotRecord> one(1, record(0, 4));
        const std::vector<SweepColumn> single{{0.0, one}};
        CHECK_THROWS_AS(average_spectrum(single, 1.0, CountChannel::detected), EstimationError);
        CHECK_THROWS_AS(average_spectrum(cols, 0.0, CountChannel::detected), EstimationError);
    }

    TEST_CASE("no-gate spectrum is the empty-cavity Lorentzian") {
        auto c = ideal(1.0);
        c.source.mean_source_photons = 40.0;
        c.n_shots = 4000;
        std::vector<std::vector<ShotRecord>> runs;
        std::vector<SweepColumn> cols;
        const std::vector<double> grid{-1.0, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 1.0};
        for (double d : grid) {
            c.source.detuning = mhz_to_angular(d);
            c.master_seed = static_cast<std::uint64_t>(100 + 10 * d);
            runs.push_back(run_experiment(c));
        }
        for (std::size_t i = 0; i < grid.size(); ++i) cols.push_back({mhz_to_angular(grid[i]), runs[i]});
        const auto s = average_spectrum(cols, 40.0, CountChannel::intracavity);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CAPTURE(grid[i]);
            const double t = cavity_transmission_spectrum(cols[i].detuning, {}, c.cavity, c.atoms);
            CHECK(std::abs(s.mean_transmission[i] - t) < 3.0 * s.sem[i]);
        }
    }

    TEST_CASE("spectra are nested in the stored mean") {
        auto base = default_run_config();
        base.source.mean_source_photons = 60.0;
        base.n_shots = 5000;
        double previous = 1e9;
        for (double ng : {0.0, 0.4, 1.4, 2.9}) {
            const auto recs = run_experiment(stored(base, ng));
            const double m = mean_count(recs, CountChannel::intracavity);
            CHECK(m < previous);
            previous = m;
        }
    }

    TEST_CASE("switching contrast") {
        auto c = ideal(1e6);
        c.source.mean_source_photons = 30.0;
        c.n_shots = 20'000;
        const auto off = run_experiment(c);
        BootstrapOptions o;
        const auto zero = switching_contrast(off, off, CountChannel::detected, o);
        CHECK(zero.value == 0.0);

        c.master_seed = 2;
        const auto on = run_experiment(stored(c, 0.4));
        const auto e = switching_contrast(on, off, CountChannel::detected, o);
        CHECK(std::abs(e.value - contrast_bound(0.4)) < 3.0 * e.sigma);
        CHECK(contrast_bound(0.4) == doctest::Approx(0.3297).epsilon(1e-4));
        CHECK(e.value <= contrast_bound(0.4) + 3.0 * e.sigma);

        const std::vector<ShotRecord> dark(10, record(0, 0));
        CHECK_THROWS_AS(switching_contrast(dark, dark, CountChannel::detected, o), EstimationError);
    }

    TEST_CASE("contrast never beats the coherent-state bound") {
        auto c = default_run_config();
        c.source.mean_source_photons = 60.0;
        c.n_shots = 10'000;
        const auto off = run_experiment(c);
        for (double ng : {0.4, 1.4, 2.9}) {
            c.master_seed = static_cast<std::uint64_t>(ng * 10);
            const auto on = run_experiment(stored(c, ng));
            const auto e = switching_contrast(on, off, CountChannel::detected, BootstrapOptions{});
            CHECK(e.value <= contrast_bound(ng) + 3.0 * e.sigma);
        }
    }

    TEST_CASE("histogram columns are normalized") {
        auto c = default_run_config();
        c.gate.mean_incident_photons = 0.5 / 0.15;
        c.source.mean_source_photons = 64.0;
        c.n_shots = 5000;
        const auto a = run_experiment(c);
        c.source.detuning = mhz_to_angular(0.3);
        const auto b = run_experiment(c);
        const std::vector<SweepColumn> cols{{0.0, a}, {c.source.detuning, b}};
        const auto h = build_histogram(cols, CountBinning{0, 30, 2});
        for (const auto& col : h.columns) {
            const double sum = std::accumulate(col.rates.begin(), col.rates.end(), 0.0);
            CHECK(std::abs(sum - 1.0) < 1e-9);
            CHECK(col.high.shots + col.low.shots == col.shots);
        }
    }

    TEST_CASE("histogram errors") {
        const std::vector<ShotRecord> few(999, record(0, 3));
        const std::vector<SweepColumn> cols{{0.0, few}};
        CHECK_THROWS_AS(build_histogram(cols, CountBinning{0, 10, 1}), EstimationError);
        const std::vector<ShotRecord> many(1000, record(0, 3));
        const std::vector<SweepColumn> ok{{0.0, many}};
        CHECK_THROWS_AS(build_histogram(ok, CountBinning{0, 10, 0}), EstimationError);
        CHECK_THROWS_AS(build_histogram(ok, CountBinning{5, 4, 1}), EstimationError);
        CHECK(CountBinning{0, 10, 1}.bin_of(50) == 10);
        CHECK(CountBinning{2, 10, 1}.bin_of(0) == 0);
    }

    TEST_CASE("gate off gives a single Poisson-like column") {
        auto c = ideal(1.0);
        c.source.mean_source_photons = 17.0;
        c.n_shots = 5000;
        const auto recs = run_experiment(c);
        const std::vector<SweepColumn> cols{{0.0, recs}};
        const auto h = build_histogram(cols, CountBinning{0, 60, 1}, CountChannel::intracavity);
        CHECK(h.columns[0].low.shots == 0);
        CHECK(h.columns[0].high.mean == doctest::Approx(17.0).epsilon(0.02));
        CHECK_THROWS_AS(extinction_factor(h.columns[0]), EstimationError);
    }

    TEST_CASE("low component follows the extinction of the stored excitations") {
        const double eta = 1.5, ng = 0.5;
        auto c = stored(ideal(eta), ng);
        c.source.mean_source_photons = 40.0;
        c.n_shots = 40'000;
        const auto recs = run_experiment(c);
        const std::vector<SweepColumn> cols{{0.0, recs}};
        const auto h = build_histogram(cols, CountBinning{0, 80, 1}, CountChannel::intracavity);
        const auto& col = h.columns[0];
        CHECK(col.low.mean / col.high.mean ==
              doctest::Approx(blocked_transmission(ng, eta)).epsilon(0.03));
    }

    TEST_CASE("valley threshold splits a bimodal sample") {
        std::vector<int> counts;
        Rng r(3, 0);
        for (int i = 0; i < 3000; ++i) counts.push_back(poisson(r, 17.0));
        for (int i = 0; i < 1000; ++i) counts.push_back(poisson(r, 1.5));
        const double t = valley_threshold(counts);
        CHECK(t > 3.0);
        CHECK(t < 11.0);
        CHECK(valley_threshold(std::vector<int>{4, 4, 4}) == 3.5);
        CHECK_THROWS_AS(valley_threshold(std::vector<int>{}), EstimationError);
    }

    TEST_CASE("gain with perfect blocking equals the source strength") {
        auto c = stored(ideal(1e6), 0.5);
        c.source.mean_source_photons = 50.0;
        c.n_shots = 20'000;
        const auto g = gain(run_experiment(c), BootstrapOptions{});
        CHECK(std::abs(g.intracavity.value - 50.0) < 3.0 * g.intracavity.sigma + 1e-9);
        const std::vector<ShotRecord> only_open(10, record(0, 5));
        CHECK_THROWS_AS(gain(only_open, BootstrapOptions{}), EstimationError);
    }

    TEST_CASE("gain from truth and from threshold agree for separated components") {
        auto c = default_run_config();
        c.coop.eta_bar_t = 2.35;
        c.gate.mean_incident_photons = 0.5 / 0.15;
        c.source.mean_source_photons = 64.0;
        c.n_shots = 50'000;
        const auto recs = run_experiment(c);
        std::vector<int> counts;
        for (const auto& r : recs) counts.push_back(r.detected_source);
        const double th = valley_threshold(counts);
        const auto truth = gain(recs, BootstrapOptions{});
        const auto obs = gain_by_threshold(recs, th, 0.4, BootstrapOptions{});
        // Outside-cavity units on both sides.
        const double tol = 3.0 * std::hypot(truth.outside.sigma, obs.sigma);
        CHECK(std::abs(truth.outside.value - obs.value) < tol);
        CHECK_THROWS_AS(gain_by_threshold(recs, th, 0.0, BootstrapOptions{}), EstimationError);
    }

    TEST_CASE("predicted gain slope") {
        const auto c = default_run_config();
        Rng r(1, 0);
        CooperativityModel opaque;
        opaque.mode = CooperativityMode::effective;
        opaque.eta_bar_t = 1e9;
        CHECK(predicted_gain_slope(0.4, opaque, c.cavity, c.atoms, 0.0, r) ==
              doctest::Approx(1.0).epsilon(1e-9));
        CHECK(predicted_gain_slope(0.4, c.coop, c.cavity, c.atoms, 0.0, r) ==
              doctest::Approx(1.0 - blocked_transmission(0.4, 1.5)).epsilon(1e-9));
        CHECK_THROWS_AS(predicted_gain_slope(0.0, c.coop, c.cavity, c.atoms, 0.0, r),
                        EstimationError);
    }

    TEST_CASE("retrieval curve: normalization and destruction constant") {
        auto c = default_run_config();
        c.retrieval_mode = true;
        c.timing = TimingSequence{0.0, 0.0, 1e-6, 0.0};
        c.gate = GatePulse{0.3, 1.0, 1.0};
        c.n_shots = 60'000;
        std::vector<std::vector<ShotRecord>> runs;
        const std::vector<double> grid{0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            c.source.mean_source_photons = grid[i];
            c.master_seed = 40 + i;
            runs.push_back(run_experiment(c));
        }
        std::vector<RetrievalPoint> pts;
        for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back({grid[i], runs[i]});
        BootstrapOptions o;
        o.resamples = 200;
        const auto curve = retrieval_curve(pts, 0.66, RetrievalNormalization::single_excitation, o);
        CHECK(curve.fractions[0] == 1.0);
        CHECK(curve.m_s0_intracavity.value == doctest::Approx(2.8).epsilon(0.036));
        CHECK(curve.m_s0_outside.value == doctest::Approx(0.66 * curve.m_s0_intracavity.value));
        CHECK(curve.residuals.size() == grid.size());

        const std::vector<RetrievalPoint> two(pts.begin(), pts.begin() + 2);
        CHECK_THROWS_AS(retrieval_curve(two, 0.66, RetrievalNormalization::single_excitation, o),
                        EstimationError);
        const std::vector<RetrievalPoint> no_zero(pts.begin() + 1, pts.end());
        CHECK_THROWS_AS(retrieval_curve(no_zero, 0.66, RetrievalNormalization::single_excitation, o),
                        EstimationError);
    }

    TEST_CASE("g2 of independent channels is one") {
        Rng r(5, 0);
        std::vector<int> g, s;
        for (int i = 0; i < 100'000; ++i) {
            g.push_back(poisson(r, 0.3));
            s.push_back(poisson(r, 0.5));
        }
        const auto res = g2_cross(g, s, Backgrounds{}, BootstrapOptions{});
        CHECK(std::abs(res.raw.value - 1.0) < 3.0 * res.raw.sigma);
        CHECK(res.corrected.value == doctest::Approx(res.raw.value));
    }

    TEST_CASE("g2 of shuffled pairs is one") {
        auto c = default_run_config();
        c.retrieval_mode = true;
        c.timing = TimingSequence{0.0, 0.0, 1e-6, 0.0};
        c.gate.mean_incident_photons = 10.0;
        c.gate.retrieval_efficiency = 1.0;
        c.source.mean_source_photons = 1.0;
        c.n_shots = 100'000;
        std::vector<int> g, s;
        for (const auto& rec : run_experiment(c)) {
            g.push_back(rec.detected_gate);
            s.push_back(rec.detected_source);
        }
        const auto correlated = g2_cross(g, s, Backgrounds{}, BootstrapOptions{});
        CHECK(correlated.raw.value < 0.9);
        // Pair every gate count with the source count of another shot.
        std::rotate(s.begin(), s.begin() + 1, s.end());
        const auto res = g2_cross(g, s, Backgrounds{}, BootstrapOptions{});
        CHECK(std::abs(res.raw.value - 1.0) < 3.0 * res.raw.sigma);
    }

    TEST_CASE("g2 with ideal detection approaches the extinction") {
        auto c = ideal(1.5);
        c.retrieval_mode = true;
        c.timing = TimingSequence{0.0, 0.0, 1e-6, 0.0};
        c.gate = GatePulse{0.05, 1.0, 1.0};
        c.source.mean_source_photons = 0.2;
        c.n_shots = 1'000'000;
        std::vector<int> g, s;
        for (const auto& rec : run_experiment(c)) {
            g.push_back(rec.detected_gate);
            s.push_back(rec.detected_source);
        }
        BootstrapOptions o;
        o.resamples = 200;
        const auto res = g2_cross(g, s, Backgrounds{}, o);
        CHECK(std::abs(res.corrected.value - 0.16) < 0.03);
    }

    TEST_CASE("g2 errors") {
        const std::vector<int> zeros(10, 0), ones(10, 1), short_one(9, 1);
        CHECK_THROWS_AS(g2_cross(zeros, ones, Backgrounds{}, BootstrapOptions{}), EstimationError);
        CHECK_THROWS_AS(g2_cross(ones, short_one, Backgrounds{}, BootstrapOptions{}),
                        EstimationError);
        CHECK_THROWS_AS(g2_cross(ones, ones, Backgrounds{2.0, 0.0}, BootstrapOptions{}),
                        EstimationError);
    }
}
