#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spt/error.hpp"
#include "spt/qed.hpp"

using namespace spt;

namespace {

CavityParams cavity() { return {2.0 * std::numbers::pi * 0.5e6, 66e-6, 34e-6}; }
AtomParams atoms() { return {2.0 * std::numbers::pi * 5.234e6, 2.1e-6, 0.9, 0.0}; }

}  // namespace

TEST_SUITE("qed") {
    TEST_CASE("extinction closed form") {
        CHECK(extinction(1.5) == doctest::Approx(0.16).epsilon(1e-15));
        CHECK(extinction(0.0) == 1.0);
        CHECK(extinction(3.3) == doctest::Approx(1.0 / (4.3 * 4.3)));
        CHECK(extinction(1e6) < 1e-11);
        CHECK_THROWS_AS(extinction(-0.1), std::domain_error);
        CHECK_THROWS_AS(extinction(NAN), std::domain_error);
    }

    TEST_CASE("free-space scattering closed form") {
        CHECK(free_space_scatter_prob(0.0) == 0.0);
        CHECK(free_space_scatter_prob(1.0) == doctest::Approx(0.5));
        CHECK(free_space_scatter_prob(3.3) == doctest::Approx(6.6 / 18.49));
        // 1/p is the mean number of photons to the first scatter.
        CHECK(1.0 / free_space_scatter_prob(3.3) == doctest::Approx(2.80).epsilon(0.002));
        CHECK_THROWS_AS(free_space_scatter_prob(-1.0), std::domain_error);
    }

    TEST_CASE("outcoupling") { CHECK(cavity().outcoupling() == doctest::Approx(0.66)); }

    TEST_CASE("empty cavity lineshape") {
        const auto c = cavity();
        const auto a = atoms();
        CHECK(cavity_transmission_spectrum(0.0, {}, c, a) == 1.0);
        CHECK(cavity_transmission_spectrum(c.kappa / 2, {}, c, a) == doctest::Approx(0.5));
        CHECK(free_space_scatter_spectrum(0.0, {}, c, a) == 0.0);
    }

    TEST_CASE("empty cavity FWHM equals kappa within 1%") {
        const auto c = cavity();
        const auto a = atoms();
        // Scan a grid and locate the half-maximum crossings by bisection.
        auto half = [&](double lo, double hi) {
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                const bool above = cavity_transmission_spectrum(mid, {}, c, a) > 0.5;
                (above ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
        const double right = half(0.0, 5 * c.kappa);
        const double left = -half(0.0, 5 * c.kappa);
        CHECK((right - left) / c.kappa == doctest::Approx(1.0).epsilon(0.01));
    }

    TEST_CASE("resonant spectra reduce to closed forms") {
        const auto c = cavity();
        const auto a = atoms();
        for (double eta : {0.3, 1.5, 3.3, 8.6}) {
            const std::vector<Blocker> b{{eta, 0.0}};
            CHECK(cavity_transmission_spectrum(0.0, b, c, a) == doctest::Approx(extinction(eta)));
            CHECK(free_space_scatter_spectrum(0.0, b, c, a) ==
                  doctest::Approx(free_space_scatter_prob(eta)));
        }
        const std::vector<Blocker> two{{1.0, 0.0}, {0.5, 0.0}};
        CHECK(cavity_transmission_spectrum(0.0, two, c, a) == doctest::Approx(extinction(1.5)));
    }

    TEST_CASE("transmission plus scattering never exceeds one") {
        const auto c = cavity();
        const auto a = atoms();
        for (double eta : {0.5, 2.0, 8.6}) {
            for (double d = -3.0; d <= 3.0; d += 0.25) {
                const double delta = d * c.kappa;
                const std::vector<Blocker> b{{eta, delta}};
                const double t = cavity_transmission_spectrum(delta, b, c, a);
                const double s = free_space_scatter_spectrum(delta, b, c, a);
                CHECK(t >= 0.0);
                CHECK(s >= 0.0);
                CHECK(t + s <= 1.0 + 1e-12);
            }
        }
    }

    TEST_CASE("scatter weight follows the atomic Lorentzian") {
        const auto a = atoms();
        CHECK(scatter_weight({2.0, 0.0}, a) == 2.0);
        CHECK(scatter_weight({2.0, a.gamma / 2}, a) == doctest::Approx(1.0));
    }

    TEST_CASE("sampled cooperativity") {
        CooperativityModel m;
        m.mode = CooperativityMode::sampled;
        m.eta0 = 8.6;
        m.geometric_weight = 0.65;
        m.standing_wave = false;
        Rng r(1, 0);
        CHECK(sample_cooperativity(m, r) == doctest::Approx(8.6 * 0.65));
        m.standing_wave = true;
        double s = 0;
        const int n = 200'000;
        for (int i = 0; i < n; ++i) {
            const double eta = sample_cooperativity(m, r);
            REQUIRE(eta >= 0.0);
            REQUIRE(eta <= 8.6 * 0.65 + 1e-12);
            s += eta;
        }
        // <cos^2> = 1/2
        CHECK(s / n == doctest::Approx(8.6 * 0.65 / 2).epsilon(0.01));
        const auto cpl = sample_coupling(m, r);
        CHECK(cpl.transmission == cpl.scattering);
    }

    TEST_CASE("effective mode carries the pair") {
        CooperativityModel m;
        m.mode = CooperativityMode::effective;
        m.eta_bar_t = 1.5;
        m.eta_bar_a = 3.3;
        Rng r(1, 0);
        const auto c = sample_coupling(m, r);
        CHECK(c.transmission == 1.5);
        CHECK(c.scattering == 3.3);
    }

    TEST_CASE("effective cooperativities match arcsine-law averages") {
        // For eta = a cos^2(u), u uniform: <(1+eta)^-2> = (2+a) / (2 (1+a)^1.5).
        CooperativityModel m;
        m.eta0 = 8.6;
        m.geometric_weight = 0.65;
        const double a = 8.6 * 0.65;
        Rng r(2, 0);
        const auto e = effective_cooperativities(m, 400'000, r);
        CHECK(e.mean == doctest::Approx(a / 2).epsilon(0.01));
        const double t = (2 + a) / (2 * std::pow(1 + a, 1.5));
        CHECK(extinction(e.transmission) == doctest::Approx(t).epsilon(0.01));
        CHECK(e.scattering >= 1.0);
        CHECK_THROWS_AS(effective_cooperativities(m, 9'999, r), PrecisionError);
    }

    TEST_CASE("matched cooperativities invert the closed forms") {
        CHECK(extinction_matched_cooperativity(0.16) == doctest::Approx(1.5));
        CHECK(scatter_matched_cooperativity(free_space_scatter_prob(3.3)) == doctest::Approx(3.3));
        CHECK(scatter_matched_cooperativity(0.5) == doctest::Approx(1.0));
        CHECK(std::isinf(scatter_matched_cooperativity(0.0)));
        CHECK_THROWS_AS(scatter_matched_cooperativity(0.6), std::domain_error);
        CHECK_THROWS_AS(extinction_matched_cooperativity(0.0), std::domain_error);
    }

    TEST_CASE("validation names the field") {
        auto c = cavity();
        c.kappa = -1.0;
        try {
            validate(c);
            FAIL("expected InvariantError");
        } catch (const InvariantError& e) {
            CHECK(e.field() == "CavityParams.kappa");
        }
        auto a = atoms();
        a.tau_spinwave = 0.0;
        CHECK_THROWS_AS(validate(a), InvariantError);
        CooperativityModel m;
        m.geometric_weight = 1.5;
        CHECK_THROWS_WITH_AS(validate(m), doctest::Contains("CooperativityModel.geometric_weight"),
                             InvariantError);
    }
}
