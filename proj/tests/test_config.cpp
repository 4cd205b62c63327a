#include <doctest.h>

#include <charconv>
#include <cmath>
#include <locale>
#include <numbers>

#include "spt/config.hpp"
#include "spt/error.hpp"

using namespace spt;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

double random_in(Rng& r, double lo, double hi) { return lo + (hi - lo) * uniform01(r); }

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("empty and comment-only files give the defaults") {
        CHECK(parse_config("") == default_run_config());
        CHECK(parse_config("# nothing\n; still nothing\n\n[cavity]\n") == default_run_config());
    }

    TEST_CASE("documented defaults") {
        const auto c = default_run_config();
        CHECK(c.cavity.kappa == doctest::Approx(2 * std::numbers::pi * 0.5e6));
        CHECK(c.cavity.outcoupling() == doctest::Approx(0.66));
        CHECK(c.atoms.tau_spinwave == doctest::Approx(2.1e-6));
        CHECK(c.coop.mode == CooperativityMode::effective);
        CHECK(c.coop.eta_bar_t == 1.5);
        CHECK(c.coop.eta_bar_a == 3.3);
        CHECK(c.gate.storage_efficiency * std::exp(-1.0 / 2.1) * c.gate.retrieval_efficiency ==
              doctest::Approx(0.030));
        CHECK(c.pumping.hop_prob_per_scatter == 1.0);
        CHECK(c.timing.source_window == doctest::Approx(24e-6));
    }

    TEST_CASE("units are converted at parse time") {
        const auto c = parse_config(
            "[cavity]\nkappa_mhz = 1.25\n[atoms]\ntau_us = 3\n[source]\ndetuning_mhz = -0.2\n"
            "[detection]\ngate_window_us = 2\n");
        CHECK(c.cavity.kappa == doctest::Approx(2 * std::numbers::pi * 1.25e6));
        CHECK(c.atoms.tau_spinwave == doctest::Approx(3e-6));
        CHECK(c.source.detuning == doctest::Approx(-2 * std::numbers::pi * 0.2e6));
        CHECK(c.detection.gate_window == doctest::Approx(2e-6));
        CHECK(mhz_to_angular(angular_to_mhz(123.0)) == doctest::Approx(123.0));
    }

    TEST_CASE("values, flags and modes") {
        const auto c = parse_config(
            "[cooperativity]\nmode = sampled   # trailing comment\nstanding_wave = off\n"
            "[run]\nshots = 123\nseed = 18446744073709551615\nretrieval_mode = yes\n");
        CHECK(c.coop.mode == CooperativityMode::sampled);
        CHECK_FALSE(c.coop.standing_wave);
        CHECK(c.n_shots == 123);
        CHECK(c.master_seed == 18446744073709551615ull);
        CHECK(c.retrieval_mode);
    }

    TEST_CASE("invariant errors name the field") {
        try {
            parse_config("[cavity]\nkappa_mhz = -1\n");
            FAIL("expected InvariantError");
        } catch (const InvariantError& e) {
            CHECK(e.field() == "CavityParams.kappa");
        }
        CHECK_THROWS_WITH_AS(parse_config("[gate]\nstorage_efficiency = 2\n"),
                             doctest::Contains("GatePulse.storage_efficiency"), InvariantError);
        CHECK_THROWS_WITH_AS(parse_config("[run]\nshots = 0\n"),
                             doctest::Contains("RunConfig.n_shots"), InvariantError);
    }

    TEST_CASE("syntax errors carry line numbers") {
        CHECK(error_line("[cavity]\nkappa_mhz = 1\nbogus = 3\n") == 3);
        CHECK(error_line("\n\n[nowhere]\n") == 3);
        CHECK(error_line("[cavity]\nkappa_mhz = 1\nkappa_mhz = 2\n") == 3);
        CHECK(error_line("[cavity]\nkappa_mhz 1\n") == 2);
        CHECK(error_line("kappa_mhz = 1\n") == 1);
        CHECK(error_line("[cavity\n") == 1);
        CHECK(error_line("[cavity]\nkappa_mhz = fast\n") == 2);
        CHECK(error_line("[cavity]\nkappa_mhz = 1,5\n") == 2);
        CHECK(error_line("[cavity]\nkappa_mhz = inf\n") == 2);
        CHECK(error_line("[run]\nshots = -4\n") == 2);
        CHECK(error_line("[run]\nretrieval_mode = maybe\n") == 2);
        CHECK(error_line("[cooperativity]\nmode = magic\n") == 2);
        CHECK(error_line("[cavity]\nkappa = 1\n") == 2);  // unit missing from the key
        CHECK_THROWS_WITH(parse_config("[cavity]\nx = 1\n", "my.cfg"), doctest::Contains("my.cfg:2"));
    }

    TEST_CASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/dir/none.cfg"), std::runtime_error);
    }

    TEST_CASE("defaults round-trip exactly") {
        const auto c = default_run_config();
        CHECK(parse_config(write_config(c)) == c);
    }

    TEST_CASE("random configs round-trip exactly") {
        const auto us = [](double v) { return v * 1e-6; };
        Rng r(77, 0);
        for (int i = 0; i < 500; ++i) {
            RunConfig c = default_run_config();
            c.cavity.kappa = mhz_to_angular(random_in(r, 0.01, 20));
            c.cavity.mirror_transmission = random_in(r, 1e-6, 1e-3);
            c.cavity.mirror_loss = random_in(r, 0, 1e-3);
            c.atoms.gamma = mhz_to_angular(random_in(r, 0.1, 20));
            c.atoms.tau_spinwave = us(random_in(r, 0.1, 100));
            c.atoms.optical_depth = random_in(r, 0, 5);
            c.atoms.atom_cavity_detuning = mhz_to_angular(random_in(r, -2, 2));
            c.coop.mode = uniform01(r) < 0.5 ? CooperativityMode::sampled : CooperativityMode::effective;
            c.coop.eta0 = random_in(r, 0, 20);
            c.coop.standing_wave = uniform01(r) < 0.5;
            c.coop.geometric_weight = random_in(r, 0.01, 1);
            c.coop.eta_bar_t = random_in(r, 0, 10);
            c.coop.eta_bar_a = random_in(r, 0, 10);
            c.timing = TimingSequence{us(random_in(r, 0, 10)), us(random_in(r, 0, 10)),
                                      us(random_in(r, 0, 100)), us(random_in(r, 0, 10))};
            c.gate = GatePulse{random_in(r, 0, 5), uniform01(r), uniform01(r)};
            c.source = SourceDrive{random_in(r, 0, 5000), mhz_to_angular(random_in(r, -2, 2))};
            c.pumping = PumpingModel{uniform01(r), uniform01(r)};
            c.detection = DetectionChain{uniform01(r), uniform01(r), random_in(r, 0, 1e4),
                                         random_in(r, 0, 1e4), us(random_in(r, 0.1, 10))};
            c.n_shots = 1 + r() % 100000;
            c.master_seed = (std::uint64_t{r()} << 32) | r();
            c.retrieval_mode = uniform01(r) < 0.5;
            const auto text = write_config(c);
            CAPTURE(text);
            REQUIRE(parse_config(text) == c);
        }
    }

    TEST_CASE("arbitrary SI values round-trip to within an ulp") {
        Rng r(78, 0);
        for (int i = 0; i < 2000; ++i) {
            RunConfig c = default_run_config();
            c.atoms.gamma = random_in(r, 1e6, 1e8);
            c.atoms.tau_spinwave = random_in(r, 1e-7, 1e-4);
            c.source.detuning = random_in(r, -1e7, 1e7);
            const auto back = parse_config(write_config(c));
            CHECK(back.atoms.gamma == doctest::Approx(c.atoms.gamma).epsilon(1e-15));
            CHECK(back.atoms.tau_spinwave == doctest::Approx(c.atoms.tau_spinwave).epsilon(1e-15));
            CHECK(back.source.detuning == doctest::Approx(c.source.detuning).epsilon(1e-15));
        }
    }

    TEST_CASE("format_double is shortest round-trip and locale independent") {
        CHECK(format_double(0.0) == "0");
        CHECK(format_double(0.5) == "0.5");
        CHECK(format_double(-2.25) == "-2.25");
        try {
            std::locale::global(std::locale("de_DE.UTF-8"));
        } catch (const std::runtime_error&) {
        }
        CHECK(format_double(1.5) == "1.5");
        std::locale::global(std::locale::classic());
        for (double v : {0.1, 1.0 / 3.0, 6.02e23, 1e-300}) {
            double back = 0;
            const auto s = format_double(v);
            std::from_chars(s.data(), s.data() + s.size(), back);
            CHECK(back == v);
        }
    }
}
