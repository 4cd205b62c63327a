// spt: command-line front end for the single-photon transistor simulator.
//
//   spt run --preset fig3 --shots 100000 --seed 7 --out runs/fig3
//   spt run --config my.cfg --out runs/custom
//   spt compare runs/fig3/summary.json [--reference bands.json]
//   spt config [--preset fig3] [--config my.cfg]
//   spt presets
//
// Exit status: 0 success, 1 acceptance failure, 2 usage, config or I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "spt/config.hpp"
#include "spt/error.hpp"
#include "spt/presets.hpp"
#include "spt/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kAcceptanceFailure = 1;
constexpr int kUsageError = 2;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

spt::ExperimentPreset resolve_preset(const std::string& preset, const std::string& config) {
    const spt::RunConfig base = config.empty() ? spt::default_run_config() : spt::load_config(config);
    const auto kind = preset.empty() ? spt::PresetKind::custom : spt::parse_preset_name(preset);
    return spt::make_preset(kind, base);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic simulator of a cavity-QED single-photon transistor"};
    app.set_version_flag("--version", std::string(spt::artifact_version()));
    app.require_subcommand(1);

    std::string preset, config, out;
    std::uint64_t shots = 0;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "Run a preset or a config file and write artifacts");
    run->add_option("--preset", preset, "fig2, fig3, fig4ab, fig4e, g2 or custom")
        ->check(CLI::IsMember(std::vector<std::string>(spt::preset_names().begin(),
                                                       spt::preset_names().end())));
    run->add_option("--config", config, "Config file; the preset is layered on top")
        ->check(CLI::ExistingFile);
    run->add_option("--shots", shots, "Shots per sweep point (default: preset value)")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Master seed (default: [run] seed of the config)");
    run->add_option("--out", out, "Output directory; without it the summary goes to stdout");
    run->add_option("--threads", threads, "Worker threads, 0 = all cores; results do not change");

    std::string summary_path, reference_path;
    auto* compare = app.add_subcommand("compare", "Check a summary against reference bands");
    compare->add_option("summary", summary_path, "summary.json from a run")->required();
    compare->add_option("--reference", reference_path,
                        "Reference JSON; default is the built-in table")
        ->check(CLI::ExistingFile);

    auto* show = app.add_subcommand("config", "Print the resolved config of a preset");
    show->add_option("--preset", preset, "Preset name");
    show->add_option("--config", config, "Config file")->check(CLI::ExistingFile);

    auto* list = app.add_subcommand("presets", "List preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*list) {
            for (auto name : spt::preset_names()) std::cout << name << '\n';
            return kOk;
        }
        if (*show) {
            std::cout << spt::write_config(resolve_preset(preset, config).base);
            return kOk;
        }
        if (*compare) {
            const auto reference = reference_path.empty()
                                       ? spt::builtin_reference()
                                       : spt::parse_reference(read_file(reference_path));
            const auto report =
                spt::compare_report(read_file(summary_path), reference, !reference_path.empty());
            std::cout << report.text();
            return report.passed() ? kOk : kAcceptanceFailure;
        }

        const auto p = resolve_preset(preset, config);
        spt::RunOptions options;
        options.shots = shots;
        options.threads = threads;
        if (seed) {
            options.seed = *seed;
            options.seed_given = true;
        }
        const auto result = spt::run_preset(p, options);
        if (out.empty()) {
            std::cout << spt::summary_json(result);
        } else {
            spt::write_artifacts(result, out);
            std::cout << "wrote " << out << '\n';
        }
        return kOk;
    } catch (const spt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const spt::InvariantError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
    } catch (const spt::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kUsageError;
}
