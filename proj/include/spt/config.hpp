#pragma once

// Sectioned key = value configuration files.
//
//   [cavity]        kappa_mhz, mirror_transmission, mirror_loss
//   [atoms]         gamma_mhz, tau_us, optical_depth, atom_cavity_detuning_mhz
//   [cooperativity] mode (sampled|effective), eta0, standing_wave,
//                   geometric_weight, eta_bar_t, eta_bar_a
//   [timing]        storage_ramp_us, hold_before_source_us, source_window_us,
//                   hold_before_retrieval_us
//   [gate]          mean_incident_photons, storage_efficiency, retrieval_efficiency
//   [source]        mean_photons, detuning_mhz
//   [pumping]       hop_prob_per_scatter, eta_ratio_after_hop
//   [detection]     gate_path_efficiency, source_path_efficiency,
//                   gate_dark_rate_hz, source_dark_rate_hz, gate_window_us
//   [run]           shots, seed, retrieval_mode
//
// Frequencies are linear MHz and times are microseconds in the file; they
// are converted to rad/s and seconds once, at parse time. Keys that are not
// given keep their default value. '#' and ';' start comments.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "spt/engine.hpp"

namespace spt {

class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& origin, int line, const std::string& what)
        : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}

    int line() const noexcept { return line_; }

  private:
    int line_;
};

/// The documented defaults (see README).
RunConfig default_run_config();

double mhz_to_angular(double mhz);
double angular_to_mhz(double omega);

RunConfig parse_config(std::string_view text, const std::string& origin = "<config>");

/// Throws std::runtime_error when the file cannot be read, ConfigError on
/// syntax errors and InvariantError on invalid values.
RunConfig load_config(const std::filesystem::path& path);

/// Complete config text; parse_config(write_config(c)) == c.
std::string write_config(const RunConfig& config);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

}  // namespace spt
