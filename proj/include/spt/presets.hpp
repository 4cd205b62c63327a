#pragma once

// Figure presets and the artifacts a run leaves on disk.
//
// A preset is a base RunConfig plus a sweep. run_preset executes every
// sweep point with its own derived seed, reduces the records to tables and
// a flat summary of observables, and write_artifacts stores
//
//   manifest.json  version, preset, seed, shots per point, sweep points and
//                  the resolved config text
//   points.csv     one row of shot summaries per sweep point
//   <table>.csv    preset-specific tables
//   summary.json   observable -> {value, err_low, err_high}
//
// Nothing in the output depends on the thread count, the locale or the
// wall clock, so identical inputs give byte-identical files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spt/bootstrap.hpp"
#include "spt/config.hpp"
#include "spt/engine.hpp"

namespace spt {

enum class PresetKind { fig2, fig3, fig4ab, fig4e, g2, custom };

std::string_view preset_name(PresetKind kind);

/// Throws std::invalid_argument for an unknown name.
PresetKind parse_preset_name(std::string_view name);

const std::vector<std::string_view>& preset_names();

/// Version recorded in manifests.
std::string_view artifact_version();

struct ExperimentPreset {
    PresetKind kind = PresetKind::custom;
    RunConfig base;  // n_shots is the per-point default
    std::string series_name;
    std::vector<double> series;  // fig2: stored means; fig4ab: source windows in us
    std::string axis_name;
    std::vector<double> grid;  // detunings in MHz or source strengths in photons
};

/// The preset's settings layered over `base`. Fields the preset does not
/// define keep their values from `base`.
ExperimentPreset make_preset(PresetKind kind, const RunConfig& base = default_run_config());

/// Mean intracavity source photons that place the no-gate, on-resonance
/// detected count at `detected`.
double calibrated_source_strength(const RunConfig& config, double detected);

struct PointSummary {
    std::size_t index = 0;
    double series = 0.0;
    double axis = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    double mean_stored = 0.0;
    double mean_attempted = 0.0;
    double mean_transmitted_intracavity = 0.0;
    double mean_transmitted_outside = 0.0;
    double mean_detected_source = 0.0;
    double collapsed_fraction = 0.0;
    double retrieved_fraction = 0.0;
    double mean_detected_gate = 0.0;
};

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct PresetResult {
    ExperimentPreset preset;
    std::uint64_t seed = 0;
    std::uint64_t shots_per_point = 0;
    std::vector<PointSummary> points;
    std::map<std::string, Estimate> summary;
    std::vector<CsvTable> tables;
};

struct RunOptions {
    std::uint64_t shots = 0;  // per point; 0 keeps the preset default
    std::uint64_t seed = 0;
    bool seed_given = false;  // otherwise the config seed is used
    unsigned threads = 0;     // wall time only
};

PresetResult run_preset(const ExperimentPreset& preset, const RunOptions& options);

std::string to_csv(const CsvTable& table);
std::string points_csv(const PresetResult& result);
std::string manifest_json(const PresetResult& result);
std::string summary_json(const PresetResult& result);

/// Creates `out_dir` if needed and writes every artifact through a
/// temporary file and a rename. Throws std::runtime_error on I/O failure.
void write_artifacts(const PresetResult& result, const std::filesystem::path& out_dir);

void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace spt
