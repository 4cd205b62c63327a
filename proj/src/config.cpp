#include "spt/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "spt/error.hpp"

namespace spt {

namespace {

constexpr double kMhz = 2.0 * std::numbers::pi * 1e6;
constexpr double kMicro = 1e-6;

enum class Kind { real, count, flag, mode };

struct Field {
    const char* section;
    const char* key;
    Kind kind;
    double scale;  // file value * scale = internal value (real fields only)
    double* (*real)(RunConfig&);
    std::uint64_t* (*count)(RunConfig&);
    bool* (*flag)(RunConfig&);
};

constexpr Field real_field(const char* s, const char* k, double scale, double* (*f)(RunConfig&)) {
    return {s, k, Kind::real, scale, f, nullptr, nullptr};
}

// Declaration order is also the order of write_config.
const std::array kFields = {
    real_field("cavity", "kappa_mhz", kMhz, [](RunConfig& c) { return &c.cavity.kappa; }),
    real_field("cavity", "mirror_transmission", 1.0,
               [](RunConfig& c) { return &c.cavity.mirror_transmission; }),
    real_field("cavity", "mirror_loss", 1.0, [](RunConfig& c) { return &c.cavity.mirror_loss; }),
    real_field("atoms", "gamma_mhz", kMhz, [](RunConfig& c) { return &c.atoms.gamma; }),
    real_field("atoms", "tau_us", kMicro, [](RunConfig& c) { return &c.atoms.tau_spinwave; }),
    real_field("atoms", "optical_depth", 1.0, [](RunConfig& c) { return &c.atoms.optical_depth; }),
    real_field("atoms", "atom_cavity_detuning_mhz", kMhz,
               [](RunConfig& c) { return &c.atoms.atom_cavity_detuning; }),
    Field{"cooperativity", "mode", Kind::mode, 1.0, nullptr, nullptr, nullptr},
    real_field("cooperativity", "eta0", 1.0, [](RunConfig& c) { return &c.coop.eta0; }),
    Field{"cooperativity", "standing_wave", Kind::flag, 1.0, nullptr, nullptr,
          [](RunConfig& c) { return &c.coop.standing_wave; }},
    real_field("cooperativity", "geometric_weight", 1.0,
               [](RunConfig& c) { return &c.coop.geometric_weight; }),
    real_field("cooperativity", "eta_bar_t", 1.0, [](RunConfig& c) { return &c.coop.eta_bar_t; }),
    real_field("cooperativity", "eta_bar_a", 1.0, [](RunConfig& c) { return &c.coop.eta_bar_a; }),
    real_field("timing", "storage_ramp_us", kMicro,
               [](RunConfig& c) { return &c.timing.storage_ramp; }),
    real_field("timing", "hold_before_source_us", kMicro,
               [](RunConfig& c) { return &c.timing.hold_before_source; }),
    real_field("timing", "source_window_us", kMicro,
               [](RunConfig& c) { return &c.timing.source_window; }),
    real_field("timing", "hold_before_retrieval_us", kMicro,
               [](RunConfig& c) { return &c.timing.hold_before_retrieval; }),
    real_field("gate", "mean_incident_photons", 1.0,
               [](RunConfig& c) { return &c.gate.mean_incident_photons; }),
    real_field("gate", "storage_efficiency", 1.0,
               [](RunConfig& c) { return &c.gate.storage_efficiency; }),
    real_field("gate", "retrieval_efficiency", 1.0,
               [](RunConfig& c) { return &c.gate.retrieval_efficiency; }),
    real_field("source", "mean_photons", 1.0,
               [](RunConfig& c) { return &c.source.mean_source_photons; }),
    real_field("source", "detuning_mhz", kMhz, [](RunConfig& c) { return &c.source.detuning; }),
    real_field("pumping", "hop_prob_per_scatter", 1.0,
               [](RunConfig& c) { return &c.pumping.hop_prob_per_scatter; }),
    real_field("pumping", "eta_ratio_after_hop", 1.0,
               [](RunConfig& c) { return &c.pumping.eta_ratio_after_hop; }),
    real_field("detection", "gate_path_efficiency", 1.0,
               [](RunConfig& c) { return &c.detection.gate_path_efficiency; }),
    real_field("detection", "source_path_efficiency", 1.0,
               [](RunConfig& c) { return &c.detection.source_path_efficiency; }),
    real_field("detection", "gate_dark_rate_hz", 1.0,
               [](RunConfig& c) { return &c.detection.gate_dark_rate; }),
    real_field("detection", "source_dark_rate_hz", 1.0,
               [](RunConfig& c) { return &c.detection.source_dark_rate; }),
    real_field("detection", "gate_window_us", kMicro,
               [](RunConfig& c) { return &c.detection.gate_window; }),
    Field{"run", "shots", Kind::count, 1.0, nullptr, [](RunConfig& c) { return &c.n_shots; },
          nullptr},
    Field{"run", "seed", Kind::count, 1.0, nullptr, [](RunConfig& c) { return &c.master_seed; },
          nullptr},
    Field{"run", "retrieval_mode", Kind::flag, 1.0, nullptr, nullptr,
          [](RunConfig& c) { return &c.retrieval_mode; }},
};

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool parse_real(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

bool parse_count(std::string_view s, std::uint64_t& out) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

bool parse_flag(std::string_view s, bool& out) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") {
        out = true;
        return true;
    }
    if (s == "false" || s == "no" || s == "off" || s == "0") {
        out = false;
        return true;
    }
    return false;
}

const Field* find_field(std::string_view section, std::string_view key) {
    for (const auto& f : kFields) {
        if (section == f.section && key == f.key) return &f;
    }
    return nullptr;
}

bool known_section(std::string_view section) {
    for (const auto& f : kFields) {
        if (section == f.section) return true;
    }
    return false;
}

// Decimal text t with parse(t) * scale == value, when one exists within a
// few ulps of value / scale.
std::string format_scaled(double value, double scale) {
    if (scale == 1.0) return format_double(value);
    const double base = value / scale;
    double up = base;
    double down = base;
    for (int step = 0; step < 16; ++step) {
        for (double c : {up, down}) {
            if (c * scale == value) return format_double(c);
        }
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
    }
    return format_double(base);
}

}  // namespace

double mhz_to_angular(double mhz) { return mhz * kMhz; }
double angular_to_mhz(double omega) { return omega / kMhz; }

std::string format_double(double value) {
    if (value == 0.0) return "0";
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

RunConfig default_run_config() {
    RunConfig c;
    c.cavity.kappa = mhz_to_angular(0.5);
    c.cavity.mirror_transmission = 66e-6;
    c.cavity.mirror_loss = 34e-6;

    c.atoms.gamma = mhz_to_angular(5.234);
    c.atoms.tau_spinwave = 2.1e-6;
    c.atoms.optical_depth = 0.9;
    c.atoms.atom_cavity_detuning = 0.0;

    c.coop.mode = CooperativityMode::effective;
    c.coop.eta0 = 8.6;
    c.coop.standing_wave = true;
    c.coop.geometric_weight = 0.65;
    c.coop.eta_bar_t = 1.5;
    c.coop.eta_bar_a = 3.3;

    c.timing.source_window = 24e-6;

    c.gate.mean_incident_photons = 0.0;
    c.gate.storage_efficiency = 0.15;
    // 0.15 * exp(-1/2.1) * r = 0.030 combined storage and retrieval after 1 us.
    c.gate.retrieval_efficiency = 0.03 / (0.15 * std::exp(-1.0 / 2.1));

    c.source.mean_source_photons = 0.0;

    c.pumping.hop_prob_per_scatter = 1.0;
    c.pumping.eta_ratio_after_hop = 0.992;

    c.detection.gate_path_efficiency = 0.5;
    c.detection.source_path_efficiency = 0.4;
    c.detection.gate_dark_rate = 1400.0;
    c.detection.source_dark_rate = 2400.0;
    c.detection.gate_window = 1e-6;

    c.n_shots = 10'000;
    c.master_seed = 1;
    c.retrieval_mode = false;
    return c;
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
    RunConfig cfg = default_run_config();
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    int line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos)
            line = line.substr(0, c);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(origin, line_no, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_section(section))
                throw ConfigError(origin, line_no, "unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(origin, line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(origin, line_no, "key outside of any section");
        if (key.empty() || value.empty()) throw ConfigError(origin, line_no, "empty key or value");

        const Field* field = find_field(section, key);
        if (!field)
            throw ConfigError(origin, line_no,
                              "unknown key '" + std::string(key) + "' in [" + section + "]");
        if (!seen.emplace(section, std::string(key)).second)
            throw ConfigError(origin, line_no, "duplicate key '" + std::string(key) + "'");

        switch (field->kind) {
            case Kind::real: {
                double v = 0.0;
                if (!parse_real(value, v))
                    throw ConfigError(origin, line_no, "invalid number for '" + std::string(key) + "'");
                *field->real(cfg) = v * field->scale;
                break;
            }
            case Kind::count: {
                std::uint64_t v = 0;
                if (!parse_count(value, v))
                    throw ConfigError(origin, line_no,
                                      "invalid non-negative integer for '" + std::string(key) + "'");
                *field->count(cfg) = v;
                break;
            }
            case Kind::flag: {
                bool v = false;
                if (!parse_flag(value, v))
                    throw ConfigError(origin, line_no, "invalid boolean for '" + std::string(key) + "'");
                *field->flag(cfg) = v;
                break;
            }
            case Kind::mode: {
                if (value == "sampled") {
                    cfg.coop.mode = CooperativityMode::sampled;
                } else if (value == "effective") {
                    cfg.coop.mode = CooperativityMode::effective;
                } else {
                    throw ConfigError(origin, line_no, "mode must be 'sampled' or 'effective'");
                }
                break;
            }
        }
    }

    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string write_config(const RunConfig& config) {
    RunConfig c = config;  // field accessors take non-const refs
    std::string out;
    std::string section;
    for (const auto& f : kFields) {
        if (section != f.section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += '[' + section + "]\n";
        }
        out += f.key;
        out += " = ";
        switch (f.kind) {
            case Kind::real: out += format_scaled(*f.real(c), f.scale); break;
            case Kind::count: out += std::to_string(*f.count(c)); break;
            case Kind::flag: out += *f.flag(c) ? "true" : "false"; break;
            case Kind::mode:
                out += c.coop.mode == CooperativityMode::effective ? "effective" : "sampled";
                break;
        }
        out += '\n';
    }
    return out;
}

}  // namespace spt
