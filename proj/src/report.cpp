#include "spt/report.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>


namespace spt {

namespace {

std::string short_number(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, r.ptr);
}

double number_field(const nlohmann::json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return std::numeric_limits<double>::quiet_NaN();
    if (!it->is_number()) throw SchemaError(where + "." + key + " must be a number");
    return it->get<double>();
}

nlohmann::json parse_object(std::string_view text, const char* what) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string(what) + ": " + e.what());
    }
    if (!j.is_object()) throw SchemaError(std::string(what) + ": top level must be an object");
    return j;
}

}  // namespace

bool ComparisonReport::passed() const {
    for (const auto& l : lines)
        if (!l.passed) return false;
    return true;
}

std::string ComparisonReport::text() const {
    std::string s;
    for (const auto& l : lines) {
        s += l.passed ? "PASS " : "FAIL ";
        s += l.observable;
        if (l.missing) {
            s += ": missing from summary\n";
            continue;
        }
        s += " = " + short_number(l.value) + (l.passed ? " in [" : " outside [") +
             short_number(l.band.min) + ", " + short_number(l.band.max) + "]";
        if (!l.band.note.empty()) s += "  (" + l.band.note + ")";
        s += '\n';
    }
    return s;
}

const std::vector<ReferenceBand>& builtin_reference() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    static const std::vector<ReferenceBand> table{
        {"contrast_ng0.4", 0.8 * 0.32968, 0.32968 + 0.02, "bound 1-exp(-0.4)"},
        {"contrast_ng1.4", 0.8 * 0.75340, 0.75340 + 0.02, "bound 1-exp(-1.4)"},
        {"contrast_ng2.9", 0.8 * 0.94498, 0.94498 + 0.02, "bound 1-exp(-2.9)"},
        {"extinction_factor", 9.0, 13.0, "11 +- 2"},
        {"p_single_given_any", 0.761, 0.781, "0.771 +- 0.01"},
        {"gain_slope_ratio_w25us", 0.95, 1.05, "linear slope vs component separation"},
        {"gain_slope_ratio_w50us", 0.95, 1.05, "linear slope vs component separation"},
        {"gain_peak_intracavity_w50us", 600.0, inf, "> 600 blocked"},
        {"gain_peak_outside_w50us", 400.0, inf, "> 400 blocked outside"},
        {"m_s0_intracavity", 2.7, 2.9, "2.8 +- 0.1"},
        {"m_s0_outside", 1.75, 1.95, "0.66 x 2.8"},
        {"combined_efficiency", 0.029, 0.031, "0.030 +- 0.001"},
        {"g_r_intracavity", 1.8, 2.6, "2.2 +- 0.4"},
        {"g_r_outside", 0.66 * 1.8, 0.66 * 2.6, "0.66 x [1.8, 2.6]"},
        {"g2_raw", 0.21, 0.38, "0.29 +0.09 -0.08"},
        {"g2_corrected", 0.11, 0.25, "0.17 +0.08 -0.06"},
    };
    return table;
}

std::vector<ReferenceBand> parse_reference(std::string_view json_text) {
    const auto j = parse_object(json_text, "reference");
    std::vector<ReferenceBand> out;
    for (const auto& [name, entry] : j.items()) {
        if (!entry.is_object()) throw SchemaError("reference." + name + " must be an object");
        ReferenceBand band;
        band.observable = name;
        const std::string where = "reference." + name;
        const double value = number_field(entry, "value", where);
        const double tol = number_field(entry, "tolerance", where);
        const double lo = number_field(entry, "min", where);
        const double hi = number_field(entry, "max", where);
        if (!std::isnan(value)) {
            if (std::isnan(tol) || tol < 0.0)
                throw SchemaError(where + ": value needs a non-negative tolerance");
            if (!std::isnan(lo) || !std::isnan(hi))
                throw SchemaError(where + ": use either value/tolerance or min/max");
            band.min = value - tol;
            band.max = value + tol;
        } else {
            if (std::isnan(lo) && std::isnan(hi))
                throw SchemaError(where + ": needs value/tolerance or min/max");
            if (!std::isnan(lo)) band.min = lo;
            if (!std::isnan(hi)) band.max = hi;
            if (band.min > band.max) throw SchemaError(where + ": min > max");
        }
        out.push_back(std::move(band));
    }
    return out;
}

ComparisonReport compare_report(std::string_view summary_json,
                                const std::vector<ReferenceBand>& reference, bool require_all) {
    const auto summary = parse_object(summary_json, "summary");
    for (const auto& [name, entry] : summary.items()) {
        const std::string where = "summary." + name;
        if (!entry.is_object()) throw SchemaError(where + " must be an object");
        for (const char* key : {"value", "err_low", "err_high"}) {
            const auto it = entry.find(key);
            if (it == entry.end()) throw SchemaError(where + " lacks '" + key + "'");
            if (!it->is_number() && !it->is_null())
                throw SchemaError(where + "." + key + " must be a number");
        }
    }

    ComparisonReport report;
    for (const auto& band : reference) {
        ComparisonLine line;
        line.observable = band.observable;
        line.band = band;
        const auto it = summary.find(band.observable);
        if (it == summary.end()) {
            if (!require_all) continue;
            line.missing = true;
        } else {
            const auto& v = (*it)["value"];
            line.value = v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
            line.passed = line.value >= band.min && line.value <= band.max;
        }
        report.lines.push_back(std::move(line));
    }
    if (report.lines.empty()) throw SchemaError("no reference observable appears in the summary");
    return report;
}

}  // namespace spt
