#pragma once

// Comparison of a run summary against a table of reference bands.

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spt {

/// The summary or reference JSON does not have the expected shape.
class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ReferenceBand {
    std::string observable;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::string note;
};

struct ComparisonLine {
    std::string observable;
    bool passed = false;
    bool missing = false;
    double value = 0.0;
    ReferenceBand band;
};

struct ComparisonReport {
    std::vector<ComparisonLine> lines;

    bool passed() const;
    std::string text() const;
};

/// Bands for the published numbers, keyed by summary observable name.
const std::vector<ReferenceBand>& builtin_reference();

/// Parses {"name": {"value": v, "tolerance": t}} or {"name": {"min": a, "max": b}}
/// (either bound may be omitted).
std::vector<ReferenceBand> parse_reference(std::string_view json_text);

/// Every band is checked against the summary's value. With
/// `require_all` a band whose observable is absent fails; otherwise it is
/// skipped. Throws SchemaError on malformed input or when no band applies.
ComparisonReport compare_report(std::string_view summary_json,
                                const std::vector<ReferenceBand>& reference, bool require_all);

}  // namespace spt
