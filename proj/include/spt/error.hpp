#pragma once

#include <stdexcept>
#include <string>

namespace spt {

/// A physical parameter violates its documented invariant. The message
/// always starts with the qualified field name, e.g. "CavityParams.kappa".
class InvariantError : public std::invalid_argument {
  public:
    InvariantError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// Monte-Carlo estimate requested with too few samples to be meaningful.
class PrecisionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Estimator input that cannot produce a defined value (empty groups,
/// zero denominators, degenerate binning, rank-deficient fits).
class EstimationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace spt
