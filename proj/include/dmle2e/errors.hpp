#ifndef DMLE2E_ERRORS_HPP
#define DMLE2E_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dmle2e {

/// Precondition violated by the caller (bad sizes, out-of-range knobs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but carries no usable information (constant, all-zero).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iteration failed to converge, NaN/Inf appeared, or an integrator went unstable.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A requested quantity does not exist for this input (e.g. level never crossed).
class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Serialized artifact is malformed, truncated, or from another version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API used in the wrong order (e.g. backward on a stale tape).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dmle2e

#endif  // DMLE2E_ERRORS_HPP
