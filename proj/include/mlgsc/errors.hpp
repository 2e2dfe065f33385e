#pragma once

#include <stdexcept>
#include <string>

namespace mlgsc {

/// Caller broke a documented precondition or invariant.
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine failed to produce a usable result (non-convergence,
/// non-finite values).
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file header or unparseable text input.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// File contents inconsistent with their header (truncated payload, bad sizes).
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mlgsc
