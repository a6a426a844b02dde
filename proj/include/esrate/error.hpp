#pragma once

#include <stdexcept>
#include <string>

namespace esrate {

/// A documented precondition was violated by the caller (dimension mismatch,
/// out-of-range parameter, malformed configuration).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The request is well formed but falls outside what the numerics can
/// certify (empty feasibility interval, catastrophic cancellation, ...).
class Unsupported : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace esrate
