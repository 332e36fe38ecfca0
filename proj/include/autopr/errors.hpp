#pragma once

#include <stdexcept>
#include <string>

namespace autopr {

// Preconditions on caller-supplied values raise std::invalid_argument.

/// A configuration that is well-formed but outside what the engine supports,
/// e.g. beta below beta_min for a prior with unbounded support.
class UnsupportedConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed (e.g. unnormalised importance weights).
class InternalInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace autopr
