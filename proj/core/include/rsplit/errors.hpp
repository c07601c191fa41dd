#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsplit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters supplied when building a law, model or scheme.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A call whose arguments violate the documented preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A chain produced a non-finite coordinate.
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(std::size_t cycle, const std::string& detail);
  std::size_t cycle() const noexcept { return cycle_; }

 private:
  std::size_t cycle_;
};

/// Step-count exhaustion or non-finite state inside an integrator.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Triad orbit on which the requested coordinate can never vanish.
class DegenerateOrbitError : public Error {
 public:
  using Error::Error;
};

/// Fewer than two designated triad coordinates are active.
class InsufficientActivityError : public Error {
 public:
  using Error::Error;
};

/// Pair rotation requested while the fixed coordinate is zero.
class ZeroRateError : public Error {
 public:
  using Error::Error;
};

/// Experiment started from a point where the chain cannot mix.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace rsplit
