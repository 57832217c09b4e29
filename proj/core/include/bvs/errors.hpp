#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bvs {

// Malformed or inconsistent input (dimensions, constraint violations, bad files).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure. Carries an optional per-iteration trace
// (e.g. gradient norms of a Newton run that hit its iteration cap).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::vector<double> trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

// Request outside a supported envelope (quadrature dimension, enumeration size).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bvs
