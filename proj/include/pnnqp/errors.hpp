#pragma once

#include <stdexcept>
#include <string>

namespace pnnqp {

/// Input could not be read or decoded (bad JSON, missing key, non-finite number).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Input decoded fine but violates a problem/parameter contract
/// (dimension mismatch, rank-deficient A, indefinite Q, bad step size, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double t_fail)
      : std::runtime_error(what), t_fail_(t_fail) {}
  double time_of_failure() const { return t_fail_; }

 private:
  double t_fail_;
};

}  // namespace pnnqp
