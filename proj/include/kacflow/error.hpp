#pragma once

#include <stdexcept>
#include <string>

namespace kacflow {

// Argument outside the mathematical domain of an operation (negative time,
// point outside a support, probability outside [0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed request: dimension mismatch, unknown enum tag, bad config.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: quadrature did not converge, solver step underflow,
// non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The diffusion reverse field was queried inside its truncation window.
class TruncationError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Adaptive ODE step fell below the minimum; `t` is where it happened.
class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, double t) : NumericalError(what), t_(t) {}
  double t() const noexcept { return t_; }

 private:
  double t_;
};

namespace detail {

inline void require_domain(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

inline void require_usage(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace detail
}  // namespace kacflow
