#ifndef STRINGSTAB_ERRORS_HPP
#define STRINGSTAB_ERRORS_HPP

#include <complex>
#include <stdexcept>
#include <string>

namespace stringstab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A gain, size or configuration value violates its invariant.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

/// The Laplace point sits on (or numerically next to) a zero of m or of the
/// chain denominator.
class DegeneratePointError : public Error {
 public:
  DegeneratePointError(const std::string& what, std::complex<double> s) : Error(what), s_(s) {}
  std::complex<double> point() const { return s_; }

 private:
  std::complex<double> s_;
};

class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, std::complex<double> s) : Error(what), s_(s) {}
  std::complex<double> point() const { return s_; }

 private:
  std::complex<double> s_;
};

/// A frequency response returned NaN/Inf.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, double omega) : Error(what), omega_(omega) {}
  double omega() const { return omega_; }

 private:
  double omega_;
};

/// The time integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stringstab

#endif  // STRINGSTAB_ERRORS_HPP
