#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lyap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax or semantic error in a system spec; carries a 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
  }
  int line_;
  int column_;
};

/// Expression evaluated outside its domain (division by zero, log of a
/// non-positive number, ...). `subexpression` is the offending node.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : Error(what + " in `" + subexpression + "`"), subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

/// State norm exceeded the blow-up bound during integration.
class NotForwardComplete : public Error {
 public:
  NotForwardComplete(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Step size underflow in the adaptive integrator.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result
/// (unreliable finite-difference step, insufficient decay data, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A sampled witness contradicts a stability hypothesis.
class Falsified : public Error {
 public:
  Falsified(const std::string& what, std::vector<double> witness)
      : Error(what), witness_(std::move(witness)) {}

  const std::vector<double>& witness() const noexcept { return witness_; }

 private:
  std::vector<double> witness_;
};

}  // namespace lyap
