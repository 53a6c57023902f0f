#pragma once

#include <stdexcept>
#include <string>

namespace pmto {

// Precondition violations: dimension mismatch, out-of-range arguments.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cholesky could not be completed even at the largest jitter.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double last_jitter)
      : std::runtime_error(what), last_jitter_(last_jitter) {}
  double last_jitter() const noexcept { return last_jitter_; }

 private:
  double last_jitter_;
};

// A closed-form objective produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised when bookkeeping disagrees with a known optimum (e.g. negative regret).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pmto
