#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spdelab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was not met (dimension mismatch, invalid range, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An analytic hypothesis required by an experiment failed its numerical audit.
class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

/// The generalized dissipativity constant could not be made positive.
class CertificationFailed : public HypothesisViolated {
 public:
  using HypothesisViolated::HypothesisViolated;
};

/// An exact solver was asked to work beyond its size budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A structured-text document did not match the documented schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A trajectory left the finite range (non-finite state or norm above the blow-up threshold).
class NumericalBlowup : public Error {
 public:
  NumericalBlowup(std::size_t step, std::size_t trajectory, const std::string& what)
      : Error("numerical blow-up at step " + std::to_string(step) + " of trajectory " +
              std::to_string(trajectory) + ": " + what),
        step_(step),
        trajectory_(trajectory) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t trajectory() const noexcept { return trajectory_; }

  NumericalBlowup with_trajectory(std::size_t trajectory) const {
    return NumericalBlowup(step_, trajectory, "state diverged");
  }

 private:
  std::size_t step_;
  std::size_t trajectory_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace spdelab
