#pragma once

#include <stdexcept>
#include <string>

namespace damflow {

// Precondition on an argument failed (sizes, ranges, parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data violates a modelling assumption (e.g. negative boundary head).
class InvalidData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Permeability tensor is not positive definite somewhere.
class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(const std::string& what, double x1, double x2)
      : std::runtime_error(what), x1_(x1), x2_(x2) {}

  double x1() const noexcept { return x1_; }
  double x2() const noexcept { return x2_; }

 private:
  double x1_;
  double x2_;
};

// Nonlinear or linear solver failed to reach its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// A time step failed even after dt halving.
class StepFailure : public NonConvergence {
 public:
  StepFailure(const std::string& what, int step_index, double last_residual)
      : NonConvergence(what, last_residual), step_index_(step_index) {}

  int step_index() const noexcept { return step_index_; }

 private:
  int step_index_;
};

}  // namespace damflow
