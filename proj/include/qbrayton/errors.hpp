#pragma once

#include <stdexcept>
#include <string>

namespace qbrayton {

// Base of every error raised by the library. Messages name the failing
// quantity and the parameters involved.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input: nonpositive field/temperature, J < 0, Y at J = 0, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

// Root bracket without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

// Iteration cap or refinement check exceeded.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// No positive beta attains the requested generalized force on the current branch.
class InfeasibleForce : public Error {
 public:
  using Error::Error;
};

// Brayton corners failed to close back onto the anchor.
class NonClosure : public Error {
 public:
  using Error::Error;
};

// True for the failures that come out of the numerics rather than bad input.
inline bool is_numerical_failure(const Error& e) {
  return dynamic_cast<const BracketError*>(&e) != nullptr ||
         dynamic_cast<const NoConvergence*>(&e) != nullptr ||
         dynamic_cast<const InfeasibleForce*>(&e) != nullptr ||
         dynamic_cast<const NonClosure*>(&e) != nullptr;
}

}  // namespace qbrayton
