#pragma once

#include <stdexcept>
#include <string>

namespace ftsolve {

/// Malformed arguments: wrong dimensions, non-finite entries, bad parameters.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must have full row rank does not.
class SingularityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Ax = b has no solution.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The integrator produced a non-finite state.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

private:
  long step_;
};

/// Invariant violated inside an algorithm (should not happen on valid input).
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

} // namespace ftsolve
