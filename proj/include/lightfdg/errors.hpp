#pragma once

#include <stdexcept>
#include <string>

namespace lightfdg {

// Bad input: malformed files, invalid configuration values, unknown names.
// The CLI maps this family to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A valid request that the network cannot satisfy (wavelength bound,
// exhausted intensity). The CLI maps this family to exit code 2.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WavelengthBoundError : public InfeasibleError {
 public:
  WavelengthBoundError(int required, int configured)
      : InfeasibleError("wavelength bound violated: topology needs at least " +
                        std::to_string(required) + " wavelengths per link, got " +
                        std::to_string(configured)),
        required_(required),
        configured_(configured) {}

  int required() const noexcept { return required_; }
  int configured() const noexcept { return configured_; }

 private:
  int required_;
  int configured_;
};

class CollisionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class BudgetError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Caller broke an operation's precondition (unknown-class flow handed to the
// groomer, unprovisioned rack pair under a lightpath policy).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lightfdg
