#pragma once

#include <stdexcept>
#include <string>

namespace frontlab {

// Parameter-domain violations in user input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A construction whose invariants cannot be met (profile, datum).
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure inside a numeric routine (bracketing, fits).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time stepping refused or produced garbage.
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace frontlab
