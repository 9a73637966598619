#pragma once

#include <stdexcept>
#include <string>

namespace railalloc {

// A device with no associated users has no defined average rate.
struct UndefinedAverageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The capacity derivative diverges when an interference-free device's
// bandwidth share reaches zero.
struct SingularGradientError : std::domain_error {
  using std::domain_error::domain_error;
};

// Line search found no step with a merit decrease; signals convergence.
struct NoDecreaseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quasi-Newton update asked to absorb a (numerically) zero step.
struct DegenerateStepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No point satisfies the QP constraints (phase-1 failed).
struct InfeasibleQpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Distance-weighted allocation is undefined when a mean distance is zero.
struct ZeroDistanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exhaustive search refuses instances it cannot enumerate in bounded time.
struct TooLargeInstanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The dual bisection could not bracket the equality multiplier.
struct BracketFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solve exhausted its iteration budget.
struct MaxIterationsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace railalloc
