#pragma once

#include <string>

#include "railalloc/problem.hpp"
#include "railalloc/radio.hpp"
#include "railalloc/sqp.hpp"

namespace railalloc {

struct AllocatorResult {
  AllocationVector alpha;
  double objective_bps = 0.0;
  std::string method;
  double wall_time_s = 0.0;
  int iterations = 0;
  double dual_mu_bps = 0.0;  // equality multiplier, dual_oracle only
};

// Priority by number of users: alpha_s = M_s / M.
AllocationVector pnou(const Scenario& scenario);

// Priority by distance: alpha_s proportional to 1 / (mean user distance)
// over devices with users; user-less devices get zero. Throws
// ZeroDistanceError when some mean distance is zero.
AllocationVector pd(const Scenario& scenario);

struct IpOptions {
  double tau0 = 0.1;       // initial barrier weight (normalized objective)
  double shrink = 0.1;     // geometric decrease factor
  int max_outer = 60;
  int max_newton = 50;     // per barrier stage
};

// Log-barrier interior-point baseline: maximizes
//   f(alpha) - tau * sum_i (-ln alpha_i - ln(1 - alpha_i))
// with the equality eliminated, decreasing tau geometrically until the
// duality-gap estimate 2n*tau drops below tol_bps.
AllocatorResult ip_barrier(const BandwidthProblem& problem, double tol_bps,
                           const IpOptions& options = {});

// Independent optimality oracle exploiting separability: bisection on the
// equality multiplier mu; each share solves marginal-utility(alpha_s) = mu
// by safeguarded 1-D Newton, clipped to [1e-12, 1]. Stops when
// |sum alpha(mu) - 1| <= tol.
AllocatorResult dual_oracle(const BandwidthProblem& problem, double tol);

// Exhaustive simplex-lattice search with the given spacing. Certification
// only: at most 4 active devices and step >= 1e-3. Ties resolve to the
// lexicographically smallest share vector.
AllocatorResult grid_oracle(const BandwidthProblem& problem, double step);

}  // namespace railalloc
