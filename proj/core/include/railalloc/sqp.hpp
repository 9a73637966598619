#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "railalloc/problem.hpp"
#include "railalloc/radio.hpp"

namespace railalloc {

// Bandwidth allocation as a nonlinear program over the simplex:
//   max objective(alpha)  s.t.  sum(alpha) = 1,  0 <= alpha_i <= 1.
// The bounds are handled as 2n inequalities g_{2s} = alpha_s - 1 <= 0 and
// g_{2s+1} = -alpha_s <= 0. `scale` normalizes the objective for solver
// internals and KKT residuals so that certification tolerances are
// dimensionless (invariant under rescaling transmit power or bandwidth).
struct NlpProblem {
  int n = 0;
  std::function<double(const Eigen::VectorXd&)> objective;          // bit/s
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // bit/s
  double scale = 1.0;
};

// Problem over the scenario's active (non-empty) devices; empty devices are
// removed here and reported with a zero share by solve_bandwidth_sqp.
NlpProblem make_nlp(const BandwidthProblem& problem);

struct KktResiduals {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double primal_ineq = 0.0;
  double primal_eq = 0.0;
  double dual_feasibility = 0.0;
  double max() const;
};

// Candidate optimum with multipliers for the scale-normalized minimization
// form: grad(-f/scale) + mu * grad(sum(alpha)-1) + sum gamma_j grad(g_j) = 0,
// gamma >= 0. Inequality order matches NlpProblem: rows 2s are the upper
// bounds, rows 2s+1 the lower bounds.
struct KktPoint {
  Eigen::VectorXd alpha;
  double mu = 0.0;
  Eigen::VectorXd gamma;
};

KktResiduals kkt_residuals(const NlpProblem& problem, const KktPoint& point);

// Damped BFGS rank-two update
//   H + q q' / (q'S) - (H S)(H S)' / (S'H S),
// with Powell damping applied to q whenever q'S <= 0.2 * S'HS so the result
// stays positive definite. Throws DegenerateStepError for |S| <= 1e-14.
Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& H, const Eigen::VectorXd& S,
                            const Eigen::VectorXd& q);

struct LineSearchResult {
  double t = 0.0;
  int evals = 0;
};

// Minimizes the L1-penalty merit
//   objective_min(clamp(x + tS)) + rho*|sum - 1| + rho*sum max(0, g_j)
// over t in (0, 1] by golden-section bisection to width eps2, where clamp
// projects onto [alpha_floor, 1]. The full step t = 1 is preferred whenever
// its merit is at least as good as the sectioning result. Throws
// NoDecreaseError when no step improves the merit by at least 1e-14.
LineSearchResult merit_line_search(
    const std::function<double(const Eigen::VectorXd&)>& objective_min,
    const Eigen::VectorXd& x, const Eigen::VectorXd& direction, double eps2,
    double rho, double alpha_floor);

struct SolverConfig {
  double sigma = 1e-9;       // convergence accuracy on step and objective
  double sigma_kkt = 1e-6;   // certification threshold on KKT residuals
  double eps1 = 1e-9;        // QP subproblem stationarity tolerance
  double eps2 = 1e-4;        // line-search interval tolerance
  int max_iters = 100;
  double alpha_floor = 1e-12;
  Eigen::VectorXd start;     // empty -> uniform
};

struct TraceRow {
  int iter = 0;
  double objective_bps = 0.0;
  double step_norm = 0.0;
  double kkt_residual = 0.0;
  int linesearch_evals = 0;
  double elapsed_s = 0.0;
};

enum class SolveStatus { kCertified, kStalled, kMaxIterations };

struct SolverReport {
  Eigen::VectorXd alpha;       // full-length share vector
  double objective_bps = 0.0;
  double mu = 0.0;             // normalized multipliers (active devices)
  Eigen::VectorXd gamma;
  KktResiduals residuals;
  bool certified = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iterations = 0;
  std::vector<TraceRow> trace;
  double wall_time_s = 0.0;
};

// Sequential quadratic programming with a Lagrangian-corrected Hessian:
// at each iterate build the Taylor QP, solve it for the search direction,
// run the constrained one-dimensional merit search, then apply the damped
// BFGS correction using the Lagrangian-gradient difference. Certification
// requires step norm <= sigma, objective change <= sigma*max(1,|f|), and
// all KKT residuals <= sigma_kkt.
SolverReport solve_sqp(const NlpProblem& problem, const SolverConfig& config);

// Convenience wrapper: removes user-less devices, solves, and expands the
// result with zero shares for them.
SolverReport solve_bandwidth_sqp(const BandwidthProblem& problem,
                                 const SolverConfig& config);

// One CSV row per iteration:
// iter,objective_bps,step_norm,kkt_residual,linesearch_evals,elapsed_s
std::string trace_csv(const SolverReport& report);

}  // namespace railalloc
