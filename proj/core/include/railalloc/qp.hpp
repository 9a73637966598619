#pragma once

#include <Eigen/Core>
#include <vector>

namespace railalloc {

// Strictly convex quadratic program
//   min 1/2 s'Hs + C's   s.t.  A s <= B,  A_eq s = B_eq.
// H must be symmetric (within 1e-12 relative) and positive definite; the
// caller's quasi-Newton damping guarantees that, and a failed factorization
// is retried once with 1e-10*I added (recorded in the solution).
struct QpSubproblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd C;
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd B_eq;

  void validate() const;
};

enum class QpStatus { kOptimal, kMaxIterations };

struct QpSolution {
  Eigen::VectorXd s_star;
  Eigen::VectorXd ineq_multipliers;  // gamma >= 0, one per inequality row
  Eigen::VectorXd eq_multipliers;    // mu, one per equality row
  std::vector<int> active_set;       // inequality rows active at s_star
  QpStatus status = QpStatus::kOptimal;
  bool regularized = false;
  int iterations = 0;
};

// Primal active-set solve. `start` should be feasible; if it is not, a
// phase-1 step (equality projection plus a slack minimization) finds a
// feasible point or throws InfeasibleQpError.
QpSolution solve_qp(const QpSubproblem& qp, const Eigen::VectorXd& start);

}  // namespace railalloc
