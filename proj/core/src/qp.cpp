#include "railalloc/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "railalloc/errors.hpp"

namespace railalloc {

namespace {

constexpr double kFeasTol = 1e-8;
constexpr double kEps1 = 1e-9;  // subproblem stationarity tolerance

double max_ineq_violation(const QpSubproblem& qp, const Eigen::VectorXd& s) {
  if (qp.A.rows() == 0) return 0.0;
  return (qp.A * s - qp.B).maxCoeff();
}

// Minimum-norm correction onto the equality manifold.
Eigen::VectorXd project_equalities(const QpSubproblem& qp, Eigen::VectorXd s) {
  if (qp.A_eq.rows() == 0) return s;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(qp.A_eq);
  s += cod.solve(qp.B_eq - qp.A_eq * s);
  if ((qp.A_eq * s - qp.B_eq).cwiseAbs().maxCoeff() > kFeasTol) {
    throw InfeasibleQpError("solve_qp: equality constraints are inconsistent");
  }
  return s;
}

QpSolution solve_impl(const QpSubproblem& qp, Eigen::VectorXd s,
                      bool allow_phase1);

// Phase-1: minimize a slack bounding the worst inequality violation,
//   min 1/2 delta |s - s0|^2 + 1/2 th^2 + th
//   s.t. A s - th <= B, A_eq s = B_eq,
// started at (s0, violation + 1), which is feasible by construction.
Eigen::VectorXd phase1(const QpSubproblem& qp, const Eigen::VectorXd& s0) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index p = qp.A.rows();
  const Eigen::Index m = qp.A_eq.rows();
  const double delta = 1e-8;

  QpSubproblem aux;
  aux.H = delta * Eigen::MatrixXd::Identity(n + 1, n + 1);
  aux.H(n, n) = 1.0;
  aux.C = Eigen::VectorXd::Zero(n + 1);
  aux.C.head(n) = -delta * s0;
  aux.C[n] = 1.0;
  aux.A.resize(p, n + 1);
  aux.A.leftCols(n) = qp.A;
  aux.A.col(n) = -Eigen::VectorXd::Ones(p);
  aux.B = qp.B;
  aux.A_eq.resize(m, n + 1);
  aux.A_eq.leftCols(n) = qp.A_eq;
  aux.A_eq.col(n).setZero();
  aux.B_eq = qp.B_eq;

  Eigen::VectorXd start(n + 1);
  start.head(n) = s0;
  start[n] = std::max(0.0, max_ineq_violation(qp, s0)) + 1.0;

  const QpSolution aux_sol = solve_impl(aux, start, /*allow_phase1=*/false);
  Eigen::VectorXd s = aux_sol.s_star.head(n);
  if (max_ineq_violation(qp, s) > kFeasTol) {
    throw InfeasibleQpError("solve_qp: phase-1 found no feasible point");
  }
  return s;
}

QpSolution solve_impl(const QpSubproblem& qp, Eigen::VectorXd s,
                      bool allow_phase1) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index p = qp.A.rows();
  const Eigen::Index m = qp.A_eq.rows();

  QpSolution sol;
  Eigen::MatrixXd H = qp.H;
  {
    Eigen::LLT<Eigen::MatrixXd> probe(H);
    if (probe.info() != Eigen::Success) {
      H += 1e-10 * Eigen::MatrixXd::Identity(n, n);
      sol.regularized = true;
      if (Eigen::LLT<Eigen::MatrixXd>(H).info() != Eigen::Success) {
        throw std::invalid_argument("solve_qp: H is not positive definite");
      }
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> h_llt(H);

  if (m > 0) s = project_equalities(qp, s);
  if (max_ineq_violation(qp, s) > kFeasTol) {
    if (!allow_phase1) {
      throw InfeasibleQpError("solve_qp: start infeasible in phase-1");
    }
    s = phase1(qp, s);
    if (m > 0) s = project_equalities(qp, s);
  }

  std::vector<char> active(static_cast<std::size_t>(p), 0);
  const double b_scale = p > 0 ? std::max(1.0, qp.B.cwiseAbs().maxCoeff()) : 1.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (qp.B[j] - qp.A.row(j).dot(s) <= 1e-10 * b_scale) active[j] = 1;
  }

  const double g_scale =
      std::max({1.0, qp.C.cwiseAbs().maxCoeff(), H.cwiseAbs().maxCoeff()});
  const int max_iter = 100 + 10 * static_cast<int>(n + p);

  for (int iter = 1; iter <= max_iter; ++iter) {
    sol.iterations = iter;

    std::vector<int> act_idx;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (active[j]) act_idx.push_back(static_cast<int>(j));
    }
    const Eigen::Index r = m + static_cast<Eigen::Index>(act_idx.size());
    Eigen::MatrixXd act_rows(r, n);
    act_rows.topRows(m) = qp.A_eq;
    for (std::size_t i = 0; i < act_idx.size(); ++i) {
      act_rows.row(m + static_cast<Eigen::Index>(i)) = qp.A.row(act_idx[i]);
    }

    const Eigen::VectorXd grad = H * s + qp.C;

    // Step restricted to the null space of the working set. Rank detection
    // handles degenerate corners where active rows become dependent.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    Eigen::Index rank = 0;
    if (r > 0) {
      qr.compute(act_rows.transpose());
      rank = qr.rank();
    }
    if (r == 0) {
      d = -h_llt.solve(grad);
    } else if (rank < n) {
      const Eigen::MatrixXd q_full = qr.householderQ();
      const Eigen::MatrixXd z = q_full.rightCols(n - rank);
      const Eigen::MatrixXd hz = z.transpose() * H * z;
      d = z * Eigen::LLT<Eigen::MatrixXd>(hz).solve(-z.transpose() * grad);
    }

    if (d.cwiseAbs().maxCoeff() <= kEps1 * (1.0 + s.cwiseAbs().maxCoeff())) {
      // Stationary on the working set; check multiplier signs.
      Eigen::VectorXd lam = Eigen::VectorXd::Zero(r);
      if (r > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
            act_rows.transpose());
        lam = cod.solve(-grad);
      }
      int worst_j = -1;
      std::size_t worst_i = 0;
      double worst = -1e-9 * g_scale;
      for (std::size_t i = 0; i < act_idx.size(); ++i) {
        const double value = lam[m + static_cast<Eigen::Index>(i)];
        if (value < worst) {
          worst = value;
          worst_j = act_idx[i];
          worst_i = i;
        }
      }
      if (worst_j < 0) {
        sol.s_star = s;
        sol.eq_multipliers = lam.head(m);
        sol.ineq_multipliers = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < act_idx.size(); ++i) {
          sol.ineq_multipliers[act_idx[i]] =
              std::max(0.0, lam[m + static_cast<Eigen::Index>(i)]);
        }
        sol.active_set = act_idx;
        sol.status = QpStatus::kOptimal;
        return sol;
      }
      (void)worst_i;
      active[worst_j] = 0;
      continue;
    }

    // Ratio test against inactive constraints.
    double t = 1.0;
    int blocker = -1;
    const double d_norm = d.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (active[j]) continue;
      const double ad = qp.A.row(j).dot(d);
      if (ad <= 1e-13 * std::max(1.0, d_norm)) continue;
      double tj = (qp.B[j] - qp.A.row(j).dot(s)) / ad;
      if (tj < 0.0) tj = 0.0;
      if (tj < t) {
        t = tj;
        blocker = j;
      }
    }
    s += t * d;
    if (blocker >= 0 && t < 1.0) active[blocker] = 1;
  }

  sol.s_star = s;
  sol.eq_multipliers = Eigen::VectorXd::Zero(m);
  sol.ineq_multipliers = Eigen::VectorXd::Zero(p);
  sol.status = QpStatus::kMaxIterations;
  return sol;
}

}  // namespace

void QpSubproblem::validate() const {
  const Eigen::Index n = H.rows();
  if (n < 1 || H.cols() != n) {
    throw std::invalid_argument("QpSubproblem: H must be square and nonempty");
  }
  if (C.size() != n) {
    throw std::invalid_argument("QpSubproblem: C size mismatch");
  }
  if (A.rows() > 0 && A.cols() != n) {
    throw std::invalid_argument("QpSubproblem: A column count mismatch");
  }
  if (B.size() != A.rows()) {
    throw std::invalid_argument("QpSubproblem: B size mismatch");
  }
  if (A_eq.rows() > 0 && A_eq.cols() != n) {
    throw std::invalid_argument("QpSubproblem: A_eq column count mismatch");
  }
  if (B_eq.size() != A_eq.rows()) {
    throw std::invalid_argument("QpSubproblem: B_eq size mismatch");
  }
  const double h_scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * h_scale) {
    throw std::invalid_argument("QpSubproblem: H must be symmetric");
  }
}

QpSolution solve_qp(const QpSubproblem& qp, const Eigen::VectorXd& start) {
  qp.validate();
  if (start.size() != qp.H.rows()) {
    throw std::invalid_argument("solve_qp: start size mismatch");
  }
  return solve_impl(qp, start, /*allow_phase1=*/true);
}

}  // namespace railalloc
