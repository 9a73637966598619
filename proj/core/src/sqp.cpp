#include "railalloc/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "railalloc/errors.hpp"
#include "railalloc/qp.hpp"

namespace railalloc {

namespace {

KktResiduals residuals_from_min_gradient(const Eigen::VectorXd& grad_min,
                                         const Eigen::VectorXd& x, double mu,
                                         const Eigen::VectorXd& gamma) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd stationary =
      grad_min + Eigen::VectorXd::Constant(n, mu);
  KktResiduals r;
  for (Eigen::Index s = 0; s < n; ++s) {
    const double g_up = x[s] - 1.0;
    const double g_lo = -x[s];
    const double gam_up = gamma[2 * s];
    const double gam_lo = gamma[2 * s + 1];
    stationary[s] += gam_up - gam_lo;
    r.complementarity = std::max(
        {r.complementarity, std::abs(gam_up * g_up), std::abs(gam_lo * g_lo)});
    r.primal_ineq = std::max({r.primal_ineq, g_up, g_lo});
    r.dual_feasibility = std::max({r.dual_feasibility, -gam_up, -gam_lo});
  }
  r.primal_ineq = std::max(r.primal_ineq, 0.0);
  r.dual_feasibility = std::max(r.dual_feasibility, 0.0);
  r.stationarity = stationary.cwiseAbs().maxCoeff();
  r.primal_eq = std::abs(x.sum() - 1.0);
  return r;
}

}  // namespace

double KktResiduals::max() const {
  return std::max({stationarity, complementarity, primal_ineq, primal_eq,
                   dual_feasibility});
}

NlpProblem make_nlp(const BandwidthProblem& problem) {
  auto bp = std::make_shared<const BandwidthProblem>(problem);
  NlpProblem nlp;
  nlp.n = static_cast<int>(bp->active_devices().size());
  nlp.objective = [bp](const Eigen::VectorXd& alpha) {
    return bp->capacity_bps(bp->expand(alpha));
  };
  nlp.gradient = [bp](const Eigen::VectorXd& alpha) {
    return bp->reduce(bp->gradient_bps(bp->expand(alpha)));
  };
  const Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(nlp.n, 1.0 / nlp.n);
  nlp.scale = std::max(1.0, nlp.gradient(uniform).cwiseAbs().maxCoeff());
  return nlp;
}

KktResiduals kkt_residuals(const NlpProblem& problem, const KktPoint& point) {
  if (point.alpha.size() != problem.n ||
      point.gamma.size() != 2 * problem.n) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  const Eigen::VectorXd grad_min =
      -problem.gradient(point.alpha) / problem.scale;
  return residuals_from_min_gradient(grad_min, point.alpha, point.mu,
                                     point.gamma);
}

Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& H, const Eigen::VectorXd& S,
                            const Eigen::VectorXd& q) {
  if (S.norm() <= 1e-14) {
    throw DegenerateStepError("bfgs_update: step is numerically zero");
  }
  const Eigen::VectorXd hs = H * S;
  const double shs = S.dot(hs);
  if (!(shs > 0.0)) {
    throw std::invalid_argument(
        "bfgs_update: H must be positive definite along the step");
  }
  Eigen::VectorXd qd = q;
  double qs = q.dot(S);
  if (qs < 0.2 * shs) {
    // Powell damping keeps q'S positive so the update stays definite.
    const double theta = 0.8 * shs / (shs - qs);
    qd = theta * q + (1.0 - theta) * hs;
    qs = qd.dot(S);
  }
  Eigen::MatrixXd out =
      H + (qd * qd.transpose()) / qs - (hs * hs.transpose()) / shs;
  return 0.5 * (out + out.transpose());
}

LineSearchResult merit_line_search(
    const std::function<double(const Eigen::VectorXd&)>& objective_min,
    const Eigen::VectorXd& x, const Eigen::VectorXd& direction, double eps2,
    double rho, double alpha_floor) {
  if (!(eps2 > 0.0)) {
    throw std::invalid_argument("merit_line_search: eps2 must be positive");
  }
  if (direction.norm() <= 1e-14) {
    throw NoDecreaseError("merit_line_search: zero-length direction");
  }
  int evals = 0;
  const auto merit = [&](double t) {
    ++evals;
    Eigen::VectorXd y =
        (x + t * direction).cwiseMax(alpha_floor).cwiseMin(1.0);
    double bound_violation = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      bound_violation +=
          std::max(0.0, y[i] - 1.0) + std::max(0.0, -y[i]);
    }
    return objective_min(y) +
           rho * (std::abs(y.sum() - 1.0) + bound_violation);
  };

  const double merit0 = merit(0.0);
  const double merit1 = merit(1.0);

  static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = merit(c);
  double fd = merit(d);
  while (b - a > eps2) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = merit(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = merit(d);
    }
  }
  double t_best = 0.5 * (a + b);
  double m_best = merit(t_best);
  if (merit1 <= m_best) {  // prefer the full step on ties
    t_best = 1.0;
    m_best = merit1;
  }
  if (!(m_best < merit0 - 1e-14)) {
    throw NoDecreaseError("merit_line_search: no step decreases the merit");
  }
  return {t_best, evals};
}

SolverReport solve_sqp(const NlpProblem& problem, const SolverConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  const int n = problem.n;
  if (n < 1) throw std::invalid_argument("solve_sqp: empty problem");
  if (!(config.sigma > 0.0) || !(config.sigma_kkt > 0.0) ||
      !(config.eps1 > 0.0) || !(config.eps2 > 0.0) || config.max_iters < 1 ||
      !(config.alpha_floor > 0.0)) {
    throw std::invalid_argument("solve_sqp: invalid tolerances");
  }

  Eigen::VectorXd x = config.start.size() > 0
                          ? config.start
                          : Eigen::VectorXd::Constant(n, 1.0 / n);
  if (x.size() != n) {
    throw std::invalid_argument("solve_sqp: start size mismatch");
  }
  x = x.cwiseMax(config.alpha_floor).cwiseMin(1.0);

  const double scale = problem.scale;
  const auto f_min = [&](const Eigen::VectorXd& v) {
    return -problem.objective(v) / scale;
  };
  const auto g_min = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(-problem.gradient(v) / scale);
  };
  // Lagrangian gradient of the minimization form; the constraint rows are
  // linear, so their contribution to the correction vector q cancels.
  const auto lagrangian_terms = [&](double mu, const Eigen::VectorXd& gamma) {
    Eigen::VectorXd terms = Eigen::VectorXd::Constant(n, mu);
    for (int s = 0; s < n; ++s) terms[s] += gamma[2 * s] - gamma[2 * s + 1];
    return terms;
  };

  Eigen::VectorXd g = g_min(x);
  Eigen::MatrixXd H =
      std::max(1.0, g.norm()) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(2 * n);
  double mu = 0.0;
  double rho = 1.0;
  double fx = f_min(x);

  SolverReport report;
  report.status = SolveStatus::kMaxIterations;
  int stalls = 0;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    report.iterations = iter;

    // Taylor QP at x in the step variable S = X - X_k.
    QpSubproblem qp;
    qp.H = H;
    qp.C = g;
    qp.A = Eigen::MatrixXd::Zero(2 * n, n);
    qp.B.resize(2 * n);
    for (int s = 0; s < n; ++s) {
      qp.A(2 * s, s) = 1.0;       // alpha_s - 1 <= 0
      qp.B[2 * s] = 1.0 - x[s];
      qp.A(2 * s + 1, s) = -1.0;  // -alpha_s <= 0
      qp.B[2 * s + 1] = x[s];
    }
    qp.A_eq = Eigen::MatrixXd::Ones(1, n);
    qp.B_eq = Eigen::VectorXd::Constant(1, 1.0 - x.sum());

    const QpSolution qsol = solve_qp(qp, Eigen::VectorXd::Zero(n));
    gamma = qsol.ineq_multipliers;
    mu = qsol.eq_multipliers.size() > 0 ? qsol.eq_multipliers[0] : 0.0;
    rho = std::max({rho, 1.5 * std::abs(mu),
                    gamma.size() > 0 ? 1.5 * gamma.cwiseAbs().maxCoeff()
                                     : 0.0});

    double t = 0.0;
    int ls_evals = 0;
    if (qsol.s_star.norm() > 1e-15) {
      try {
        const LineSearchResult ls = merit_line_search(
            f_min, x, qsol.s_star, config.eps2, rho, config.alpha_floor);
        t = ls.t;
        ls_evals = ls.evals;
      } catch (const NoDecreaseError&) {
        t = 0.0;
      }
    }

    const Eigen::VectorXd x_next =
        t > 0.0 ? Eigen::VectorXd((x + t * qsol.s_star)
                                      .cwiseMax(config.alpha_floor)
                                      .cwiseMin(1.0))
                : x;
    const Eigen::VectorXd step = x_next - x;
    const double step_norm = step.norm();
    const Eigen::VectorXd g_next = g_min(x_next);

    if (step_norm > 1e-14) {
      const Eigen::VectorXd terms = lagrangian_terms(mu, gamma);
      const Eigen::VectorXd q = (g_next + terms) - (g + terms);
      H = bfgs_update(H, step, q);
    }

    const double f_next = f_min(x_next);
    const KktResiduals res =
        residuals_from_min_gradient(g_next, x_next, mu, gamma);
    report.trace.push_back({iter, -f_next * scale, step_norm, res.max(),
                            ls_evals, elapsed()});

    const bool small_step = step_norm <= config.sigma;
    const bool small_change =
        std::abs(f_next - fx) <= config.sigma * std::max(1.0, std::abs(f_next));
    const bool kkt_ok = res.max() <= config.sigma_kkt;

    x = x_next;
    g = g_next;
    fx = f_next;
    report.mu = mu;
    report.gamma = gamma;
    report.residuals = res;

    if (small_step && small_change && kkt_ok) {
      report.certified = true;
      report.status = SolveStatus::kCertified;
      break;
    }
    if (t == 0.0) {
      if (++stalls >= 2) {
        report.status = SolveStatus::kStalled;
        break;
      }
    } else {
      stalls = 0;
    }
  }

  report.alpha = x;
  report.objective_bps = problem.objective(x);
  report.wall_time_s = elapsed();
  return report;
}

SolverReport solve_bandwidth_sqp(const BandwidthProblem& problem,
                                 const SolverConfig& config) {
  const NlpProblem nlp = make_nlp(problem);
  SolverConfig cfg = config;
  if (cfg.start.size() == problem.device_count() &&
      nlp.n != problem.device_count()) {
    cfg.start = problem.reduce(cfg.start);
  }
  SolverReport report = solve_sqp(nlp, cfg);
  report.alpha = problem.expand(report.alpha);
  report.objective_bps = problem.capacity_bps(report.alpha);
  return report;
}

std::string trace_csv(const SolverReport& report) {
  std::ostringstream os;
  os << "iter,objective_bps,step_norm,kkt_residual,linesearch_evals,"
        "elapsed_s\n";
  char buf[256];
  for (const TraceRow& row : report.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.15g,%.15g,%.15g,%d,%.15g\n", row.iter,
                  row.objective_bps, row.step_norm, row.kkt_residual,
                  row.linesearch_evals, row.elapsed_s);
    os << buf;
  }
  return os.str();
}

}  // namespace railalloc
