#include "railalloc/allocators.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include "railalloc/errors.hpp"

namespace railalloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kShareFloor = 1e-12;

// Marginal utility (and its derivative) of one device's capacity term with
// respect to its own share. Written from scratch so the dual oracle does not
// share a code path with capacity_gradient, which it is used to certify.
double device_marginal(const BandwidthProblem& bp, int device, double share) {
  const DeviceLink& link = bp.device(device);
  const double w_total = bp.w_total_hz();
  const double n0 = bp.params().n0_w_per_hz;
  const double w = w_total * share;
  double sum = 0.0;
  for (double p : link.rx_power_w) {
    const double noise = n0 * w + link.interference_w;
    const double total = noise + p;
    sum += std::log(total / noise) - w * n0 * p / (noise * total);
  }
  const double mean = sum / static_cast<double>(link.rx_power_w.size());
  return (1.0 - bp.params().p_b) * bp.params().eta * w_total * mean /
         std::numbers::ln2;
}

double device_marginal_slope(const BandwidthProblem& bp, int device,
                             double share) {
  const DeviceLink& link = bp.device(device);
  const double w_total = bp.w_total_hz();
  const double n0 = bp.params().n0_w_per_hz;
  const double w = w_total * share;
  double sum = 0.0;
  for (double p : link.rx_power_w) {
    const double noise = n0 * w + link.interference_w;
    const double total = noise + p;
    sum += 2.0 * n0 * (1.0 / total - 1.0 / noise) +
           w * n0 * n0 * (1.0 / (noise * noise) - 1.0 / (total * total));
  }
  const double mean = sum / static_cast<double>(link.rx_power_w.size());
  return (1.0 - bp.params().p_b) * bp.params().eta * w_total * w_total * mean /
         std::numbers::ln2;
}

AllocatorResult make_result(const BandwidthProblem& bp,
                            const Eigen::VectorXd& alpha_full,
                            const char* method, double wall_s,
                            int iterations) {
  return AllocatorResult{AllocationVector(alpha_full),
                         bp.capacity_bps(alpha_full),
                         method,
                         wall_s,
                         iterations,
                         0.0};
}

}  // namespace

AllocationVector pnou(const Scenario& scenario) {
  const std::vector<int> counts = scenario.device_user_counts();
  const double m = static_cast<double>(scenario.users.size());
  if (m < 1.0) throw std::invalid_argument("pnou: scenario has no users");
  Eigen::VectorXd alpha(scenario.device_count());
  for (int s = 0; s < scenario.device_count(); ++s) {
    alpha[s] = static_cast<double>(counts[s]) / m;
  }
  return AllocationVector(alpha);
}

AllocationVector pd(const Scenario& scenario) {
  const auto by_device = scenario.users_by_device();
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(scenario.device_count());
  for (int s = 0; s < scenario.device_count(); ++s) {
    if (by_device[s].empty()) continue;
    double sum = 0.0;
    for (int user : by_device[s]) {
      sum += distance(scenario.device_position(s), scenario.users[user]);
    }
    const double mean = sum / static_cast<double>(by_device[s].size());
    if (mean == 0.0) {
      throw ZeroDistanceError("pd: a device has zero mean user distance");
    }
    weight[s] = 1.0 / mean;
  }
  const double total = weight.sum();
  if (!(total > 0.0)) throw std::invalid_argument("pd: no device has users");
  return AllocationVector(weight / total);
}

AllocatorResult ip_barrier(const BandwidthProblem& problem, double tol_bps,
                           const IpOptions& options) {
  const auto t0 = Clock::now();
  if (!(tol_bps > 0.0)) {
    throw std::invalid_argument("ip_barrier: tolerance must be positive");
  }
  const int nr = static_cast<int>(problem.active_devices().size());
  if (nr == 1) {
    return make_result(problem, problem.expand(Eigen::VectorXd::Ones(1)), "IP",
                       seconds_since(t0), 0);
  }

  const auto objective = [&](const Eigen::VectorXd& reduced) {
    return problem.capacity_bps(problem.expand(reduced));
  };
  const auto gradient = [&](const Eigen::VectorXd& reduced) {
    return problem.reduce(problem.gradient_bps(problem.expand(reduced)));
  };
  const auto hess_diag = [&](const Eigen::VectorXd& reduced) {
    return problem.reduce(problem.hessian_diag_bps(problem.expand(reduced)));
  };
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(nr, 1.0 / nr);
  const double scale = std::max(1.0, gradient(uniform).cwiseAbs().maxCoeff());

  const int ny = nr - 1;
  const auto assemble = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd a(nr);
    a[0] = 1.0 - y.sum();
    a.tail(ny) = y;
    return a;
  };
  const auto barrier_value = [&](const Eigen::VectorXd& a, double tau) {
    double barrier = 0.0;
    for (int i = 0; i < nr; ++i) {
      barrier += std::log(a[i]) + std::log(1.0 - a[i]);
    }
    return objective(a) / scale + tau * barrier;
  };

  Eigen::VectorXd y = Eigen::VectorXd::Constant(ny, 1.0 / nr);
  double tau = options.tau0;
  int newton_steps = 0;

  for (int outer = 1;; ++outer) {
    if (outer > options.max_outer) {
      throw MaxIterationsError("ip_barrier: barrier stages exhausted");
    }
    for (int inner = 0; inner < options.max_newton; ++inner) {
      const Eigen::VectorXd a = assemble(y);
      const Eigen::VectorXd g = gradient(a) / scale;
      const double a0 = a[0];
      const double bar0 = tau * (1.0 / a0 - 1.0 / (1.0 - a0));
      Eigen::VectorXd gy(ny);
      for (int i = 0; i < ny; ++i) {
        const double ai = y[i];
        gy[i] = (g[i + 1] - g[0]) + tau * (1.0 / ai - 1.0 / (1.0 - ai)) - bar0;
      }
      if (gy.cwiseAbs().maxCoeff() <= std::max(1e-11, 0.01 * tau)) break;

      const Eigen::VectorXd h = hess_diag(a) / scale;
      const double shared =
          h[0] - tau * (1.0 / (a0 * a0) + 1.0 / ((1.0 - a0) * (1.0 - a0)));
      Eigen::MatrixXd hy = Eigen::MatrixXd::Constant(ny, ny, shared);
      for (int i = 0; i < ny; ++i) {
        const double ai = y[i];
        hy(i, i) +=
            h[i + 1] - tau * (1.0 / (ai * ai) + 1.0 / ((1.0 - ai) * (1.0 - ai)));
      }
      const Eigen::VectorXd dir = Eigen::MatrixXd(-hy).ldlt().solve(gy);
      const double slope = gy.dot(dir);
      const double phi0 = barrier_value(a, tau);
      double step = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const Eigen::VectorXd y_trial = y + step * dir;
        const Eigen::VectorXd a_trial = assemble(y_trial);
        if (a_trial.minCoeff() > 0.0 && a_trial.maxCoeff() < 1.0 &&
            barrier_value(a_trial, tau) >= phi0 + 1e-4 * step * slope) {
          y = y_trial;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++newton_steps;
      if (!moved) break;
    }
    if (2.0 * nr * tau * scale <= tol_bps) break;
    tau *= options.shrink;
  }

  return make_result(problem, problem.expand(assemble(y)), "IP",
                     seconds_since(t0), newton_steps);
}

AllocatorResult dual_oracle(const BandwidthProblem& problem, double tol) {
  const auto t0 = Clock::now();
  if (!(tol > 0.0)) {
    throw std::invalid_argument("dual_oracle: tolerance must be positive");
  }
  const std::vector<int>& act = problem.active_devices();
  const int nr = static_cast<int>(act.size());

  if (nr == 1) {
    AllocatorResult res = make_result(
        problem, problem.expand(Eigen::VectorXd::Ones(1)), "DUAL",
        seconds_since(t0), 0);
    res.dual_mu_bps = device_marginal(problem, act[0], 1.0);
    return res;
  }

  // share solving marginal(s, x) = mu, clipped to [floor, 1]
  const auto share_for = [&](int s, double mu) {
    if (device_marginal(problem, s, 1.0) >= mu) return 1.0;
    if (device_marginal(problem, s, kShareFloor) <= mu) return kShareFloor;
    double lo = kShareFloor;
    double hi = 1.0;
    double x = 0.5;
    for (int it = 0; it < 100; ++it) {
      const double r = device_marginal(problem, s, x) - mu;
      if (std::abs(r) <= 1e-13 * std::max(1.0, std::abs(mu))) break;
      if (r > 0.0) {
        lo = x;
      } else {
        hi = x;
      }
      if (hi - lo <= 1e-16) break;
      const double dr = device_marginal_slope(problem, s, x);
      double next = dr < 0.0 ? x - r / dr : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      x = next;
    }
    return x;
  };

  double mu_lo = std::numeric_limits<double>::infinity();
  double mu_hi = 0.0;
  for (int s : act) {
    mu_lo = std::min(mu_lo, device_marginal(problem, s, 1.0));
    mu_hi = std::max(mu_hi, device_marginal(problem, s, kShareFloor));
  }
  mu_lo *= 0.5;
  if (!(mu_hi > mu_lo)) {
    throw BracketFailureError(
        "dual_oracle: marginal utilities cannot bracket the multiplier");
  }

  Eigen::VectorXd shares(nr);
  double mu = 0.0;
  int iterations = 0;
  double imbalance = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 300; ++it) {
    ++iterations;
    mu = 0.5 * (mu_lo + mu_hi);
    for (int j = 0; j < nr; ++j) shares[j] = share_for(act[j], mu);
    imbalance = shares.sum() - 1.0;
    if (std::abs(imbalance) <= tol) break;
    if (imbalance > 0.0) {
      mu_lo = mu;
    } else {
      mu_hi = mu;
    }
    if (mu_hi - mu_lo <= 1e-15 * std::max(1.0, mu_hi)) break;
  }
  if (std::abs(imbalance) > 1e-9) {
    throw MaxIterationsError("dual_oracle: bisection failed to balance");
  }

  AllocatorResult res = make_result(problem, problem.expand(shares), "DUAL",
                                    seconds_since(t0), iterations);
  res.dual_mu_bps = mu;
  return res;
}

AllocatorResult grid_oracle(const BandwidthProblem& problem, double step) {
  const auto t0 = Clock::now();
  const std::vector<int>& act = problem.active_devices();
  const int nr = static_cast<int>(act.size());
  if (nr > 4) {
    throw TooLargeInstanceError("grid_oracle: more than 4 active devices");
  }
  if (!(step >= 1e-3 && step <= 1.0)) {
    throw std::invalid_argument("grid_oracle: step must lie in [1e-3, 1]");
  }
  const long divisions = std::lround(1.0 / step);

  if (nr == 1) {
    return make_result(problem, problem.expand(Eigen::VectorXd::Ones(1)),
                       "GRID", seconds_since(t0), 1);
  }

  // Per-device value tables turn each lattice evaluation into nr lookups.
  std::vector<std::vector<double>> table(nr);
  for (int j = 0; j < nr; ++j) {
    const DeviceLink& link = problem.device(act[j]);
    table[j].resize(divisions + 1);
    for (long c = 0; c <= divisions; ++c) {
      table[j][c] = device_avg_rate_from_powers(
          link.rx_power_w, link.interference_w,
          problem.w_total_hz() * (static_cast<double>(c) / divisions),
          problem.params());
    }
  }

  struct Best {
    double value = -std::numeric_limits<double>::infinity();
    std::array<long, 4> counts{};
    long points = 0;
  };
  const auto consider = [&](Best& best, const std::array<long, 4>& counts) {
    double value = 0.0;
    for (int j = 0; j < nr; ++j) value += table[j][counts[j]];
    ++best.points;
    if (value > best.value ||
        (value == best.value &&
         std::lexicographical_compare(counts.begin(), counts.begin() + nr,
                                      best.counts.begin(),
                                      best.counts.begin() + nr))) {
      best.value = value;
      best.counts = counts;
    }
  };
  const auto scan_range = [&](long c0_lo, long c0_hi, Best& best) {
    std::array<long, 4> c{};
    for (long c0 = c0_lo; c0 < c0_hi; ++c0) {
      c[0] = c0;
      const long rem1 = divisions - c0;
      if (nr == 2) {
        c[1] = rem1;
        consider(best, c);
        continue;
      }
      for (long c1 = 0; c1 <= rem1; ++c1) {
        c[1] = c1;
        const long rem2 = rem1 - c1;
        if (nr == 3) {
          c[2] = rem2;
          consider(best, c);
          continue;
        }
        for (long c2 = 0; c2 <= rem2; ++c2) {
          c[2] = c2;
          c[3] = rem2 - c2;
          consider(best, c);
        }
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const long span = divisions + 1;
  const unsigned workers =
      static_cast<unsigned>(std::min<long>(hw, std::max<long>(1, span / 8)));
  std::vector<Best> partial(workers);
  if (workers <= 1) {
    scan_range(0, span, partial[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      const long lo = span * w / workers;
      const long hi = span * (w + 1) / workers;
      pool.emplace_back(
          [&, lo, hi, w] { scan_range(lo, hi, partial[w]); });
    }
    for (auto& th : pool) th.join();
  }
  Best best;
  long total_points = 0;
  for (const Best& cand : partial) {  // merge in fixed order
    total_points += cand.points;
    if (cand.points == 0) continue;
    if (cand.value > best.value ||
        (cand.value == best.value &&
         std::lexicographical_compare(cand.counts.begin(),
                                      cand.counts.begin() + nr,
                                      best.counts.begin(),
                                      best.counts.begin() + nr))) {
      best.value = cand.value;
      best.counts = cand.counts;
    }
  }

  Eigen::VectorXd shares(nr);
  for (int j = 0; j < nr; ++j) {
    shares[j] = static_cast<double>(best.counts[j]) / divisions;
  }
  AllocatorResult res = make_result(problem, problem.expand(shares), "GRID",
                                    seconds_since(t0),
                                    static_cast<int>(
                                        std::min<long>(total_points,
                                                       std::numeric_limits<int>::max())));
  return res;
}

}  // namespace railalloc
