#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "railalloc/allocators.hpp"
#include "railalloc/errors.hpp"
#include "railalloc/problem.hpp"
#include "railalloc/sqp.hpp"

using namespace railalloc;

namespace {

Scenario two_device_counts(int bs_users, int mr_users) {
  Scenario sc;
  sc.area_side = 500.0;
  sc.bs_position = {100.0, 250.0};
  sc.mr_positions = {{400.0, 250.0}};
  for (int i = 0; i < bs_users; ++i) {
    sc.users.push_back({110.0 + i, 250.0});
    sc.association.push_back(0);
  }
  for (int i = 0; i < mr_users; ++i) {
    sc.users.push_back({390.0 - i, 250.0});
    sc.association.push_back(1);
  }
  return sc;
}

Scenario symmetric_pair() {
  Scenario sc;
  sc.area_side = 500.0;
  sc.bs_position = {100.0, 250.0};
  sc.mr_positions = {{400.0, 250.0}};
  sc.users = {{50.0, 250.0}, {450.0, 250.0}, {120.0, 300.0}, {380.0, 300.0}};
  sc.association = {0, 1, 0, 1};
  return sc;
}

RadioParams params_with_beta(double beta) {
  return make_radio_params(60e9, 2.0, 1.0, 0.5, -134.0, beta, 0.2, 30.0);
}

}  // namespace

TEST_CASE("pnou is proportional to user counts") {
  const AllocationVector a = pnou(two_device_counts(3, 1));
  CHECK(a[0] == doctest::Approx(0.75));
  CHECK(a[1] == doctest::Approx(0.25));

  const AllocationVector all_bs = pnou(two_device_counts(4, 0));
  CHECK(all_bs[0] == 1.0);
  CHECK(all_bs[1] == 0.0);

  const AllocationVector even = pnou(two_device_counts(2, 2));
  CHECK(even[0] == doctest::Approx(0.5));
  CHECK(even[1] == doctest::Approx(0.5));
}

TEST_CASE("pd weights devices by inverse mean distance") {
  Scenario sc;
  sc.area_side = 500.0;
  sc.bs_position = {0.0, 0.0};
  sc.mr_positions = {{400.0, 0.0}};
  sc.users = {{100.0, 0.0}, {350.0, 0.0}};  // distances 100 and 50
  sc.association = {0, 1};
  const AllocationVector a = pd(sc);
  CHECK(a[0] == doctest::Approx(1.0 / 3.0));
  CHECK(a[1] == doctest::Approx(2.0 / 3.0));

  // equal mean distances -> uniform
  const AllocationVector even = pd(symmetric_pair());
  CHECK(even[0] == doctest::Approx(0.5));
  CHECK(even[1] == doctest::Approx(0.5));

  // a user-less device gets nothing
  const AllocationVector skewed = pd(two_device_counts(4, 0));
  CHECK(skewed[1] == 0.0);
  CHECK(skewed[0] == doctest::Approx(1.0));

  // user exactly at the device
  Scenario zero = sc;
  zero.users[0] = zero.bs_position;
  CHECK_THROWS_AS(pd(zero), ZeroDistanceError);
}

TEST_CASE("greedy rules never read the interference level") {
  const Scenario sc = make_scenario(500.0, 9, 50.0, 50.0, 200, 31);
  const AllocationVector a = pnou(sc);
  const AllocationVector b = pd(sc);
  for (double beta : {1e-12, 1e-3}) {
    const BandwidthProblem bp =
        BandwidthProblem::build(sc, 1.2e9, params_with_beta(beta));
    // the split is a function of the scenario alone; only capacity moves
    CHECK(bp.capacity_bps(a.values()) > 0.0);
    CHECK(bp.capacity_bps(b.values()) > 0.0);
  }
}

TEST_CASE("ip_barrier splits a symmetric instance evenly") {
  const BandwidthProblem bp =
      BandwidthProblem::build(symmetric_pair(), 1e9, params_with_beta(0.0));
  const AllocatorResult res = ip_barrier(bp, 1.0);
  CHECK(res.alpha[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(res.alpha[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(res.method == "IP");
}

TEST_CASE("ip_barrier agrees with the SQP solve to within a kilobit") {
  const Scenario sc = make_scenario(500.0, 9, 50.0, 50.0, 200, 41);
  const BandwidthProblem bp =
      BandwidthProblem::build(sc, 1.2e9, params_with_beta(1e-7));
  const SolverReport sqp = solve_bandwidth_sqp(bp, SolverConfig{});
  const AllocatorResult ip = ip_barrier(bp, 100.0);
  CHECK(sqp.certified);
  CHECK(std::abs(sqp.objective_bps - ip.objective_bps) <= 1e3);
}

TEST_CASE("a dominating barrier weight pins the split near uniform") {
  const Scenario sc = make_scenario(500.0, 3, 50.0, 50.0, 60, 43);
  const BandwidthProblem bp =
      BandwidthProblem::build(sc, 1.2e9, params_with_beta(1e-7));
  IpOptions opt;
  opt.tau0 = 1e6;
  // a huge tolerance stops after the first barrier stage
  const AllocatorResult res = ip_barrier(bp, 1e30, opt);
  const int n = static_cast<int>(bp.active_devices().size());
  for (int s : bp.active_devices()) {
    CHECK(res.alpha[s] == doctest::Approx(1.0 / n).epsilon(1e-3));
  }
}

TEST_CASE("dual oracle degenerate and symmetric cases") {
  // single active device takes everything
  const Scenario solo = two_device_counts(4, 0);
  const BandwidthProblem bp_solo =
      BandwidthProblem::build(solo, 1e9, params_with_beta(1e-9));
  const AllocatorResult r_solo = dual_oracle(bp_solo, 1e-12);
  CHECK(r_solo.alpha[0] == 1.0);
  CHECK(r_solo.alpha[1] == 0.0);

  const BandwidthProblem bp_sym =
      BandwidthProblem::build(symmetric_pair(), 1e9, params_with_beta(0.0));
  const AllocatorResult r_sym = dual_oracle(bp_sym, 1e-12);
  CHECK(r_sym.alpha[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r_sym.alpha[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("dual oracle and grid oracle certify each other") {
  for (int seed : {51, 52, 53}) {
    const Scenario sc = make_scenario(500.0, 2, 50.0, 50.0, 30, seed);
    const BandwidthProblem bp =
        BandwidthProblem::build(sc, 1.2e9, params_with_beta(1e-13));
    const AllocatorResult dual = dual_oracle(bp, 1e-12);
    const AllocatorResult grid = grid_oracle(bp, 1e-3);
    const double ref = std::abs(dual.objective_bps);
    // the lattice cannot beat the continuous optimum
    CHECK(grid.objective_bps <= dual.objective_bps + 1e-6 * ref);
    // and sits within an empirical Lipschitz bound of it
    const Eigen::VectorXd probe =
        dual.alpha.values().cwiseMax(1e-3).eval();
    const double lipschitz = bp.gradient_bps(probe).norm();
    const int nr = static_cast<int>(bp.active_devices().size());
    CHECK(dual.objective_bps - grid.objective_bps <=
          std::max(lipschitz * 1e-3 * std::sqrt(2.0 * nr), 1e-9 * ref));
  }
}

TEST_CASE("grid oracle lattice structure") {
  const BandwidthProblem bp =
      BandwidthProblem::build(symmetric_pair(), 1e9, params_with_beta(0.0));
  const AllocatorResult res = grid_oracle(bp, 1e-3);
  CHECK(res.alpha[0] == doctest::Approx(0.5));
  CHECK(res.alpha[1] == doctest::Approx(0.5));
  CHECK(res.iterations == 1001);

  // step = 1 scans the simplex vertices only
  const AllocatorResult vertices = grid_oracle(bp, 1.0);
  CHECK(vertices.iterations == 2);
  CHECK(vertices.alpha.values().maxCoeff() == 1.0);

  CHECK_THROWS_AS(grid_oracle(bp, 1e-4), std::invalid_argument);

  const Scenario big = make_scenario(500.0, 9, 50.0, 50.0, 100, 61);
  const BandwidthProblem bp_big =
      BandwidthProblem::build(big, 1.2e9, params_with_beta(1e-9));
  CHECK_THROWS_AS(grid_oracle(bp_big, 1e-2), TooLargeInstanceError);
}

TEST_CASE("allocator results recompute to their stored objective") {
  const Scenario sc = make_scenario(500.0, 3, 50.0, 50.0, 50, 67);
  const BandwidthProblem bp =
      BandwidthProblem::build(sc, 1.2e9, params_with_beta(1e-9));
  for (const AllocatorResult& res :
       {ip_barrier(bp, 100.0), dual_oracle(bp, 1e-12), grid_oracle(bp, 1e-2)}) {
    const double recomputed = bp.capacity_bps(res.alpha.values());
    CHECK(std::abs(res.objective_bps - recomputed) <=
          1e-9 * std::abs(recomputed));
  }
}

TEST_CASE("optimized split dominates both greedy rules") {
  for (int seed : {1, 2, 3}) {
    const Scenario sc = make_scenario(500.0, 9, 50.0, 50.0, 200, seed);
    const BandwidthProblem bp =
        BandwidthProblem::build(sc, 1.2e9, params_with_beta(1e-7));
    const SolverReport sqp = solve_bandwidth_sqp(bp, SolverConfig{});
    const double f_pnou = bp.capacity_bps(pnou(sc).values());
    const double f_pd = bp.capacity_bps(pd(sc).values());
    CHECK(sqp.certified);
    CHECK(sqp.objective_bps > f_pnou);
    CHECK(f_pnou > f_pd);
  }
}
