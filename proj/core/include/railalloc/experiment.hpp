#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "railalloc/radio.hpp"
#include "railalloc/sqp.hpp"

namespace railalloc {

// Line-oriented `key = value` configuration with [layout], [radio],
// [solver], and [sweep] sections. Unknown sections or keys are rejected
// with a message naming them; every field is range-checked on load.
struct ExperimentConfig {
  // [layout]
  double area_side_m = 500.0;
  int rnum = 9;
  int users = 200;
  double bs_offset_m = 50.0;
  double rail_offset_m = 50.0;

  // [radio]
  double carrier_ghz = 60.0;
  double path_loss_exp = 2.0;
  double pt_mw = 1000.0;
  double eta = 0.5;
  double n0_dbm_per_mhz = -134.0;
  double theta_3db_deg = 30.0;
  double p_b = 0.2;
  double beta = 1e-7;  // self-interference level for single-beta runs

  // [solver]
  double sigma = 1e-9;
  double sigma_kkt = 1e-6;
  double eps1 = 1e-9;
  double eps2 = 1e-4;
  double alpha_floor = 1e-12;
  int max_iters = 100;
  double ip_tol_bps = 100.0;

  // [sweep]
  std::vector<double> bandwidths_mhz = {1000, 1100, 1200, 1300, 1400,
                                        1500, 1600, 1700, 1800, 1900};
  std::vector<double> betas = {1e-12, 1e-11, 1e-10, 1e-9, 1e-8,
                               1e-7,  1e-6,  1e-5,  1e-4, 1e-3};
  double fixed_bandwidth_mhz = 1200.0;
  std::vector<std::uint64_t> seeds = {1};
  int groups = 10;
  std::vector<std::string> methods = {"sqp", "pnou", "pd"};

  void validate() const;
  RadioParams radio_params(double beta_value) const;
  SolverConfig solver_config() const;
  Scenario scenario_for_seed(std::uint64_t seed) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct SweepRow {
  std::string sweep_var;
  double value = 0.0;
  std::string method;
  double capacity_bps = 0.0;
  Eigen::VectorXd alpha;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  bool certified = true;  // internal, not emitted
};

// One row per (bandwidth, method, seed); the scenario for a seed is shared
// across all bandwidth points. Uses the config's single beta value.
std::vector<SweepRow> run_bandwidth_sweep(const ExperimentConfig& config);

// One row per (beta, method, seed) at the fixed bandwidth.
std::vector<SweepRow> run_beta_sweep(const ExperimentConfig& config);

// SQP vs IP on `groups` fresh scenario seeds plus one trailing averages row
// per method (value = groups + 1, seed = 0, empty alpha). Runs sequentially
// so wall times are comparable.
std::vector<SweepRow> run_solver_comparison(const ExperimentConfig& config);

// Header `sweep_var,value,method,capacity_bps,iterations,wall_time_s,seed,
// alpha_json`; 15 significant digits; rows sorted by (value, method, seed).
// Refuses an empty row list without creating the file.
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::string rows_to_csv(std::vector<SweepRow> rows);

// splitmix64-style derivation for per-cell and per-group RNG streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct CertifyRecord {
  std::uint64_t seed = 0;
  double beta = 0.0;
  double sqp_bps = 0.0;
  double dual_bps = 0.0;
  double grid_bps = 0.0;
  double kkt_residual = 0.0;
  bool certified = false;
  bool agree = false;
};

struct CertifyOutcome {
  std::vector<CertifyRecord> records;
  bool all_ok = false;
};

// Cross-checks the SQP result against the dual-bisection and grid oracles
// on randomly generated instances with the given device count.
CertifyOutcome run_certification(const ExperimentConfig& config, int devices,
                                 int instances, double grid_step = 1e-3);

}  // namespace railalloc
