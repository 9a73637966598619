// Acceptance suite: end-to-end checks of the allocation pipeline against
// oracles, trend properties, and the CLI determinism contract. Prints one
// PASS/FAIL line per criterion and exits nonzero if any fail.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "railalloc/allocators.hpp"
#include "railalloc/experiment.hpp"
#include "railalloc/problem.hpp"
#include "railalloc/radio.hpp"
#include "railalloc/sqp.hpp"

using namespace railalloc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Shared {
  std::vector<SweepRow> bandwidth_rows;  // 20 seeds x 10 W x {SQP,PNOU,PD}
  std::vector<SweepRow> beta_rows;       // 5 seeds x 10 beta x {SQP,PNOU,PD}
  std::vector<SweepRow> compare_rows;    // 10 groups x {SQP,IP} + averages
  double bandwidth_elapsed_s = 0.0;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ExperimentConfig base_config() { return ExperimentConfig{}; }

void fail(Outcome& out, const std::string& msg) {
  out.pass = false;
  if (!out.detail.empty()) out.detail += "; ";
  out.detail += msg;
}

// ---- criterion 1: oracle equivalence on 3-device instances --------------

Outcome oracle_equivalence() {
  Outcome out;
  const auto t0 = Clock::now();
  const std::vector<double> beta_cycle = {0.0,  1e-14, 1e-13, 1e-12,
                                          1e-9, 1e-6,  1e-3};
  int done = 0;
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t seed = derive_seed(4242, i);
    const double beta = beta_cycle[i % beta_cycle.size()];
    const Scenario sc = make_scenario(500.0, 2, 50.0, 50.0, 12, seed);
    const RadioParams params =
        make_radio_params(60e9, 2.0, 1.0, 0.5, -134.0, beta, 0.2, 30.0);
    const BandwidthProblem bp = BandwidthProblem::build(sc, 1.2e9, params);

    const SolverReport sqp = solve_bandwidth_sqp(bp, SolverConfig{});
    const AllocatorResult dual = dual_oracle(bp, 1e-12);
    const AllocatorResult grid = grid_oracle(bp, 1e-3);
    ++done;

    const double ref = std::max(1.0, std::abs(dual.objective_bps));
    if (!sqp.certified) {
      fail(out, "instance " + std::to_string(i) + " not certified");
    }
    if (std::abs(sqp.objective_bps - dual.objective_bps) > 1e-6 * ref) {
      fail(out, "instance " + std::to_string(i) + " sqp/dual gap " +
                    fmt(std::abs(sqp.objective_bps - dual.objective_bps)));
    }
    const Eigen::VectorXd probe = dual.alpha.values().cwiseMax(1e-3).eval();
    const double lipschitz = bp.gradient_bps(probe).norm();
    const int nr = static_cast<int>(bp.active_devices().size());
    const double bound =
        std::max(lipschitz * 1e-3 * std::sqrt(2.0 * nr), 1e-9 * ref);
    if (grid.objective_bps > dual.objective_bps + 1e-6 * ref ||
        dual.objective_bps - grid.objective_bps > bound) {
      fail(out, "instance " + std::to_string(i) + " dual/grid gap " +
                    fmt(dual.objective_bps - grid.objective_bps) +
                    " exceeds bound " + fmt(bound));
    }
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (elapsed > 60.0) fail(out, "runtime " + fmt(elapsed) + " s > 60 s");
  if (out.pass) {
    out.detail = std::to_string(done) + " instances, " + fmt(elapsed) + " s";
  }
  return out;
}

// ---- criterion 2: KKT certification on full-size instances ---------------

Outcome kkt_certification(const Shared& shared) {
  Outcome out;
  int solves = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (double beta : {1e-12, 1e-7, 1e-3}) {
      const Scenario sc = make_scenario(500.0, 9, 50.0, 50.0, 200, seed);
      const RadioParams params =
          make_radio_params(60e9, 2.0, 1.0, 0.5, -134.0, beta, 0.2, 30.0);
      const BandwidthProblem bp = BandwidthProblem::build(sc, 1.2e9, params);
      const SolverReport rep = solve_bandwidth_sqp(bp, SolverConfig{});
      ++solves;
      const KktResiduals& r = rep.residuals;
      const bool ok = rep.certified && r.stationarity <= 1e-6 &&
                      r.complementarity <= 1e-6 && r.primal_ineq <= 1e-6 &&
                      r.primal_eq <= 1e-6 && r.dual_feasibility <= 1e-6;
      if (!ok) {
        fail(out, "seed " + std::to_string(seed) + " beta " + fmt(beta) +
                      " residual " + fmt(r.max()));
      }
    }
  }
  // every sweep solve must have certified as well
  for (const SweepRow& row : shared.bandwidth_rows) {
    if (row.method == "SQP" && !row.certified) {
      fail(out, "uncertified sweep row at W " + fmt(row.value));
    }
  }
  for (const SweepRow& row : shared.beta_rows) {
    if (row.method == "SQP" && !row.certified) {
      fail(out, "uncertified sweep row at beta " + fmt(row.value));
    }
  }
  if (out.pass) {
    out.detail = std::to_string(solves) + " dedicated solves + " +
                 "all sweep rows certified at 1e-6";
  }
  return out;
}

// ---- criterion 3: analytic gradient vs central differences ---------------

Outcome gradient_correctness() {
  Outcome out;
  const Scenario sc = make_scenario(500.0, 9, 50.0, 50.0, 200, 1);
  const RadioParams params =
      make_radio_params(60e9, 2.0, 1.0, 0.5, -134.0, 1e-9, 0.2, 30.0);
  const double w = 1.2e9;
  const int n = sc.device_count();
  std::mt19937_64 rng(777);
  const auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    Eigen::VectorXd alpha(n);
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      alpha[s] = 0.02 + unit();
      sum += alpha[s];
    }
    alpha /= sum;
    const Eigen::VectorXd grad = capacity_gradient(sc, alpha, w, params);
    const int s = point % n;  // one random coordinate per point
    const double h = 1e-6;
    Eigen::VectorXd up = alpha;
    Eigen::VectorXd dn = alpha;
    up[s] += h;
    dn[s] -= h;
    const double fd =
        (network_capacity(sc, up, w, params) -
         network_capacity(sc, dn, w, params)) /
        (2.0 * h);
    const double rel = std::abs(grad[s] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, rel);
  }
  if (worst > 1e-6) fail(out, "worst relative error " + fmt(worst));
  if (out.pass) out.detail = "100 points, worst relative error " + fmt(worst);
  return out;
}

// ---- criterion 4: bandwidth sweep trend -----------------------------------

Outcome bandwidth_trend(const Shared& shared) {
  Outcome out;
  std::map<std::uint64_t, std::vector<std::pair<double, double>>> per_seed;
  std::vector<double> caps_at_1200;
  for (const SweepRow& row : shared.bandwidth_rows) {
    if (row.method != "SQP") continue;
    per_seed[row.seed].push_back({row.value, row.capacity_bps});
    if (row.value == 1200.0) caps_at_1200.push_back(row.capacity_bps);
  }
  if (per_seed.size() != 20) fail(out, "expected 20 seeds");
  double worst_r2 = 1.0;
  for (auto& [seed, points] : per_seed) {
    std::sort(points.begin(), points.end());
    double sw = 0.0;
    double sc_ = 0.0;
    double sww = 0.0;
    double swc = 0.0;
    const int n = static_cast<int>(points.size());
    for (const auto& [w, c] : points) {
      sw += w;
      sc_ += c;
      sww += w * w;
      swc += w * c;
    }
    const double slope = (n * swc - sw * sc_) / (n * sww - sw * sw);
    const double intercept = (sc_ - slope * sw) / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    const double mean = sc_ / n;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double fitted = slope * points[i].first + intercept;
      ss_res += (points[i].second - fitted) * (points[i].second - fitted);
      ss_tot += (points[i].second - mean) * (points[i].second - mean);
      if (i > 0 && points[i].second <= points[i - 1].second) {
        fail(out, "seed " + std::to_string(seed) + " not strictly increasing");
      }
    }
    const double r2 = 1.0 - ss_res / ss_tot;
    worst_r2 = std::min(worst_r2, r2);
    if (r2 < 0.995) {
      fail(out, "seed " + std::to_string(seed) + " R^2 " + fmt(r2));
    }
  }
  double mean1200 = 0.0;
  for (double c : caps_at_1200) mean1200 += c;
  mean1200 /= caps_at_1200.size();
  if (!(mean1200 >= 8e9 && mean1200 <= 14e9)) {
    fail(out, "mean capacity at 1200 MHz " + fmt(mean1200) + " outside [8e9, 14e9]");
  }
  if (shared.bandwidth_elapsed_s > 300.0) {
    fail(out, "sweep runtime " + fmt(shared.bandwidth_elapsed_s) + " s > 300 s");
  }
  if (out.pass) {
    out.detail = "worst R^2 " + fmt(worst_r2) + ", mean@1200MHz " +
                 fmt(mean1200 / 1e9) + " Gbps, " +
                 fmt(shared.bandwidth_elapsed_s) + " s";
  }
  return out;
}

// ---- criterion 5: method ordering ----------------------------------------

Outcome method_ordering(const Shared& shared) {
  Outcome out;
  std::map<std::pair<double, std::uint64_t>, std::map<std::string, double>>
      cells;
  for (const SweepRow& row : shared.bandwidth_rows) {
    cells[{row.value, row.seed}][row.method] = row.capacity_bps;
  }
  int checked = 0;
  for (const auto& [key, methods] : cells) {
    const double sqp = methods.at("SQP");
    const double pnou = methods.at("PNOU");
    const double pd = methods.at("PD");
    ++checked;
    if (!(sqp > pnou && pnou > pd)) {
      fail(out, "ordering violated at W " + fmt(key.first) + " seed " +
                    std::to_string(key.second));
    }
  }
  if (out.pass) {
    out.detail = "SQP > PNOU > PD at all " + std::to_string(checked) +
                 " (W, seed) cells";
  }
  return out;
}

// ---- criterion 6: robustness to the SI level ------------------------------

Outcome beta_robustness(const Shared& shared) {
  Outcome out;
  std::map<std::uint64_t, std::map<std::string, std::map<double, double>>>
      per_seed;
  for (const SweepRow& row : shared.beta_rows) {
    per_seed[row.seed][row.method][row.value] = row.capacity_bps;
  }
  double worst_var = 0.0;
  double least_drop = 1.0;
  for (const auto& [seed, methods] : per_seed) {
    const auto& sqp = methods.at("SQP");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& [beta, cap] : sqp) {
      if (beta < 1e-11 || beta > 1e-3) continue;
      lo = std::min(lo, cap);
      hi = std::max(hi, cap);
    }
    const double variation = (hi - lo) / hi;
    worst_var = std::max(worst_var, variation);
    if (variation > 0.05) {
      fail(out, "seed " + std::to_string(seed) + " SQP variation " +
                    fmt(variation));
    }
    for (const char* name : {"PNOU", "PD"}) {
      const auto& caps = methods.at(name);
      double prev = std::numeric_limits<double>::infinity();
      for (const auto& [beta, cap] : caps) {  // map is beta-ascending
        if (cap > prev * (1.0 + 1e-12)) {
          fail(out, std::string(name) + " not non-increasing at beta " +
                        fmt(beta) + " seed " + std::to_string(seed));
        }
        prev = cap;
      }
      const double drop = 1.0 - caps.at(1e-5) / caps.at(1e-12);
      least_drop = std::min(least_drop, drop);
      if (drop < 0.40) {
        fail(out, std::string(name) + " drop " + fmt(drop) + " < 40% seed " +
                      std::to_string(seed));
      }
    }
  }
  if (out.pass) {
    out.detail = "worst SQP variation " + fmt(worst_var) +
                 ", least greedy drop " + fmt(least_drop);
  }
  return out;
}

// ---- criterion 7: allocation structure across SI regimes ------------------

Outcome allocation_structure(const Shared& shared) {
  Outcome out;
  for (const SweepRow& row : shared.beta_rows) {
    if (row.method != "SQP") continue;
    const Eigen::VectorXd& alpha = row.alpha;
    const int mrs = static_cast<int>(alpha.size()) - 1;
    if (row.value == 1e-3) {
      if (!(alpha[0] >= 0.999)) {
        fail(out, "beta 1e-3 seed " + std::to_string(row.seed) +
                      ": alpha0 " + fmt(alpha[0]) + " < 0.999");
      }
      for (int s = 1; s <= mrs; ++s) {
        if (!(alpha[s] <= 1e-6)) {
          fail(out, "beta 1e-3 seed " + std::to_string(row.seed) +
                        ": MR share " + fmt(alpha[s]) + " > 1e-6");
        }
      }
    }
    if (row.value == 1e-9 || row.value == 1e-6) {
      const bool interior = alpha[0] > 0.0 && alpha[0] < 1.0;
      int funded = 0;
      for (int s = 1; s <= mrs; ++s) {
        if (alpha[s] >= 1e-3) ++funded;
      }
      if (!interior || funded < (mrs + 1) / 2) {
        fail(out, "beta " + fmt(row.value) + " seed " +
                      std::to_string(row.seed) + ": alpha0 " + fmt(alpha[0]) +
                      ", MRs with share >= 1e-3: " + std::to_string(funded) +
                      " of " + std::to_string(mrs));
      }
    }
  }
  if (out.pass) out.detail = "vertex at 1e-3, interior split at 1e-9/1e-6";
  return out;
}

// ---- criteria 8 and 9: solver agreement and cost --------------------------

Outcome solver_agreement(const Shared& shared) {
  Outcome out;
  const int groups = base_config().groups;
  double worst_gap = 0.0;
  for (int g = 1; g <= groups; ++g) {
    double sqp = 0.0;
    double ip = 0.0;
    for (const SweepRow& row : shared.compare_rows) {
      if (row.value != g) continue;
      if (row.method == "SQP") sqp = row.capacity_bps;
      if (row.method == "IP") ip = row.capacity_bps;
    }
    const double gap = std::abs(sqp - ip);
    worst_gap = std::max(worst_gap, gap);
    if (gap > 1e3) {
      fail(out, "group " + std::to_string(g) + " gap " + fmt(gap) + " bps");
    }
  }
  if (out.pass) out.detail = "worst |f_SQP - f_IP| " + fmt(worst_gap) + " bps";
  return out;
}

Outcome convergence_cost(const Shared& shared) {
  Outcome out;
  const int groups = base_config().groups;
  double sqp_avg = 0.0;
  double ip_avg = 0.0;
  for (const SweepRow& row : shared.compare_rows) {
    if (row.value != groups + 1) continue;
    if (row.method == "SQP") sqp_avg = row.wall_time_s;
    if (row.method == "IP") ip_avg = row.wall_time_s;
  }
  if (!(sqp_avg <= ip_avg)) {
    fail(out, "avg SQP time " + fmt(sqp_avg) + " s > avg IP time " +
                  fmt(ip_avg) + " s");
  }
  for (const SweepRow& row : shared.compare_rows) {
    if (row.method != "SQP" || row.value > groups) continue;
    if (!row.certified || row.iterations > 100) {
      fail(out, "group " + fmt(row.value) + ": iterations " +
                    std::to_string(row.iterations) + ", certified " +
                    (row.certified ? "yes" : "no"));
    }
  }
  if (out.pass) {
    out.detail = "avg SQP " + fmt(sqp_avg) + " s vs avg IP " + fmt(ip_avg) +
                 " s, all groups certified within 100 iterations";
  }
  return out;
}

// ---- criterion 10: antenna model closed forms ------------------------------

Outcome antenna_closed_forms() {
  Outcome out;
  const AntennaModel a = make_antenna(30.0);
  const double g0 = gain_db(0.0, a);
  const double g90 = gain_db(90.0, a);
  const double g15 = gain_db(15.0, a);
  if (std::abs(g0 - 15.91) > 0.01) fail(out, "G(0) " + fmt(g0));
  if (std::abs(g90 + 11.98) > 0.01) fail(out, "G(90) " + fmt(g90));
  if (g15 != a.g0_db - 3.01) fail(out, "G(15) not exactly G0 - 3.01");
  if (out.pass) {
    out.detail = "G(0) " + fmt(g0) + " dB, G(90) " + fmt(g90) +
                 " dB, G(15) = G0 - 3.01 exactly";
  }
  return out;
}

// ---- criterion 11: CLI determinism -----------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// strips the wall_time_s column (index 5) from every CSV row
std::string mask_timing(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::string out;
  while (std::getline(is, line)) {
    int commas = 0;
    std::string masked;
    bool quoted = false;
    int field = 0;
    for (char ch : line) {
      if (ch == '"') quoted = !quoted;
      if (ch == ',' && !quoted) {
        ++commas;
        field = commas;
      }
      if (field != 5 || ch == ',') masked.push_back(ch);
    }
    out += masked;
    out += '\n';
  }
  return out;
}

Outcome cli_determinism() {
  Outcome out;
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "railalloc_acceptance";
  std::filesystem::create_directories(dir);
  const std::filesystem::path cfg_path = dir / "determinism.cfg";
  {
    std::ofstream f(cfg_path);
    f << "[layout]\nusers = 120\n\n[sweep]\nseeds = 1 2\n"
         "bandwidths_mhz = 1000 1200 1400\n";
  }
  const std::string cli = RAILALLOC_CLI_PATH;
  const auto run = [&](const std::string& sub,
                       const std::filesystem::path& out_path) {
    const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" +
                            cfg_path.string() + "\" --out \"" +
                            out_path.string() + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  for (const std::string sub : {std::string("sweep-bandwidth"),
                                std::string("sweep-beta")}) {
    const auto out1 = dir / (sub + "_1.csv");
    const auto out2 = dir / (sub + "_2.csv");
    if (run(sub, out1) != 0 || run(sub, out2) != 0) {
      fail(out, sub + ": CLI run failed");
      continue;
    }
    const std::string a = mask_timing(read_file(out1));
    const std::string b = mask_timing(read_file(out2));
    if (a.empty() || a != b) {
      fail(out, sub + ": outputs differ across identical runs");
    }
  }
  if (out.pass) {
    out.detail = "sweep-bandwidth and sweep-beta byte-identical "
                 "(timing column excluded)";
  }
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace

int main() {
  Shared shared;
  {
    ExperimentConfig cfg = base_config();
    cfg.seeds.clear();
    for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
    const auto t0 = Clock::now();
    shared.bandwidth_rows = run_bandwidth_sweep(cfg);
    shared.bandwidth_elapsed_s =
        std::chrono::duration<double>(Clock::now() - t0).count();
  }
  {
    ExperimentConfig cfg = base_config();
    cfg.seeds = {1, 2, 3, 4, 5};
    shared.beta_rows = run_beta_sweep(cfg);
  }
  shared.compare_rows = run_solver_comparison(base_config());

  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"oracle equivalence (SQP vs dual vs grid)", [&] { return oracle_equivalence(); }},
      {"KKT certification at 1e-6", [&] { return kkt_certification(shared); }},
      {"analytic gradient vs finite differences", [&] { return gradient_correctness(); }},
      {"bandwidth sweep trend and range", [&] { return bandwidth_trend(shared); }},
      {"method ordering SQP > PNOU > PD", [&] { return method_ordering(shared); }},
      {"SI robustness and greedy decay", [&] { return beta_robustness(shared); }},
      {"allocation structure across SI regimes", [&] { return allocation_structure(shared); }},
      {"SQP/IP objective agreement within 1 Kbps", [&] { return solver_agreement(shared); }},
      {"convergence cost (time and iterations)", [&] { return convergence_cost(shared); }},
      {"antenna gain closed forms", [&] { return antenna_closed_forms(); }},
      {"CLI determinism (byte-identical CSV)", [&] { return cli_determinism(); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    const Outcome outcome = criteria[i].run();
    const double secs =
        std::chrono::duration<double>(Clock::now() - t0).count();
    if (!outcome.pass) ++failures;
    std::printf("[%2zu/11] %-45s %s (%.1fs)%s%s\n", i + 1, criteria[i].name,
                outcome.pass ? "PASS" : "FAIL", secs,
                outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
  }
  if (failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
  } else {
    std::printf("acceptance: %d of 11 criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
