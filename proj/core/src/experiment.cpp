#include "railalloc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "railalloc/allocators.hpp"
#include "railalloc/errors.hpp"
#include "railalloc/problem.hpp"

namespace railalloc {

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(const std::string& s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has a non-numeric value '" +
                      value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) {
    throw ConfigError("config: key '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key +
                      "' has a non-integer value '" + value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& key,
                                          const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(parse_u64(key, item));
  }
  return out;
}

std::string method_label(const std::string& method) {
  if (method == "sqp") return "SQP";
  if (method == "pnou") return "PNOU";
  if (method == "pd") return "PD";
  if (method == "ip") return "IP";
  throw ConfigError("config: unknown method '" + method + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string alpha_json(const Eigen::VectorXd& alpha) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (i > 0) out += ",";
    out += format_double(alpha[i]);
  }
  out += "]";
  return out;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& a, const SweepRow& b) {
              if (a.value != b.value) return a.value < b.value;
              if (a.method != b.method) return a.method < b.method;
              return a.seed < b.seed;
            });
}

// Runs fn(0..n-1) on a small worker pool; the first exception, if any, is
// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(hw, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

SweepRow eval_cell(const ExperimentConfig& cfg, const std::string& sweep_var,
                   double value, const std::string& method, std::uint64_t seed,
                   double w_hz, double beta) {
  const Scenario scenario = cfg.scenario_for_seed(seed);
  const RadioParams params = cfg.radio_params(beta);
  const BandwidthProblem bp = BandwidthProblem::build(scenario, w_hz, params);

  SweepRow row;
  row.sweep_var = sweep_var;
  row.value = value;
  row.method = method_label(method);
  row.seed = seed;

  if (method == "sqp") {
    const SolverReport rep = solve_bandwidth_sqp(bp, cfg.solver_config());
    row.capacity_bps = rep.objective_bps;
    row.alpha = rep.alpha;
    row.iterations = rep.iterations;
    row.wall_time_s = rep.wall_time_s;
    row.certified = rep.certified;
  } else if (method == "ip") {
    const AllocatorResult res = ip_barrier(bp, cfg.ip_tol_bps);
    row.capacity_bps = res.objective_bps;
    row.alpha = res.alpha.values();
    row.iterations = res.iterations;
    row.wall_time_s = res.wall_time_s;
  } else {
    const auto t0 = Clock::now();
    const AllocationVector alpha =
        method == "pnou" ? pnou(scenario) : pd(scenario);
    row.capacity_bps = bp.capacity_bps(alpha.values());
    row.alpha = alpha.values();
    row.iterations = 0;
    row.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
  }
  return row;
}

std::vector<SweepRow> run_value_sweep(const ExperimentConfig& cfg,
                                      const std::string& sweep_var,
                                      const std::vector<double>& values,
                                      bool value_is_bandwidth) {
  cfg.validate();
  struct Cell {
    double value;
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::uint64_t seed : cfg.seeds) {
    for (double value : values) {
      for (const std::string& method : cfg.methods) {
        cells.push_back({value, method, seed});
      }
    }
  }
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const double w_hz = value_is_bandwidth ? cell.value * 1e6
                                           : cfg.fixed_bandwidth_mhz * 1e6;
    const double beta = value_is_bandwidth ? cfg.beta : cell.value;
    rows[i] = eval_cell(cfg, sweep_var, cell.value, cell.method, cell.seed,
                        w_hz, beta);
  });
  sort_rows(rows);
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(area_side_m > 0.0)) throw ConfigError("config: area_side_m must be > 0");
  if (rnum < 1) throw ConfigError("config: rnum must be >= 1");
  if (users < 1) throw ConfigError("config: users must be >= 1");
  if (bs_offset_m < 0.0 || bs_offset_m >= area_side_m / 2 ||
      rail_offset_m < 0.0 || rail_offset_m >= area_side_m / 2) {
    throw ConfigError("config: offsets must lie in [0, area_side_m/2)");
  }
  if (!(carrier_ghz > 0.0)) throw ConfigError("config: carrier_ghz must be > 0");
  if (!(path_loss_exp > 0.0)) {
    throw ConfigError("config: path_loss_exp must be > 0");
  }
  if (!(pt_mw > 0.0)) throw ConfigError("config: pt_mw must be > 0");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw ConfigError("config: eta must lie in (0, 1)");
  }
  if (!(theta_3db_deg > 0.0 && theta_3db_deg <= 180.0)) {
    throw ConfigError("config: theta_3db_deg must lie in (0, 180]");
  }
  if (!(p_b >= 0.0 && p_b < 1.0)) {
    throw ConfigError("config: p_b must lie in [0, 1)");
  }
  if (!(beta >= 0.0)) throw ConfigError("config: beta must be >= 0");
  if (!(sigma > 0.0) || !(sigma_kkt > 0.0) || !(eps1 > 0.0) || !(eps2 > 0.0) ||
      !(alpha_floor > 0.0) || !(ip_tol_bps > 0.0)) {
    throw ConfigError("config: solver tolerances must be positive");
  }
  if (max_iters < 1) throw ConfigError("config: max_iters must be >= 1");
  if (bandwidths_mhz.empty()) {
    throw ConfigError("config: bandwidths_mhz must be nonempty");
  }
  for (double w : bandwidths_mhz) {
    if (!(w > 0.0)) throw ConfigError("config: bandwidths_mhz must be > 0");
  }
  if (betas.empty()) throw ConfigError("config: betas must be nonempty");
  for (double b : betas) {
    if (!(b >= 0.0)) throw ConfigError("config: betas must be >= 0");
  }
  if (!(fixed_bandwidth_mhz > 0.0)) {
    throw ConfigError("config: fixed_bandwidth_mhz must be > 0");
  }
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (groups < 1) throw ConfigError("config: groups must be >= 1");
  if (methods.empty()) throw ConfigError("config: methods must be nonempty");
  for (const std::string& m : methods) method_label(m);
}

RadioParams ExperimentConfig::radio_params(double beta_value) const {
  return make_radio_params(carrier_ghz * 1e9, path_loss_exp, pt_mw * 1e-3, eta,
                           n0_dbm_per_mhz, beta_value, p_b, theta_3db_deg);
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig cfg;
  cfg.sigma = sigma;
  cfg.sigma_kkt = sigma_kkt;
  cfg.eps1 = eps1;
  cfg.eps2 = eps2;
  cfg.max_iters = max_iters;
  cfg.alpha_floor = alpha_floor;
  return cfg;
}

Scenario ExperimentConfig::scenario_for_seed(std::uint64_t seed) const {
  return make_scenario(area_side_m, rnum, bs_offset_m, rail_offset_m, users,
                       seed);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "layout" && section != "radio" && section != "solver" &&
          section != "sweep") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("config: key '" + key + "' appears outside a section");
    }

    bool known = false;
    if (section == "layout") {
      known = true;
      if (key == "area_side_m") cfg.area_side_m = parse_double(key, value);
      else if (key == "rnum") cfg.rnum = parse_int(key, value);
      else if (key == "users") cfg.users = parse_int(key, value);
      else if (key == "bs_offset_m") cfg.bs_offset_m = parse_double(key, value);
      else if (key == "rail_offset_m") cfg.rail_offset_m = parse_double(key, value);
      else known = false;
    } else if (section == "radio") {
      known = true;
      if (key == "carrier_ghz") cfg.carrier_ghz = parse_double(key, value);
      else if (key == "path_loss_exp") cfg.path_loss_exp = parse_double(key, value);
      else if (key == "pt_mw") cfg.pt_mw = parse_double(key, value);
      else if (key == "eta") cfg.eta = parse_double(key, value);
      else if (key == "n0_dbm_per_mhz") cfg.n0_dbm_per_mhz = parse_double(key, value);
      else if (key == "theta_3db_deg") cfg.theta_3db_deg = parse_double(key, value);
      else if (key == "p_b") cfg.p_b = parse_double(key, value);
      else if (key == "beta") cfg.beta = parse_double(key, value);
      else known = false;
    } else if (section == "solver") {
      known = true;
      if (key == "sigma") cfg.sigma = parse_double(key, value);
      else if (key == "sigma_kkt") cfg.sigma_kkt = parse_double(key, value);
      else if (key == "eps1") cfg.eps1 = parse_double(key, value);
      else if (key == "eps2") cfg.eps2 = parse_double(key, value);
      else if (key == "alpha_floor") cfg.alpha_floor = parse_double(key, value);
      else if (key == "max_iters") cfg.max_iters = parse_int(key, value);
      else if (key == "ip_tol_bps") cfg.ip_tol_bps = parse_double(key, value);
      else known = false;
    } else if (section == "sweep") {
      known = true;
      if (key == "bandwidths_mhz") cfg.bandwidths_mhz = parse_double_list(key, value);
      else if (key == "betas") cfg.betas = parse_double_list(key, value);
      else if (key == "fixed_bandwidth_mhz") cfg.fixed_bandwidth_mhz = parse_double(key, value);
      else if (key == "seeds") cfg.seeds = parse_u64_list(key, value);
      else if (key == "groups") cfg.groups = parse_int(key, value);
      else if (key == "methods") cfg.methods = split_list(value);
      else known = false;
    }
    if (!known) {
      throw ConfigError("config: unknown key '" + key + "' in section [" +
                        section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str());
}

std::vector<SweepRow> run_bandwidth_sweep(const ExperimentConfig& config) {
  return run_value_sweep(config, "bandwidth_mhz", config.bandwidths_mhz,
                         /*value_is_bandwidth=*/true);
}

std::vector<SweepRow> run_beta_sweep(const ExperimentConfig& config) {
  return run_value_sweep(config, "beta", config.betas,
                         /*value_is_bandwidth=*/false);
}

std::vector<SweepRow> run_solver_comparison(const ExperimentConfig& config) {
  config.validate();
  const double w_hz = config.fixed_bandwidth_mhz * 1e6;
  std::vector<SweepRow> rows;
  const std::vector<std::string> solver_methods = {"sqp", "ip"};
  // Sequential on purpose: the per-group wall times are the payload.
  for (int g = 1; g <= config.groups; ++g) {
    const std::uint64_t seed = derive_seed(config.seeds.front(), g);
    for (const std::string& method : solver_methods) {
      rows.push_back(eval_cell(config, "group", g, method, seed, w_hz,
                               config.beta));
    }
  }
  for (const std::string& method : solver_methods) {
    const std::string label = method_label(method);
    SweepRow avg;
    avg.sweep_var = "group";
    avg.value = config.groups + 1;
    avg.method = label;
    avg.seed = 0;
    int count = 0;
    double cap = 0.0;
    double wall = 0.0;
    double iters = 0.0;
    bool certified = true;
    for (const SweepRow& row : rows) {
      if (row.method != label || row.value > config.groups) continue;
      ++count;
      cap += row.capacity_bps;
      wall += row.wall_time_s;
      iters += row.iterations;
      certified = certified && row.certified;
    }
    avg.capacity_bps = cap / count;
    avg.wall_time_s = wall / count;
    avg.iterations = static_cast<int>(std::lround(iters / count));
    avg.certified = certified;
    rows.push_back(avg);
  }
  sort_rows(rows);
  return rows;
}

std::string rows_to_csv(std::vector<SweepRow> rows) {
  sort_rows(rows);
  std::string out =
      "sweep_var,value,method,capacity_bps,iterations,wall_time_s,seed,"
      "alpha_json\n";
  for (const SweepRow& row : rows) {
    out += row.sweep_var;
    out += ',';
    out += format_double(row.value);
    out += ',';
    out += row.method;
    out += ',';
    out += format_double(row.capacity_bps);
    out += ',';
    out += std::to_string(row.iterations);
    out += ',';
    out += format_double(row.wall_time_s);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += '"';
    out += alpha_json(row.alpha);
    out += '"';
    out += '\n';
  }
  return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) {
    throw std::invalid_argument("emit_csv: refusing to write an empty table");
  }
  const std::string text = rows_to_csv(rows);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("emit_csv: cannot open '" + path + "'");
  f << text;
  if (!f) throw IoError("emit_csv: write failed for '" + path + "'");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CertifyOutcome run_certification(const ExperimentConfig& config, int devices,
                                 int instances, double grid_step) {
  config.validate();
  if (devices < 2 || devices > 4) {
    throw std::invalid_argument(
        "run_certification: devices must lie in [2, 4] (grid oracle bound)");
  }
  if (instances < 1) {
    throw std::invalid_argument("run_certification: instances must be >= 1");
  }
  const std::vector<double> beta_cycle = {0.0,  1e-14, 1e-12,
                                          1e-9, 1e-6,  1e-3};
  const double w_hz = config.fixed_bandwidth_mhz * 1e6;

  CertifyOutcome outcome;
  outcome.records.resize(instances);
  outcome.all_ok = true;

  parallel_for(static_cast<std::size_t>(instances), [&](std::size_t i) {
    CertifyRecord& rec = outcome.records[i];
    rec.seed = derive_seed(config.seeds.front(), 1000 + i);
    rec.beta = beta_cycle[i % beta_cycle.size()];
    const Scenario scenario =
        make_scenario(config.area_side_m, devices - 1, config.bs_offset_m,
                      config.rail_offset_m, config.users, rec.seed);
    const BandwidthProblem bp =
        BandwidthProblem::build(scenario, w_hz, config.radio_params(rec.beta));

    const SolverReport sqp = solve_bandwidth_sqp(bp, config.solver_config());
    const AllocatorResult dual = dual_oracle(bp, 1e-12);
    const AllocatorResult grid = grid_oracle(bp, grid_step);

    rec.sqp_bps = sqp.objective_bps;
    rec.dual_bps = dual.objective_bps;
    rec.grid_bps = grid.objective_bps;
    rec.kkt_residual = sqp.residuals.max();
    rec.certified = sqp.certified;

    const double ref = std::max(1.0, std::abs(rec.dual_bps));
    const bool sqp_close = std::abs(rec.sqp_bps - rec.dual_bps) <= 1e-6 * ref;
    // Empirical Lipschitz bound for the lattice-resolution gap.
    const Eigen::VectorXd probe =
        dual.alpha.values().cwiseMax(grid_step).eval();
    const double lipschitz = bp.gradient_bps(probe).norm();
    const int nr = static_cast<int>(bp.active_devices().size());
    const double bound = std::max(lipschitz * grid_step * std::sqrt(2.0 * nr),
                                  1e-9 * ref);
    const bool grid_close = rec.grid_bps <= rec.dual_bps + 1e-6 * ref &&
                            rec.dual_bps - rec.grid_bps <= bound;
    rec.agree = rec.certified && sqp_close && grid_close;
  });

  for (const CertifyRecord& rec : outcome.records) {
    outcome.all_ok = outcome.all_ok && rec.agree;
  }
  return outcome;
}

}  // namespace railalloc
