#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "railalloc/allocators.hpp"
#include "railalloc/errors.hpp"
#include "railalloc/experiment.hpp"
#include "railalloc/sqp.hpp"

namespace {

using railalloc::ExperimentConfig;
using railalloc::SweepRow;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotCertified = 3;

ExperimentConfig load_or_default(const std::string& path, int seeds_n) {
  ExperimentConfig cfg =
      path.empty() ? ExperimentConfig{} : railalloc::load_config(path);
  if (seeds_n > 0) {
    cfg.seeds.clear();
    for (int i = 1; i <= seeds_n; ++i) cfg.seeds.push_back(i);
  }
  cfg.validate();
  return cfg;
}

bool all_certified(const std::vector<SweepRow>& rows) {
  for (const SweepRow& row : rows) {
    if (!row.certified) return false;
  }
  return true;
}

int finish_sweep(const std::vector<SweepRow>& rows, const std::string& out) {
  railalloc::emit_csv(rows, out);
  std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
  if (!all_certified(rows)) {
    std::fprintf(stderr, "error: at least one SQP solve did not certify\n");
    return kExitNotCertified;
  }
  return kExitOk;
}

void print_comparison(const std::vector<SweepRow>& rows, int groups) {
  std::printf("%-6s %14s %14s %16s\n", "group", "sqp_time_s", "ip_time_s",
              "f_ip - f_sqp_bps");
  for (int g = 1; g <= groups + 1; ++g) {
    const SweepRow* sqp = nullptr;
    const SweepRow* ip = nullptr;
    for (const SweepRow& row : rows) {
      if (row.value != g) continue;
      if (row.method == "SQP") sqp = &row;
      if (row.method == "IP") ip = &row;
    }
    if (sqp == nullptr || ip == nullptr) continue;
    const char* label = g == groups + 1 ? "avg" : nullptr;
    if (label != nullptr) {
      std::printf("%-6s ", label);
    } else {
      std::printf("%-6d ", g);
    }
    std::printf("%14.6f %14.6f %16.3f\n", sqp->wall_time_s, ip->wall_time_s,
                ip->capacity_bps - sqp->capacity_bps);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mm-wave train-ground bandwidth allocation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string trace_path;
  int seeds_n = 0;
  int devices = 3;
  int instances = 10;
  double grid_step = 1e-3;

  auto* sweep_bw = app.add_subcommand(
      "sweep-bandwidth", "capacity vs total bandwidth per method");
  sweep_bw->add_option("--config", config_path, "configuration file");
  sweep_bw->add_option("--out", out_path, "output CSV")->required();
  sweep_bw->add_option("--seeds", seeds_n, "replace the seed list with 1..N");

  auto* sweep_beta = app.add_subcommand(
      "sweep-beta", "capacity vs self-interference level per method");
  sweep_beta->add_option("--config", config_path, "configuration file");
  sweep_beta->add_option("--out", out_path, "output CSV")->required();
  sweep_beta->add_option("--seeds", seeds_n,
                         "replace the seed list with 1..N");

  auto* compare = app.add_subcommand(
      "compare-solvers", "SQP vs interior point: wall time and agreement");
  compare->add_option("--config", config_path, "configuration file");
  compare->add_option("--out", out_path, "output CSV")->required();

  auto* certify = app.add_subcommand(
      "certify", "cross-check SQP against the dual and grid oracles");
  certify->add_option("--config", config_path, "configuration file");
  certify->add_option("--devices", devices, "total device count (2..4)");
  certify->add_option("--instances", instances, "random instances to check");
  certify->add_option("--step", grid_step, "grid oracle lattice spacing");
  certify->add_option("--trace", trace_path,
                      "write the first instance's SQP iteration trace CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const ExperimentConfig cfg = load_or_default(config_path, seeds_n);

    if (sweep_bw->parsed()) {
      return finish_sweep(railalloc::run_bandwidth_sweep(cfg), out_path);
    }
    if (sweep_beta->parsed()) {
      return finish_sweep(railalloc::run_beta_sweep(cfg), out_path);
    }
    if (compare->parsed()) {
      const std::vector<SweepRow> rows = railalloc::run_solver_comparison(cfg);
      railalloc::emit_csv(rows, out_path);
      print_comparison(rows, cfg.groups);
      if (!all_certified(rows)) {
        std::fprintf(stderr,
                     "error: at least one SQP solve did not certify\n");
        return kExitNotCertified;
      }
      return kExitOk;
    }
    if (certify->parsed()) {
      const railalloc::CertifyOutcome outcome =
          railalloc::run_certification(cfg, devices, instances, grid_step);
      std::printf("%-6s %10s %18s %18s %18s %12s %s\n", "inst", "beta",
                  "sqp_bps", "dual_bps", "grid_bps", "kkt", "ok");
      for (std::size_t i = 0; i < outcome.records.size(); ++i) {
        const railalloc::CertifyRecord& rec = outcome.records[i];
        std::printf("%-6zu %10.1e %18.6e %18.6e %18.6e %12.3e %s\n", i + 1,
                    rec.beta, rec.sqp_bps, rec.dual_bps, rec.grid_bps,
                    rec.kkt_residual, rec.agree ? "yes" : "NO");
      }
      if (!trace_path.empty() && !outcome.records.empty()) {
        const railalloc::CertifyRecord& rec = outcome.records.front();
        const auto scenario = cfg.scenario_for_seed(rec.seed);
        const auto bp = railalloc::BandwidthProblem::build(
            scenario, cfg.fixed_bandwidth_mhz * 1e6,
            cfg.radio_params(rec.beta));
        const auto report =
            railalloc::solve_bandwidth_sqp(bp, cfg.solver_config());
        std::ofstream f(trace_path);
        if (!f) throw railalloc::IoError("cannot open " + trace_path);
        f << railalloc::trace_csv(report);
      }
      if (!outcome.all_ok) {
        std::fprintf(stderr, "error: oracle cross-check failed\n");
        return kExitNotCertified;
      }
      std::printf("all %zu instances certified against both oracles\n",
                  outcome.records.size());
      return kExitOk;
    }
  } catch (const railalloc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
