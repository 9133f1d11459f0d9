#pragma once

// Batch experiments behind the dp-check and solver-bench commands.

#include <cstdint>
#include <string>
#include <vector>

#include "rld/affine_socp.hpp"
#include "rld/config.hpp"
#include "rld/dp_oracle.hpp"

namespace rld {

// Seeded small-horizon instance for the dynamic program: forecasts uniform in
// [demand_lo, demand_hi], sigma(h) = sigma1 sqrt(h) with sigma1 uniform in
// [sigma_min, sigma_max], ramps from calibrate_ramp on the dispatched periods.
struct DpInstance {
  std::vector<double> dhat0;  // T+1
  double sigma1 = 0.0;
  DispatchParams params;
  ErrorModel model = ErrorModel::zero(1);
  GridSpec grid;
};

DpInstance make_dp_instance(const RunConfig& cfg, int index);

struct DpCheckEntry {
  int instance = 0;
  std::string penalty;  // voll | lolp
  double value = 0.0;
  double grid_step = 0.0;
  int grid_size = 0;
  ThresholdReport report;
};

std::vector<DpCheckEntry> run_dp_check(const RunConfig& cfg);
std::string dp_report_json(const std::vector<DpCheckEntry>& entries, const RunConfig& cfg);

// Affine-policy program of one day cut to its first `horizon` periods, at
// penetration p, under the configured sigma spec and design law.
struct DayProgram {
  DispatchParams params;
  ErrorModel model = ErrorModel::zero(1);
  std::vector<double> dhat0;  // horizon + 1
  StackedModel stacked;
  ChanceRows rows;
  ConicProblem problem;
};

DayProgram day_affine_program(const RunConfig& cfg, const DayProfile& day, double p, int horizon);

struct BenchEntry {
  int horizon = 0;
  int variables = 0;
  int rows = 0;
  std::string status;
  int iterations = 0;
  double seconds = 0.0;  // median over repeats
  double objective = 0.0;
  double max_residual = 0.0;
};

// day_affine_program of the first synthetic day at the highest configured
// penetration, for each bench horizon.
std::vector<BenchEntry> run_solver_bench(const RunConfig& cfg);
std::string solver_bench_json(const std::vector<BenchEntry>& entries, const RunConfig& cfg);

}  // namespace rld
