#pragma once

// Run configuration as a JSON document. Every key is optional and falls back
// to the defaults below; unknown keys are rejected. docs/config.md lists the
// keys.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rld/core_model.hpp"
#include "rld/data_io.hpp"
#include "rld/policies.hpp"
#include "rld/solver.hpp"

namespace rld {

// sigma(h) = m * rho * sqrt(h), or m * table[h - 1] when a table is given.
// m is the day's mean scaled wind ("wind") or mean |net demand| ("demand").
struct SigmaSpec {
  double rho = 0.05;
  std::string base = "wind";
  std::vector<double> table;
};

struct DpCheckConfig {
  int T = 3;
  int instances = 5;
  double step = 0.25;
  int atoms = 9;
  double sigma_min = 1.0;
  double sigma_max = 10.0;
  double demand_lo = 80.0;
  double demand_hi = 120.0;
  std::int64_t cell_budget = 10'000'000;
};

struct BenchConfig {
  std::vector<int> horizons{6, 12, 24};
  int repeats = 3;
};

struct RunConfig {
  int T = 24;
  double c = 50.0;
  double q = 2000.0;
  std::array<double, 4> beta{0.03, 0.03, 0.03, 0.03};
  // Replace beta_0 by c / (q - c), so that 1 - beta_0 = (q - 2c) / (q - c).
  bool lolp_matches_voll = false;
  double ramp_factor = 0.8;
  std::vector<double> penetration{5, 10, 15, 20, 25, 30};
  SigmaSpec sigma;
  std::string distribution = "gaussian";  // law assumed by the policies
  int scenarios = 200;
  std::uint64_t seed = 20110101;
  int days = 100;
  std::string data = "synthetic";
  std::string scenario_mode = "auto";  // auto | forward | anchored
  std::string oracle = "exact";        // exact | lp
  std::vector<std::string> policies{"cc-gauss", "cc-laplace", "one-step", "multi-step"};
  std::string lolp_mode = "two-term";  // two-term | printed-root
  bool receding_horizon = false;
  int jobs = 0;  // 0 = hardware concurrency
  SolverSettings solver;
  SynthConfig synthetic;
  DpCheckConfig dp;
  BenchConfig bench;

  // Throws ConfigError.
  void validate() const;
};

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

DispatchParams base_params(const RunConfig& cfg);
LolpMode lolp_mode_from_string(const std::string& s);

// Error curve for one day instance under the configured sigma spec.
ErrorModel make_error_model(const RunConfig& cfg, const DayInstance& day, Distribution dist);

}  // namespace rld
