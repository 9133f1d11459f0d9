#pragma once

// Cost-ratio study over wind penetration levels.
//
// Policy names: cc (alias cc-gauss), cc-rh, one-step, one-step-exact,
// lolp-one-step, multi-step. A "-laplace" suffix evaluates the same policy
// on Laplace scenarios of equal std; "-gauss" is the default law. Policies
// are always designed under the configured distribution.

#include <cstdint>
#include <string>
#include <vector>

#include "rld/config.hpp"
#include "rld/data_io.hpp"
#include "rld/sim_eval.hpp"

namespace rld {

struct PolicySpec {
  std::string name;  // as given
  std::string base;  // without the law suffix, cc-gauss folded to cc
  Distribution law = Distribution::Gaussian;
};

PolicySpec parse_policy_spec(const std::string& name);

struct SweepRow {
  double p = 0.0;
  std::string day;
  std::string policy;
  std::string law;
  std::string status;  // ok | infeasible | max_iter
  int scenarios = 0;
  double mean_cost = 0.0;
  double oracle_mean = 0.0;
  double ratio = 0.0;
  double shortfall_rate = 0.0;  // over scenario-stages
};

struct SweepSummary {
  double p = 0.0;
  std::string policy;
  int days = 0;
  int failed_days = 0;
  std::int64_t scenarios = 0;
  double mean_cost = 0.0;
  double oracle_mean = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;
  double shortfall_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;          // p-major, then day, then policy
  std::vector<SweepSummary> summary;   // p-major, then policy
};

// Days are evaluated independently on cfg.jobs threads; aggregation order is
// fixed, so the result does not depend on the thread count.
SweepResult penetration_sweep(const std::vector<DayProfile>& days, const RunConfig& cfg,
                              bool synthetic_data);

// Days selected by the config: synthetic profiles, or cfg.days picked from
// the aggregated CSV at cfg.data.
std::vector<DayProfile> load_days(const RunConfig& cfg);
bool is_synthetic(const RunConfig& cfg);

std::string results_csv(const SweepResult& r);
std::string summary_json(const SweepResult& r, const RunConfig& cfg);

}  // namespace rld
