#pragma once

// Closed-loop Monte Carlo evaluation against the perfect-information oracle.
//
// A scenario covers dispatched periods 0..T-1. Its forecast vector has T+1
// coordinates; the last one is never dispatched and only feeds lookahead
// formulas that are told to stop at T-1.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rld/core_model.hpp"
#include "rld/policies.hpp"
#include "rld/solver.hpp"

namespace rld {

struct Scenario {
  std::vector<double> dhat0;        // T+1
  std::vector<MarginalError> eps;   // eps_0 .. eps_{T-1}
  std::vector<double> d;            // realized demand of periods 0..T-1
};

enum class ScenarioMode {
  Forward,   // base is the initial forecast; errors roll it forward
  Anchored,  // base is the realized day; the initial forecast is backed out
};

const char* to_string(ScenarioMode m);
ScenarioMode scenario_mode_from_string(const std::string& s);

// base has T or T+1 entries (a missing last coordinate repeats period T-1).
// Scenario i draws from make_stream(seed, stream, i).
std::vector<Scenario> make_scenarios(std::span<const double> base, const ErrorModel& model, int n,
                                     std::uint64_t seed, ScenarioMode mode = ScenarioMode::Forward,
                                     std::uint64_t stream = 0);

// Max |d_tau - (dhat0_tau + accumulated errors)| over the scenario.
double scenario_inconsistency(const Scenario& s);

struct Trajectory {
  std::vector<double> g;
  std::vector<double> shortfall;
  double cost = 0.0;
};

// Stage t sees realized demand d_{t,t}; cost c g_t + q (d_t - g_t)^+.
// Policy errors are rethrown with the stage index prepended.
Trajectory simulate_policy(const DispatchPolicy& policy, const Scenario& scenario,
                           const DispatchParams& params);

enum class OracleBackend {
  Lp,     // linear program through the conic solver
  Exact,  // piecewise-linear dynamic program on the realized sequence
};

const char* to_string(OracleBackend b);
OracleBackend oracle_backend_from_string(const std::string& s);

// min sum c g_t + q s_t  s.t. s >= d - g, s >= 0, g >= 0, ramps between
// consecutive periods; g_0 is free of ramp limits.
ConicProblem oracle_lp(std::span<const double> d, const DispatchParams& params);
double oracle_cost_exact(std::span<const double> d, const DispatchParams& params);
double oracle_cost(std::span<const double> d, const DispatchParams& params,
                   OracleBackend backend = OracleBackend::Lp, const ConicSolver* solver = nullptr);

// Order-fixed pairwise sum; the result depends only on the sequence.
double pairwise_sum(std::span<const double> v);

struct EvalResult {
  std::string policy;
  int scenarios = 0;
  std::uint64_t seed = 0;
  double mean_cost = 0.0;
  double oracle_mean = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;  // delta-method standard error of the ratio of means
  std::vector<double> shortfall_freq;  // per stage
};

// Paired evaluation: every policy and the oracle share the scenario set.
std::vector<EvalResult> evaluate(std::span<const DispatchPolicy* const> policies,
                                 std::span<const Scenario> scenarios, const DispatchParams& params,
                                 OracleBackend backend = OracleBackend::Exact,
                                 const ConicSolver* solver = nullptr, std::uint64_t seed = 0);

// Per-scenario costs, the raw material of evaluate().
struct PairedCosts {
  std::vector<double> policy;
  std::vector<double> oracle;
  std::vector<std::int64_t> shortfalls;  // per stage counts
};

EvalResult summarize(const std::string& name, const PairedCosts& costs, std::uint64_t seed);

// Ratio of means with its delta-method standard error.
struct RatioEstimate {
  double ratio = 0.0;
  double se = 0.0;
};
RatioEstimate ratio_of_means(std::span<const double> num, std::span<const double> den);

// Runs body(i) for i in [0, n) on `jobs` threads (0 = hardware concurrency).
// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(int n, int jobs, const std::function<void(int)>& body);

}  // namespace rld
