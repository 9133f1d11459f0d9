#pragma once

// Discretized dynamic program for small horizons (T <= 4).
//
// Periods 0..T-1 are dispatched; J_T = 0. Marginal errors are quantized per
// coordinate into k atoms (conditional means of uniform cells on +-6 std, the
// outer cells extending to infinity), and only coordinates that revise a
// dispatched period are branched on. Dispatch levels live on a uniform grid
// that starts at g_min >= 0; ramp windows are floor(r / step) grid steps.
//
//   Q_t(node, g) = c g + pen(d_tt, g) + sum_child p J_{t+1}(child, g)
//   J_t(node, g_prev) = min over the ramp window of Q_t(node, .)
//
// The first dispatch is free, so the reported value is min_g Q_0(root, g).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rld/core_model.hpp"

namespace rld {

struct QuantizedLaw {
  std::vector<double> atoms;
  std::vector<double> probs;
};

// k odd; a zero std gives the single atom 0.
QuantizedLaw quantize(Distribution d, double std_dev, int k);

struct GridSpec {
  double g_min = 0.0;
  double g_max = 0.0;
  double step = 1.0;
  int atoms = 41;  // quantization points per error coordinate

  int size() const;
  double value(int i) const { return g_min + step * i; }
  // Throws ConfigError unless 0 <= g_min < g_max, step > 0 and atoms odd.
  void validate() const;
};

// Largest step <= max_step that divides r (or max_step when r == 0).
double step_dividing(double r, double max_step);

// Grid covering every dispatch the forecast tree can ask for.
GridSpec auto_grid(std::span<const double> dhat0, const ErrorModel& model,
                   const DispatchParams& params, double step, int atoms);

struct PenaltyKind {
  enum class Kind { Voll, Lolp };
  Kind kind = Kind::Voll;
  double q = 0.0;
  double beta0 = 0.0;
  double big_m = 0.0;

  static PenaltyKind voll(double q);
  // bigM defaults to 1e6 c T.
  static PenaltyKind lolp(double beta0, const DispatchParams& params, double big_m = 0.0);
};

struct DPNode {
  std::vector<double> dhat;  // forecasts of periods 0..T-1
  double prob = 1.0;         // transition probability from the parent
  int parent = -1;
  int first_child = 0;
  int child_count = 0;
};

struct DPStage {
  std::vector<DPNode> nodes;
  std::vector<double> Q;  // nodes x grid, row-major
};

struct DPSolution {
  int T = 0;
  GridSpec grid;
  PenaltyKind penalty;
  DispatchParams params;
  std::vector<DPStage> stages;
  double value = 0.0;             // min_g Q_0(root, g)
  std::int64_t penalized_cells = 0;  // LOLP: J cells whose whole window carries bigM

  double q_value(int t, int node, int g) const;
  int window_lo(int g) const;
  int window_hi(int g) const;
  // J_T is identically zero.
  static constexpr double terminal_value() { return 0.0; }
};

struct DPOptions {
  std::int64_t cell_budget = 10'000'000;
};

// Throws ConfigError when T > 4, the grid is invalid or the tree exceeds the
// cell budget.
DPSolution backward_induction(std::span<const double> dhat0, const GridSpec& grid,
                              const ErrorModel& model, const DispatchParams& params,
                              const PenaltyKind& kind, const DPOptions& opts = {});

// Smallest grid argmin of Q_t(node, .) over the whole grid.
int extract_target_index(const DPSolution& sol, int t, int node);
double extract_target(const DPSolution& sol, int t, int node);

// Smallest argmin of Q_t(node, .) inside the ramp window of g_prev index.
int greedy_index(const DPSolution& sol, int t, int node, int g_prev);

struct ThresholdViolation {
  enum class Kind { Clamp, Unimodal };
  Kind kind = Kind::Clamp;
  int t = 0;
  int node = 0;
  int g_index = 0;
  std::string detail;
};

struct ThresholdReport {
  std::int64_t nodes_checked = 0;
  std::int64_t clamp_violations = 0;
  std::int64_t unimodal_violations = 0;
  std::vector<ThresholdViolation> samples;  // at most 100

  bool ok() const { return clamp_violations == 0 && unimodal_violations == 0; }
};

// Per node: greedy(g_prev) == clamp(S, window(g_prev)) within slack_steps
// grid steps, and Q_t(node, .) nonincreasing then nondecreasing (relative
// tolerance rel_tol).
ThresholdReport verify_threshold_structure(const DPSolution& sol, int slack_steps = 1,
                                           double rel_tol = 1e-9);

}  // namespace rld
