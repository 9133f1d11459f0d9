#pragma once

// Threshold dispatch rules. Every policy produces an unconstrained stage
// target S, and the dispatch is S clamped into the ramp-feasible interval
// around the previous dispatch.
//
// The lookahead targets take an optional last_period: the final period that
// is still dispatched. Terms for periods beyond it are dropped, and at
// t == last_period every lookahead target is the current demand d_{t,t}.
// It defaults to the last coordinate of the forecast vector.

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "rld/affine_socp.hpp"
#include "rld/core_model.hpp"

namespace rld {

// Nearest point of feasible_interval(g_prev); with no previous dispatch only
// g >= 0 applies.
double clamp_to_threshold(double S, std::optional<double> g_prev, const DispatchParams& params);

enum class LolpMode {
  TwoTerm,      // max of the two closed-form terms
  PrintedRoot,  // also solve the printed first-order condition for S'
};

double lolp_one_step_target(const ForecastState& state, const DispatchParams& params,
                            const ErrorModel& model, LolpMode mode = LolpMode::TwoTerm,
                            std::optional<int> last_period = {});

// Root of the printed LOLP condition on the default bracket, if it changes
// sign there.
std::optional<double> lolp_printed_root(const ForecastState& state, const DispatchParams& params,
                                        const ErrorModel& model);

// S' solving (2c - q) + c 1(g > r_down) F(g - r_down - d1) + (q - c) F(g + r_up - d1) = 0,
// F the cdf of the next-stage marginal error and d1 = dhat_{t,t+1}.
double voll_root(const ForecastState& state, const DispatchParams& params, const ErrorModel& model);

double voll_one_step_target_exact(const ForecastState& state, const DispatchParams& params,
                                  const ErrorModel& model, std::optional<int> last_period = {});

double voll_one_step_target_approx(const ForecastState& state, const DispatchParams& params,
                                   const ErrorModel& model, std::optional<int> last_period = {});

double multi_step_target(const ForecastState& state, const DispatchParams& params,
                         const ErrorModel& model, std::optional<int> last_period = {});

// Upper bound of S~ - S for the one-step VOLL targets.
double voll_approx_gap_bound(const DispatchParams& params, const ErrorModel& model, int t);

// beta_0 with 1 - beta_0 = (q - 2c) / (q - c).
double lolp_beta_matching_voll(const DispatchParams& params);

// What a policy sees at stage t.
struct StageInput {
  const ForecastState& state;
  std::optional<double> g_prev;
  std::span<const MarginalError> history;  // eps_0 .. eps_{t-1}
  int last_period = 0;
};

class DispatchPolicy {
 public:
  explicit DispatchPolicy(DispatchParams params) : params_(params) {}
  virtual ~DispatchPolicy() = default;

  virtual std::string name() const = 0;
  // Unclamped target (for affine policies: the raw affine dispatch).
  virtual double target(const StageInput& in) const = 0;

  double decide(const StageInput& in) const {
    return clamp_to_threshold(target(in), in.g_prev, params_);
  }
  const DispatchParams& params() const { return params_; }

 private:
  DispatchParams params_;
};

enum class LookaheadKind { LolpOneStep, VollOneStepExact, VollOneStepApprox, MultiStep };

const char* to_string(LookaheadKind k);

class LookaheadPolicy final : public DispatchPolicy {
 public:
  // Throws ConfigError when params fail validation.
  LookaheadPolicy(LookaheadKind kind, DispatchParams params, ErrorModel model,
                  LolpMode lolp_mode = LolpMode::TwoTerm);

  std::string name() const override { return to_string(kind_); }
  double target(const StageInput& in) const override;
  LookaheadKind kind() const { return kind_; }

 private:
  LookaheadKind kind_;
  ErrorModel model_;
  LolpMode lolp_mode_;
};

// Executes a solved affine policy. In receding-horizon mode the cone program
// is re-solved at every stage t > 0 on the remaining periods with the first
// dispatch tied to g_prev; the final stage then falls back to d_{t,t}.
class AffinePolicyAdapter final : public DispatchPolicy {
 public:
  AffinePolicyAdapter(AffinePolicy policy, DispatchParams params, std::string label = "affine");
  AffinePolicyAdapter(AffinePolicy policy, DispatchParams params, ErrorModel model,
                      std::shared_ptr<const ConicSolver> solver, std::string label = "affine-rh");

  std::string name() const override { return label_; }
  double target(const StageInput& in) const override;
  const AffinePolicy& policy() const { return policy_; }
  bool receding() const { return solver_ != nullptr; }

  // Forecast the policy was designed on. When set, the raw dispatch of stage
  // t is shifted by the gap between the scenario's initial forecast of period
  // t (recovered from d_{t,t} and the error history) and the nominal one.
  void set_nominal(std::vector<double> dhat0) { nominal_ = std::move(dhat0); }

 private:
  AffinePolicy policy_;
  std::vector<double> nominal_;
  std::optional<ErrorModel> model_;
  std::shared_ptr<const ConicSolver> solver_;
  std::string label_;
};

double decide(const DispatchPolicy& policy, const StageInput& in);

}  // namespace rld
