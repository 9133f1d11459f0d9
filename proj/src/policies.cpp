#include "rld/policies.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "rld/error.hpp"

namespace rld {

namespace {

int resolve_last(const ForecastState& state, std::optional<int> last_period) {
  const int T = state.horizon();
  const int last = last_period.value_or(T);
  if (last > T || last < state.t) throw ModelError("last period outside the forecast vector");
  if (state.t < 0 || state.t > T) throw ModelError("forecast stage out of range");
  return last;
}

double at(const ForecastState& state, int tau) { return state.dhat[static_cast<std::size_t>(tau)]; }

// cdf of a zero-mean error with the given std; a step at 0 when std == 0.
double error_cdf(Distribution d, double std_dev, double x) {
  if (std_dev > 0.0) return standard_cdf(d, x / std_dev);
  return x > 0.0 ? 1.0 : (x < 0.0 ? 0.0 : 0.5);
}

double error_pdf(Distribution d, double std_dev, double x) {
  if (std_dev > 0.0) return standard_pdf(d, x / std_dev) / std_dev;
  return 0.0;
}

// Bracket shared by the one-step roots.
std::pair<double, double> root_bracket(const ForecastState& state, const DispatchParams& params,
                                       double sigma) {
  const double d0 = at(state, state.t);
  const double d1 = at(state, state.t + 1);
  // Below d1 - r_up - 10 sigma both conditions are negative (q > 3c); above
  // max(d0, d1) + r_down + 10 sigma both are positive.
  const double lo = std::min(d0, d1) - params.r_up - 10.0 * sigma;
  const double hi = std::max(d0, d1) + params.r_down + params.r_up + 10.0 * sigma;
  return {lo, hi};
}

// Bisection for the sign change of a function negative at lo and positive
// at hi; returns the midpoint of the final interval.
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double root_tol(const ForecastState& state) {
  return 1e-13 * (1.0 + std::max(std::abs(at(state, state.t)), std::abs(at(state, state.t + 1))));
}

void require_next(const ForecastState& state) {
  if (state.t + 1 > state.horizon()) throw ModelError("one-step target needs a next period");
}

}  // namespace

double clamp_to_threshold(double S, std::optional<double> g_prev, const DispatchParams& params) {
  if (!g_prev) return std::max(0.0, S);
  const Interval iv = feasible_interval(*g_prev, params);
  return std::clamp(S, iv.lo, iv.hi);
}

std::optional<double> lolp_printed_root(const ForecastState& state, const DispatchParams& params,
                                        const ErrorModel& model) {
  require_next(state);
  const int t = state.t;
  const double sigma = marginal_std(model, t, t + 1);
  const double d1 = at(state, t + 1);
  const Distribution dist = model.distribution();
  auto f = [&](double g) {
    if (!(g > params.r_down)) return 1.0;
    const double x = g - params.r_down;
    return 1.0 + error_cdf(dist, sigma, x) - d1 * error_pdf(dist, sigma, x);
  };
  auto [lo, hi] = root_bracket(state, params, sigma);
  const double flo = f(lo);
  const double fhi = f(hi);
  if ((flo < 0.0) == (fhi < 0.0)) return std::nullopt;
  if (flo < 0.0) return bisect(f, lo, hi, root_tol(state));
  return bisect([&](double g) { return -f(g); }, lo, hi, root_tol(state));
}

double lolp_one_step_target(const ForecastState& state, const DispatchParams& params,
                            const ErrorModel& model, LolpMode mode,
                            std::optional<int> last_period) {
  const int t = state.t;
  const int last = resolve_last(state, last_period);
  if (t >= last) return at(state, t);
  const double sigma = marginal_std(model, t, t + 1);
  const double margin = standard_quantile(model.distribution(), 1.0 - params.beta[0]) * sigma;
  double S = std::max(at(state, t), at(state, t + 1) - params.r_up + margin);
  if (mode == LolpMode::PrintedRoot) {
    const std::optional<double> root = lolp_printed_root(state, params, model);
    if (!root) throw ModelError("printed LOLP condition has no root on the bracket");
    S = std::max(S, *root);
  }
  return S;
}

double voll_root(const ForecastState& state, const DispatchParams& params, const ErrorModel& model) {
  require_next(state);
  if (!(params.q > 3.0 * params.c)) throw ConfigError("VOLL targets require q > 3c");
  const int t = state.t;
  const double sigma = marginal_std(model, t, t + 1);
  const double d1 = at(state, t + 1);
  const double c = params.c;
  const double q = params.q;
  const Distribution dist = model.distribution();
  auto f = [&](double g) {
    double v = (2.0 * c - q) + (q - c) * error_cdf(dist, sigma, g + params.r_up - d1);
    if (g > params.r_down) v += c * error_cdf(dist, sigma, g - params.r_down - d1);
    return v;
  };
  auto [lo, hi] = root_bracket(state, params, sigma);
  if (!(f(lo) < 0.0) || f(hi) < 0.0) throw ModelError("VOLL condition does not change sign on the bracket");
  return bisect(f, lo, hi, root_tol(state));
}

double voll_one_step_target_exact(const ForecastState& state, const DispatchParams& params,
                                  const ErrorModel& model, std::optional<int> last_period) {
  const int t = state.t;
  const int last = resolve_last(state, last_period);
  if (t >= last) return at(state, t);
  const double sigma = marginal_std(model, t, t + 1);
  const double p = (params.q - 2.0 * params.c) / params.q;
  const double second = at(state, t + 1) - params.r_up + standard_quantile(model.distribution(), p) * sigma;
  return std::max({at(state, t), second, voll_root(state, params, model)});
}

double voll_one_step_target_approx(const ForecastState& state, const DispatchParams& params,
                                   const ErrorModel& model, std::optional<int> last_period) {
  const int t = state.t;
  const int last = resolve_last(state, last_period);
  if (t >= last) return at(state, t);
  const double sigma = marginal_std(model, t, t + 1);
  const double p = (params.q - 2.0 * params.c) / (params.q - params.c);
  return std::max(at(state, t),
                  at(state, t + 1) - params.r_up + standard_quantile(model.distribution(), p) * sigma);
}

double multi_step_target(const ForecastState& state, const DispatchParams& params,
                         const ErrorModel& model, std::optional<int> last_period) {
  const int t = state.t;
  const int last = resolve_last(state, last_period);
  const double z = standard_quantile(model.distribution(),
                                     (params.q - 2.0 * params.c) / (params.q - params.c));
  double S = at(state, t);
  for (int tau = t + 1; tau <= last; ++tau) {
    const double spread = cumulative_error_std(model, t, tau);
    S = std::max(S, at(state, tau) - (tau - t) * params.r_up + z * spread);
  }
  return S;
}

double voll_approx_gap_bound(const DispatchParams& params, const ErrorModel& model, int t) {
  const double sigma = marginal_std(model, t, t + 1);
  const Distribution d = model.distribution();
  return sigma * (standard_quantile(d, (params.q - 2.0 * params.c) / (params.q - params.c)) -
                  standard_quantile(d, (params.q - 2.0 * params.c) / params.q));
}

double lolp_beta_matching_voll(const DispatchParams& params) {
  return params.c / (params.q - params.c);
}

const char* to_string(LookaheadKind k) {
  switch (k) {
    case LookaheadKind::LolpOneStep: return "lolp-one-step";
    case LookaheadKind::VollOneStepExact: return "voll-one-step-exact";
    case LookaheadKind::VollOneStepApprox: return "one-step";
    case LookaheadKind::MultiStep: return "multi-step";
  }
  return "unknown";
}

LookaheadPolicy::LookaheadPolicy(LookaheadKind kind, DispatchParams params, ErrorModel model,
                                 LolpMode lolp_mode)
    : DispatchPolicy(params), kind_(kind), model_(std::move(model)), lolp_mode_(lolp_mode) {
  params.validate();
}

double LookaheadPolicy::target(const StageInput& in) const {
  switch (kind_) {
    case LookaheadKind::LolpOneStep:
      return lolp_one_step_target(in.state, params(), model_, lolp_mode_, in.last_period);
    case LookaheadKind::VollOneStepExact:
      return voll_one_step_target_exact(in.state, params(), model_, in.last_period);
    case LookaheadKind::VollOneStepApprox:
      return voll_one_step_target_approx(in.state, params(), model_, in.last_period);
    case LookaheadKind::MultiStep:
      return multi_step_target(in.state, params(), model_, in.last_period);
  }
  return in.state.current();
}

AffinePolicyAdapter::AffinePolicyAdapter(AffinePolicy policy, DispatchParams params,
                                         std::string label)
    : DispatchPolicy(params), policy_(std::move(policy)), label_(std::move(label)) {}

AffinePolicyAdapter::AffinePolicyAdapter(AffinePolicy policy, DispatchParams params,
                                         ErrorModel model, std::shared_ptr<const ConicSolver> solver,
                                         std::string label)
    : DispatchPolicy(params),
      policy_(std::move(policy)),
      model_(std::move(model)),
      solver_(std::move(solver)),
      label_(std::move(label)) {}

double AffinePolicyAdapter::target(const StageInput& in) const {
  const int t = in.state.t;
  if (!solver_ || t == 0) {
    double g = execute_affine(policy_, in.history, t);
    if (!nominal_.empty()) {
      double initial = in.state.current();
      for (int s = 0; s < t; ++s) {
        initial -= in.history[static_cast<std::size_t>(s)].eps[static_cast<std::size_t>(t - s - 1)];
      }
      g += initial - nominal_[static_cast<std::size_t>(t)];
    }
    return g;
  }

  const int remaining = in.last_period - t + 1;
  if (remaining < 2) return in.state.current();
  DispatchParams sub = params();
  sub.T = remaining;
  std::vector<double> dhat(static_cast<std::size_t>(remaining) + 1);
  for (int k = 0; k <= remaining; ++k) {
    dhat[static_cast<std::size_t>(k)] = at(in.state, std::min(t + k, in.state.horizon()));
  }
  const StackedModel st = build_stacked_model(remaining, *model_);
  const ChanceRows rows = build_chance_rows(remaining, sub);
  AssembleOptions opts;
  opts.g_prev = in.g_prev;
  const AffinePolicy fresh =
      solve_affine_policy(assemble_socp(dhat, st, rows, sub, opts), remaining, *solver_);
  return fresh.a()[0];
}

double decide(const DispatchPolicy& policy, const StageInput& in) { return policy.decide(in); }

}  // namespace rld
