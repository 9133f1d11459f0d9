#include "rld/sim_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rld/error.hpp"

namespace rld {

namespace {

std::vector<double> extend_base(std::span<const double> base, int T) {
  if (static_cast<int>(base.size()) != T && static_cast<int>(base.size()) != T + 1) {
    throw ModelError("scenario base must have T or T+1 entries");
  }
  std::vector<double> out(base.begin(), base.end());
  if (static_cast<int>(out.size()) == T) out.push_back(out.back());
  return out;
}

// Convex piecewise-linear function on [0, inf): segment k starts at x[k]
// with slope s[k]; x[0] = 0.
struct Pwl {
  double f0 = 0.0;
  std::vector<double> x{0.0};
  std::vector<double> s{0.0};

  double at(double y) const {
    double v = f0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double end = k + 1 < x.size() ? x[k + 1] : y;
      if (y <= x[k]) break;
      v += s[k] * (std::min(y, end) - x[k]);
    }
    return v;
  }

  void add_linear(double c) {
    for (double& v : s) v += c;
  }

  // + q (d - y)^+ on y >= 0.
  void add_shortfall(double q, double d) {
    if (d <= 0.0) return;
    f0 += q * d;
    auto it = std::lower_bound(x.begin(), x.end(), d);
    const auto k = static_cast<std::size_t>(it - x.begin());
    if (it == x.end() || *it != d) {
      x.insert(it, d);
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(k), s[k - 1]);
    }
    for (std::size_t j = 0; j < k; ++j) s[j] -= q;
  }

  // Smallest minimizer; the last slope must be positive.
  double argmin() const {
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] >= 0.0) return x[k];
    }
    throw ModelError("oracle cost-to-go is unbounded below");
  }

  // y -> min of the function over [max(0, y - r_down), y + r_up].
  Pwl window_min(double r_down, double r_up) const {
    const double xs = argmin();
    Pwl out;
    out.x.clear();
    out.s.clear();
    auto push = [&out](double start, double slope) {
      if (!out.x.empty() && start <= out.x.back()) {
        out.s.back() = slope;
        return;
      }
      out.x.push_back(start);
      out.s.push_back(slope);
    };
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double end = k + 1 < x.size() ? x[k + 1] : xs;
      const double lo = std::max(x[k], r_up);
      if (x[k] >= xs) break;
      if (std::min(end, xs) > lo) push(lo - r_up, s[k]);
    }
    push(std::max(0.0, xs - r_up), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] >= xs) push(x[k] + r_down, s[k]);
    }
    out.f0 = at(std::min(r_up, xs));
    return out;
  }
};

}  // namespace

const char* to_string(ScenarioMode m) {
  return m == ScenarioMode::Forward ? "forward" : "anchored";
}

ScenarioMode scenario_mode_from_string(const std::string& s) {
  if (s == "forward") return ScenarioMode::Forward;
  if (s == "anchored") return ScenarioMode::Anchored;
  throw ConfigError("unknown scenario mode '" + s + "'");
}

std::vector<Scenario> make_scenarios(std::span<const double> base, const ErrorModel& model, int n,
                                     std::uint64_t seed, ScenarioMode mode, std::uint64_t stream) {
  if (n < 1) throw ConfigError("scenario count must be >= 1");
  const int T = model.horizon();
  const std::vector<double> b = extend_base(base, T);
  std::vector<Scenario> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, stream, static_cast<std::uint64_t>(i));
    Scenario& sc = out[static_cast<std::size_t>(i)];
    std::vector<double> acc(static_cast<std::size_t>(T) + 1, 0.0);
    for (int t = 0; t < T; ++t) {
      sc.eps.push_back(sample_marginal_error(model, t, rng));
      const auto& e = sc.eps.back().eps;
      for (std::size_t j = 0; j < e.size(); ++j) acc[static_cast<std::size_t>(t) + 1 + j] += e[j];
    }
    if (mode == ScenarioMode::Forward) {
      sc.dhat0 = b;
      sc.d.resize(static_cast<std::size_t>(T));
      for (int tau = 0; tau < T; ++tau) {
        sc.d[static_cast<std::size_t>(tau)] = b[static_cast<std::size_t>(tau)] + acc[static_cast<std::size_t>(tau)];
      }
    } else {
      sc.d.assign(b.begin(), b.begin() + T);
      sc.dhat0.resize(b.size());
      for (std::size_t tau = 0; tau < b.size(); ++tau) sc.dhat0[tau] = b[tau] - acc[tau];
    }
  }
  return out;
}

double scenario_inconsistency(const Scenario& s) {
  const int T = static_cast<int>(s.d.size());
  double worst = 0.0;
  for (int tau = 0; tau < T; ++tau) {
    double v = s.dhat0[static_cast<std::size_t>(tau)];
    for (int t = 0; t < tau; ++t) {
      v += s.eps[static_cast<std::size_t>(t)].eps[static_cast<std::size_t>(tau - t - 1)];
    }
    worst = std::max(worst, std::abs(v - s.d[static_cast<std::size_t>(tau)]));
  }
  return worst;
}

Trajectory simulate_policy(const DispatchPolicy& policy, const Scenario& scenario,
                           const DispatchParams& params) {
  const int T = static_cast<int>(scenario.d.size());
  if (T < 1 || static_cast<int>(scenario.dhat0.size()) != T + 1 ||
      static_cast<int>(scenario.eps.size()) < T - 1) {
    throw ModelError("scenario is not self-consistent in its dimensions");
  }
  Trajectory tr;
  tr.g.reserve(static_cast<std::size_t>(T));
  tr.shortfall.reserve(static_cast<std::size_t>(T));
  ForecastState state{0, scenario.dhat0};
  std::optional<double> g_prev;
  const std::span<const MarginalError> history(scenario.eps);
  for (int t = 0; t < T; ++t) {
    double g = 0.0;
    try {
      g = policy.decide(StageInput{state, g_prev, history.subspan(0, static_cast<std::size_t>(t)), T - 1});
    } catch (const Error& e) {
      throw Error(e.category(), policy.name() + " at stage " + std::to_string(t) + ": " + e.what());
    }
    const double d = state.current();
    const double short_mw = std::max(0.0, d - g);
    tr.g.push_back(g);
    tr.shortfall.push_back(short_mw);
    tr.cost += params.c * g + params.q * short_mw;
    g_prev = g;
    if (t + 1 < T) state = update_forecast(state, scenario.eps[static_cast<std::size_t>(t)]);
  }
  return tr;
}

const char* to_string(OracleBackend b) { return b == OracleBackend::Lp ? "lp" : "exact"; }

OracleBackend oracle_backend_from_string(const std::string& s) {
  if (s == "lp") return OracleBackend::Lp;
  if (s == "exact") return OracleBackend::Exact;
  throw ConfigError("unknown oracle backend '" + s + "'");
}

ConicProblem oracle_lp(std::span<const double> d, const DispatchParams& params) {
  const int T = static_cast<int>(d.size());
  if (T < 1) throw ModelError("oracle needs at least one period");
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> b;
  int row = 0;
  for (int t = 0; t < T; ++t, ++row) {  // g_t >= 0
    trips.emplace_back(row, t, -1.0);
    b.push_back(0.0);
  }
  for (int t = 0; t < T; ++t, ++row) {  // s_t >= 0
    trips.emplace_back(row, T + t, -1.0);
    b.push_back(0.0);
  }
  for (int t = 0; t < T; ++t, ++row) {  // g_t + s_t >= d_t
    trips.emplace_back(row, t, -1.0);
    trips.emplace_back(row, T + t, -1.0);
    b.push_back(-d[static_cast<std::size_t>(t)]);
  }
  for (int t = 1; t < T; ++t) {
    trips.emplace_back(row, t, 1.0);  // g_t - g_{t-1} <= r_up
    trips.emplace_back(row, t - 1, -1.0);
    b.push_back(params.r_up);
    ++row;
    trips.emplace_back(row, t, -1.0);  // g_{t-1} - g_t <= r_down
    trips.emplace_back(row, t - 1, 1.0);
    b.push_back(params.r_down);
    ++row;
  }
  ConicProblem p;
  p.c.resize(2 * T);
  p.c.head(T).setConstant(params.c);
  p.c.tail(T).setConstant(params.q);
  p.A.resize(row, 2 * T);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.b = Eigen::Map<Eigen::VectorXd>(b.data(), row);
  p.cones = {{Cone::Kind::NonNeg, row}};
  return p;
}

double oracle_cost_exact(std::span<const double> d, const DispatchParams& params) {
  const int T = static_cast<int>(d.size());
  if (T < 1) throw ModelError("oracle needs at least one period");
  Pwl J;  // J_T = 0
  for (int t = T - 1; t >= 0; --t) {
    Pwl Q = J;
    Q.add_linear(params.c);
    Q.add_shortfall(params.q, d[static_cast<std::size_t>(t)]);
    if (t == 0) return Q.at(Q.argmin());
    J = Q.window_min(params.r_down, params.r_up);
  }
  return 0.0;
}

double oracle_cost(std::span<const double> d, const DispatchParams& params, OracleBackend backend,
                   const ConicSolver* solver) {
  if (backend == OracleBackend::Exact) return oracle_cost_exact(d, params);
  const ConicProblem p = oracle_lp(d, params);
  const Solution sol = solver ? solver->solve(p) : solve(p);
  if (sol.status != SolveStatus::Optimal) {
    throw SolverError(std::string("oracle LP: ") + to_string(sol.status));
  }
  return sol.objective;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

RatioEstimate ratio_of_means(std::span<const double> num, std::span<const double> den) {
  if (num.size() != den.size() || num.empty()) throw ModelError("ratio needs paired samples");
  const double n = static_cast<double>(num.size());
  const double sn = pairwise_sum(num);
  const double sd = pairwise_sum(den);
  RatioEstimate r;
  r.ratio = sn / sd;
  if (num.size() < 2) return r;
  std::vector<double> sq(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) {
    const double e = num[i] - r.ratio * den[i];
    sq[i] = e * e;
  }
  r.se = std::sqrt(pairwise_sum(sq) / (n * (n - 1.0))) / std::abs(sd / n);
  return r;
}

EvalResult summarize(const std::string& name, const PairedCosts& costs, std::uint64_t seed) {
  EvalResult r;
  r.policy = name;
  r.seed = seed;
  r.scenarios = static_cast<int>(costs.policy.size());
  const double n = static_cast<double>(r.scenarios);
  r.mean_cost = pairwise_sum(costs.policy) / n;
  r.oracle_mean = pairwise_sum(costs.oracle) / n;
  const RatioEstimate est = ratio_of_means(costs.policy, costs.oracle);
  r.ratio = est.ratio;
  r.ratio_se = est.se;
  for (std::int64_t k : costs.shortfalls) r.shortfall_freq.push_back(static_cast<double>(k) / n);
  return r;
}

std::vector<EvalResult> evaluate(std::span<const DispatchPolicy* const> policies,
                                 std::span<const Scenario> scenarios, const DispatchParams& params,
                                 OracleBackend backend, const ConicSolver* solver,
                                 std::uint64_t seed) {
  if (policies.empty() || scenarios.empty()) throw ModelError("evaluate needs policies and scenarios");
  const int T = static_cast<int>(scenarios.front().d.size());
  std::vector<double> oracle;
  oracle.reserve(scenarios.size());
  for (const Scenario& sc : scenarios) oracle.push_back(oracle_cost(sc.d, params, backend, solver));
  std::vector<EvalResult> out;
  for (const DispatchPolicy* policy : policies) {
    PairedCosts pc;
    pc.oracle = oracle;
    pc.shortfalls.assign(static_cast<std::size_t>(T), 0);
    for (const Scenario& sc : scenarios) {
      const Trajectory tr = simulate_policy(*policy, sc, params);
      pc.policy.push_back(tr.cost);
      for (int t = 0; t < T; ++t) {
        if (tr.shortfall[static_cast<std::size_t>(t)] > 0.0) ++pc.shortfalls[static_cast<std::size_t>(t)];
      }
    }
    out.push_back(summarize(policy->name(), pc, seed));
  }
  return out;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (n <= 0) return;
  int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto run = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (std::thread& th : pool) th.join();
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace rld
