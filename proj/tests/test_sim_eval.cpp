#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "rld/config.hpp"
#include "rld/error.hpp"
#include "rld/sim_eval.hpp"
#include "rld/sweep.hpp"

using namespace rld;

namespace {

// Dispatches a fixed sequence (clamped like any other policy).
class Replay final : public DispatchPolicy {
 public:
  Replay(std::vector<double> g, DispatchParams p) : DispatchPolicy(p), g_(std::move(g)) {}
  std::string name() const override { return "replay"; }
  double target(const StageInput& in) const override { return g_[static_cast<std::size_t>(in.state.t)]; }

 private:
  std::vector<double> g_;
};

// Covers the current demand except for a fixed gap at one stage.
class Short final : public DispatchPolicy {
 public:
  Short(int stage, double gap, DispatchParams p) : DispatchPolicy(p), stage_(stage), gap_(gap) {}
  std::string name() const override { return "short"; }
  double target(const StageInput& in) const override {
    const double d = in.state.dhat[static_cast<std::size_t>(in.state.t)];
    return in.state.t == stage_ ? d - gap_ : d;
  }

 private:
  int stage_;
  double gap_;
};

DispatchParams loose(int T) {
  DispatchParams p;
  p.T = T;
  p.r_down = p.r_up = 1e6;
  return p;
}

std::vector<double> oracle_dispatch(std::span<const double> d, const DispatchParams& p) {
  const Solution s = solve(oracle_lp(d, p));
  REQUIRE(s.status == SolveStatus::Optimal);
  return std::vector<double>(s.x.data(), s.x.data() + d.size());
}

}  // namespace

TEST_SUITE("sim-eval") {

TEST_CASE("zero variance scenarios reproduce the forecast") {
  const std::vector<double> base{10.0, 12.0, 9.0, 11.0};
  for (ScenarioMode mode : {ScenarioMode::Forward, ScenarioMode::Anchored}) {
    const auto sc = make_scenarios(base, ErrorModel::zero(4), 3, 1, mode);
    REQUIRE(sc.size() == 3);
    for (const Scenario& s : sc) {
      CHECK(s.d == base);
      CHECK(s.dhat0.size() == 5);
      CHECK(s.dhat0.back() == 11.0);
      for (const MarginalError& e : s.eps) {
        for (double v : e.eps) CHECK(v == 0.0);
      }
    }
  }
  CHECK_THROWS(make_scenarios(base, ErrorModel::zero(4), 0, 1));
}

TEST_CASE("forward scenarios carry the horizon variance") {
  const int T = 4;
  const ErrorModel m({0.0, 1.0, 2.0, 2.5, 3.5});
  const std::vector<double> base(T + 1, 50.0);
  const int n = 100000;
  const auto sc = make_scenarios(base, m, n, 9, ScenarioMode::Forward);
  for (int tau = 1; tau < T; ++tau) {
    double s2 = 0.0;
    for (const Scenario& s : sc) {
      const double e = s.d[static_cast<std::size_t>(tau)] - s.dhat0[static_cast<std::size_t>(tau)];
      s2 += e * e;
    }
    const double var = m.sigma(tau) * m.sigma(tau);
    CHECK(std::abs(s2 / n - var) < 3.0 * var * std::sqrt(2.0 / n));
  }
}

TEST_CASE("anchored scenarios keep the realized day and stay consistent") {
  const std::vector<double> day{100.0, 104.0, 97.0, 110.0, 108.0};
  const ErrorModel m = ErrorModel::sqrt_curve(5, 4.0);
  for (const Scenario& s : make_scenarios(day, m, 50, 3, ScenarioMode::Anchored)) {
    CHECK(s.d == day);
    CHECK(scenario_inconsistency(s) < 1e-9);
  }
  for (const Scenario& s : make_scenarios(day, m, 50, 3, ScenarioMode::Forward)) {
    CHECK(s.dhat0[0] == day[0]);
    CHECK(scenario_inconsistency(s) < 1e-9);
  }
  CHECK(scenario_mode_from_string(to_string(ScenarioMode::Anchored)) == ScenarioMode::Anchored);
  CHECK_THROWS_AS(scenario_mode_from_string("sideways"), ConfigError);
}

TEST_CASE("constant demand costs c times the total") {
  const int T = 4;
  const DispatchParams p = loose(T);
  const ErrorModel z = ErrorModel::zero(T);
  const Scenario s = make_scenarios(std::vector<double>(T, 10.0), z, 1, 1).front();
  for (LookaheadKind k :
       {LookaheadKind::LolpOneStep, LookaheadKind::VollOneStepExact, LookaheadKind::VollOneStepApprox,
        LookaheadKind::MultiStep}) {
    const LookaheadPolicy pol(k, p, z);
    CHECK(simulate_policy(pol, s, p).cost == doctest::Approx(10.0 * p.c * T));
  }
}

TEST_CASE("shortfall is charged at q") {
  const int T = 3;
  const DispatchParams p = loose(T);
  const Scenario s = make_scenarios(std::vector<double>{10.0, 20.0, 15.0}, ErrorModel::zero(T), 1, 1).front();
  const Trajectory tr = simulate_policy(Short(1, 2.0, p), s, p);
  CHECK(tr.shortfall[1] == doctest::Approx(2.0));
  CHECK(tr.shortfall[0] == 0.0);
  CHECK(tr.cost == doctest::Approx(p.c * (45.0 - 2.0) + 2.0 * p.q));
}

TEST_CASE("one-step approximation traced by hand") {
  DispatchParams p;
  p.T = 2;
  p.r_down = p.r_up = 8.0;
  const ErrorModel m = ErrorModel::sqrt_curve(2, 5.0);
  const double z = oracle::normal_quantile(1900.0 / 1950.0);
  const LookaheadPolicy pol(LookaheadKind::VollOneStepApprox, p, m);
  for (const Scenario& s : make_scenarios(std::vector<double>{100.0, 110.0, 110.0}, m, 20, 4)) {
    const double g0 = std::max(s.dhat0[0], s.dhat0[1] - 8.0 + z * 5.0);
    const double d1 = s.d[1];
    const double g1 = std::clamp(d1, std::max(0.0, g0 - 8.0), g0 + 8.0);
    const double cost = p.c * (g0 + g1) + p.q * (std::max(0.0, s.d[0] - g0) + std::max(0.0, d1 - g1));
    const Trajectory tr = simulate_policy(pol, s, p);
    CHECK(tr.g[0] == doctest::Approx(g0).epsilon(1e-12));
    CHECK(tr.g[1] == doctest::Approx(g1).epsilon(1e-12));
    CHECK(tr.cost == doctest::Approx(cost).epsilon(1e-12));
  }
}

TEST_CASE("policy failures name the stage") {
  class Broken final : public DispatchPolicy {
   public:
    using DispatchPolicy::DispatchPolicy;
    std::string name() const override { return "broken"; }
    double target(const StageInput& in) const override {
      if (in.state.t == 2) throw ModelError("boom");
      return 0.0;
    }
  };
  const DispatchParams p = loose(3);
  const Scenario s = make_scenarios(std::vector<double>(3, 1.0), ErrorModel::zero(3), 1, 1).front();
  try {
    simulate_policy(Broken(p), s, p);
    FAIL("expected a policy error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Model);
    CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
  }
}

TEST_CASE("oracle spot values") {
  DispatchParams p;
  p.c = 1.0;
  p.q = 100.0;
  p.r_down = p.r_up = 5.0;
  const std::vector<double> d{10.0, 20.0};
  CHECK(std::abs(oracle_cost(d, p, OracleBackend::Lp) - 35.0) <= 1e-6);
  CHECK(std::abs(oracle_cost_exact(d, p) - 35.0) <= 1e-9);
  CHECK(oracle::enumerate_dispatch(d, 1.0, 100.0, 5.0, 5.0, 40.0, 0.5) == doctest::Approx(35.0));
  const std::vector<double> g = oracle_dispatch(d, p);
  CHECK(g[0] == doctest::Approx(15.0).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(20.0).epsilon(1e-6));

  const std::vector<double> flat(6, 42.0);
  CHECK(oracle_cost_exact(flat, loose(6)) == doctest::Approx(6 * 42.0 * 50.0));
  CHECK(oracle_cost(flat, loose(6)) == doctest::Approx(6 * 42.0 * 50.0).epsilon(1e-8));
}

TEST_CASE("piecewise-linear oracle matches the lp") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0), r(1.0, 20.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int T = 2 + trial % 7;
    std::vector<double> d(static_cast<std::size_t>(T));
    for (double& v : d) v = u(rng);
    DispatchParams p;
    p.r_down = r(rng);
    p.r_up = r(rng);
    const double exact = oracle_cost_exact(d, p);
    const double lp = oracle_cost(d, p, OracleBackend::Lp);
    CHECK(std::abs(exact - lp) <= 1e-6 * (1.0 + exact));
  }
}

TEST_CASE("oracle cost does not grow as ramps loosen") {
  const std::vector<double> d{30.0, 80.0, 20.0, 95.0, 60.0, 10.0};
  double prev = 1e300;
  for (double r : {1.0, 5.0, 10.0, 30.0, 100.0}) {
    DispatchParams p;
    p.r_down = p.r_up = r;
    const double v = oracle_cost_exact(d, p);
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("policies never beat the oracle and the oracle replays at ratio one") {
  const int T = 6;
  DispatchParams p;
  p.T = T;
  p.r_down = p.r_up = 6.0;
  const ErrorModel m = ErrorModel::sqrt_curve(T, 3.0);
  const std::vector<double> base{50.0, 56.0, 61.0, 58.0, 52.0, 57.0, 57.0};
  const auto sc = make_scenarios(base, m, 200, 12);
  const LookaheadPolicy one(LookaheadKind::VollOneStepApprox, p, m);
  const LookaheadPolicy multi(LookaheadKind::MultiStep, p, m);
  const DispatchPolicy* pols[] = {&one, &multi};
  const auto res = evaluate(pols, sc, p);
  REQUIRE(res.size() == 2);
  for (const EvalResult& r : res) {
    CHECK(r.ratio >= 1.0 - 1e-6);
    CHECK(r.scenarios == 200);
    CHECK(r.shortfall_freq.size() == static_cast<std::size_t>(T));
  }
  for (const Scenario& s : sc) {
    CHECK(simulate_policy(one, s, p).cost >= oracle_cost_exact(s.d, p) - 1e-6);
  }

  const auto flat = make_scenarios(base, ErrorModel::zero(T), 1, 1);
  const Replay replay(oracle_dispatch(flat.front().d, p), p);
  const DispatchPolicy* solo[] = {&replay};
  const auto self = evaluate(solo, flat, p);
  CHECK(std::abs(self.front().ratio - 1.0) <= 1e-6);
}

TEST_CASE("evaluation is deterministic") {
  const int T = 5;
  DispatchParams p;
  p.T = T;
  p.r_down = p.r_up = 4.0;
  const ErrorModel m = ErrorModel::sqrt_curve(T, 2.0);
  const std::vector<double> base{30.0, 33.0, 35.0, 31.0, 29.0};
  const LookaheadPolicy pol(LookaheadKind::MultiStep, p, m);
  const DispatchPolicy* pols[] = {&pol};
  const auto a = evaluate(pols, make_scenarios(base, m, 100, 77), p, OracleBackend::Exact, nullptr, 77);
  const auto b = evaluate(pols, make_scenarios(base, m, 100, 77), p, OracleBackend::Exact, nullptr, 77);
  CHECK(a.front().mean_cost == b.front().mean_cost);
  CHECK(a.front().ratio == b.front().ratio);
  CHECK(a.front().ratio_se == b.front().ratio_se);
  CHECK(a.front().shortfall_freq == b.front().shortfall_freq);
  CHECK(a.front().seed == 77);
}

TEST_CASE("pairwise sum and ratio of means") {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 0.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(5000);
  for (double& x : w) x = u(rng);
  long double ref = 0.0L;
  for (double x : w) ref += x;
  CHECK(std::abs(pairwise_sum(w) - static_cast<double>(ref)) < 1e-10);

  const std::vector<double> num{2.0, 4.0, 6.0};
  const std::vector<double> den{1.0, 2.0, 3.0};
  const RatioEstimate r = ratio_of_means(num, den);
  CHECK(r.ratio == doctest::Approx(2.0));
  CHECK(r.se == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(97, jobs, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](int i) {
                                 if (i == 7) throw std::runtime_error("task");
                               }),
                  std::runtime_error);
}

TEST_CASE("no wind and no noise gives unit ratios for lookahead-complete policies") {
  RunConfig cfg;
  cfg.penetration = {0.0};
  cfg.sigma.rho = 0.0;
  cfg.days = 2;
  cfg.scenarios = 3;
  cfg.jobs = 1;
  cfg.policies = {"cc", "one-step", "multi-step", "cc-laplace"};
  const SweepResult res = penetration_sweep(load_days(cfg), cfg, true);
  CHECK(res.rows.size() == 2 * 4);
  CHECK(res.summary.size() == 4);
  for (const SweepRow& r : res.rows) {
    CAPTURE(r.policy);
    CHECK(r.status == "ok");
    if (r.policy == "one-step") {
      // Looking one period ahead cannot pre-ramp for a rise longer than one
      // ramp step, so the myopic rule pays shortfall even without noise.
      CHECK(r.ratio > 1.0);
    } else {
      CHECK(std::abs(r.ratio - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("sweep shape follows the penetration grid") {
  RunConfig cfg;
  cfg.penetration = {5.0, 10.0};
  cfg.days = 1;
  cfg.scenarios = 4;
  cfg.policies = {"one-step", "multi-step"};
  const SweepResult res = penetration_sweep(load_days(cfg), cfg, true);
  REQUIRE(res.rows.size() == 4);
  CHECK(res.rows[0].p == 5.0);
  CHECK(res.rows[2].p == 10.0);
  CHECK(res.rows[1].policy == "multi-step");
  REQUIRE(res.summary.size() == 4);
  CHECK(results_csv(res).rfind("p,day,policy,law,status,scenarios,mean_cost,oracle_mean,ratio,shortfall_rate\n", 0) == 0);
  CHECK(parse_policy_spec("cc-laplace").base == "cc");
  CHECK(parse_policy_spec("cc-laplace").law == Distribution::Laplace);
  CHECK(parse_policy_spec("cc-gauss").base == "cc");
  CHECK_THROWS_AS(parse_policy_spec("greedy"), ConfigError);
}

}  // TEST_SUITE
