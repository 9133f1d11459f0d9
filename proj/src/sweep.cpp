#include "rld/sweep.hpp"

#include <cstdio>
#include <memory>
#include <optional>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "rld/error.hpp"

namespace rld {

namespace {

struct PolicyCosts {
  std::string status = "ok";
  PairedCosts costs;
  std::int64_t short_stages = 0;
};

struct DayTask {
  std::string date;
  std::vector<PolicyCosts> per_policy;  // aligned with the policy list
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::unique_ptr<DispatchPolicy> make_lookahead(const std::string& base, const DispatchParams& params,
                                                const ErrorModel& model, LolpMode lolp_mode) {
  if (base == "one-step") {
    return std::make_unique<LookaheadPolicy>(LookaheadKind::VollOneStepApprox, params, model);
  }
  if (base == "one-step-exact") {
    return std::make_unique<LookaheadPolicy>(LookaheadKind::VollOneStepExact, params, model);
  }
  if (base == "lolp-one-step") {
    return std::make_unique<LookaheadPolicy>(LookaheadKind::LolpOneStep, params, model, lolp_mode);
  }
  if (base == "multi-step") {
    return std::make_unique<LookaheadPolicy>(LookaheadKind::MultiStep, params, model);
  }
  throw ConfigError("unknown policy '" + base + "'");
}

DayTask run_day(const DayProfile& profile, std::size_t day_index, double p, const RunConfig& cfg,
                const std::vector<PolicySpec>& specs, ScenarioMode mode) {
  const DayInstance inst = make_instance(profile, p, cfg.ramp_factor);
  DispatchParams params = base_params(cfg);
  params.r_down = inst.ramp.r_down;
  params.r_up = inst.ramp.r_up;
  const Distribution design_law = distribution_from_string(cfg.distribution);
  const ErrorModel design = make_error_model(cfg, inst, design_law);
  const OracleBackend backend = oracle_backend_from_string(cfg.oracle);
  const auto solver = std::make_shared<AdmmConicSolver>(cfg.solver);

  std::vector<double> nominal(inst.d);
  nominal.push_back(inst.d.back());

  // Scenario sets and oracle costs per evaluation law.
  std::vector<Scenario> sets[2];
  std::vector<double> oracle[2];
  auto ensure_law = [&](Distribution law) {
    const int k = law == Distribution::Gaussian ? 0 : 1;
    if (!sets[k].empty()) return k;
    const std::uint64_t stream = 2 * static_cast<std::uint64_t>(day_index) + static_cast<std::uint64_t>(k);
    sets[k] = make_scenarios(inst.d, design.with_distribution(law), cfg.scenarios, cfg.seed, mode, stream);
    for (const Scenario& sc : sets[k]) oracle[k].push_back(oracle_cost(sc.d, params, backend, solver.get()));
    return k;
  };

  // One affine design per day, shared by every cc variant.
  std::optional<AffineSolveResult> affine;
  auto get_affine = [&]() -> const AffineSolveResult& {
    if (!affine) {
      const StackedModel st = build_stacked_model(params.T, design);
      const ChanceRows rows = build_chance_rows(params.T, params);
      affine = try_solve_affine_policy(assemble_socp(nominal, st, rows, params), params.T, *solver);
      if (affine->status != SolveStatus::Optimal) {
        spdlog::warn("affine program {} on {} at p={}", to_string(affine->status), inst.date, p);
      }
    }
    return *affine;
  };

  DayTask task;
  task.date = inst.date;
  for (const PolicySpec& spec : specs) {
    PolicyCosts pc;
    const int k = ensure_law(spec.law);
    std::unique_ptr<DispatchPolicy> policy;
    if (spec.base == "cc" || spec.base == "cc-rh") {
      const AffineSolveResult& res = get_affine();
      if (res.status != SolveStatus::Optimal) {
        pc.status = res.status == SolveStatus::Infeasible ? "infeasible" : to_string(res.status);
        task.per_policy.push_back(std::move(pc));
        continue;
      }
      std::unique_ptr<AffinePolicyAdapter> adapter;
      if (spec.base == "cc-rh" || cfg.receding_horizon) {
        adapter = std::make_unique<AffinePolicyAdapter>(res.policy, params, design, solver, spec.name);
      } else {
        adapter = std::make_unique<AffinePolicyAdapter>(res.policy, params, spec.name);
      }
      if (mode == ScenarioMode::Anchored) adapter->set_nominal(nominal);
      policy = std::move(adapter);
    } else {
      policy = make_lookahead(spec.base, params, design, lolp_mode_from_string(cfg.lolp_mode));
    }
    pc.costs.oracle = oracle[k];
    pc.costs.shortfalls.assign(static_cast<std::size_t>(params.T), 0);
    for (const Scenario& sc : sets[k]) {
      const Trajectory tr = simulate_policy(*policy, sc, params);
      pc.costs.policy.push_back(tr.cost);
      for (int t = 0; t < params.T; ++t) {
        if (tr.shortfall[static_cast<std::size_t>(t)] > 0.0) {
          ++pc.costs.shortfalls[static_cast<std::size_t>(t)];
          ++pc.short_stages;
        }
      }
    }
    task.per_policy.push_back(std::move(pc));
  }
  return task;
}

}  // namespace

PolicySpec parse_policy_spec(const std::string& name) {
  PolicySpec s;
  s.name = name;
  s.base = name;
  auto strip = [&](const std::string& suffix, Distribution law) {
    if (s.base.size() > suffix.size() &&
        s.base.compare(s.base.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.base.resize(s.base.size() - suffix.size());
      s.law = law;
    }
  };
  strip("-laplace", Distribution::Laplace);
  strip("-gauss", Distribution::Gaussian);
  static const char* known[] = {"cc", "cc-rh", "one-step", "one-step-exact", "lolp-one-step", "multi-step"};
  for (const char* k : known) {
    if (s.base == k) return s;
  }
  throw ConfigError("unknown policy '" + name + "'");
}

bool is_synthetic(const RunConfig& cfg) { return cfg.data == "synthetic"; }

std::vector<DayProfile> load_days(const RunConfig& cfg) {
  if (is_synthetic(cfg)) {
    SynthConfig sc = cfg.synthetic;
    sc.days = cfg.days;
    return synth_profiles(sc);
  }
  const std::vector<DayProfile> all = aggregate_hourly(load_series(cfg.data));
  for (const DayProfile& d : all) {
    if (static_cast<int>(d.load.size()) != cfg.T) {
      throw ConfigError("data days have 24 hours; set T = 24 for CSV input");
    }
  }
  return pick_days(all, std::min(cfg.days, static_cast<int>(all.size())), cfg.seed);
}

SweepResult penetration_sweep(const std::vector<DayProfile>& days, const RunConfig& cfg,
                              bool synthetic_data) {
  cfg.validate();
  if (days.empty()) throw DataError("no days to evaluate");
  for (const DayProfile& d : days) {
    if (static_cast<int>(d.load.size()) != cfg.T) throw DataError("day " + d.date + " does not have T periods");
  }
  std::vector<PolicySpec> specs;
  for (const std::string& n : cfg.policies) specs.push_back(parse_policy_spec(n));
  ScenarioMode mode = synthetic_data ? ScenarioMode::Forward : ScenarioMode::Anchored;
  if (cfg.scenario_mode != "auto") mode = scenario_mode_from_string(cfg.scenario_mode);

  const int np = static_cast<int>(cfg.penetration.size());
  const int nd = static_cast<int>(days.size());
  std::vector<DayTask> tasks(static_cast<std::size_t>(np * nd));
  parallel_for(np * nd, cfg.jobs, [&](int i) {
    const int pi = i / nd;
    const int di = i % nd;
    tasks[static_cast<std::size_t>(i)] =
        run_day(days[static_cast<std::size_t>(di)], static_cast<std::size_t>(di),
                cfg.penetration[static_cast<std::size_t>(pi)], cfg, specs, mode);
    spdlog::debug("p={} day {} done", cfg.penetration[static_cast<std::size_t>(pi)],
                  days[static_cast<std::size_t>(di)].date);
  });

  SweepResult out;
  for (int pi = 0; pi < np; ++pi) {
    const double p = cfg.penetration[static_cast<std::size_t>(pi)];
    for (std::size_t s = 0; s < specs.size(); ++s) {
      SweepSummary sum;
      sum.p = p;
      sum.policy = specs[s].name;
      PairedCosts all;
      std::int64_t short_stages = 0;
      for (int di = 0; di < nd; ++di) {
        const DayTask& task = tasks[static_cast<std::size_t>(pi * nd + di)];
        const PolicyCosts& pc = task.per_policy[s];
        SweepRow row;
        row.p = p;
        row.day = task.date;
        row.policy = specs[s].name;
        row.law = to_string(specs[s].law);
        row.status = pc.status;
        if (pc.status != "ok") {
          ++sum.failed_days;
          out.rows.push_back(std::move(row));
          continue;
        }
        const EvalResult ev = summarize(specs[s].name, pc.costs, cfg.seed);
        row.scenarios = ev.scenarios;
        row.mean_cost = ev.mean_cost;
        row.oracle_mean = ev.oracle_mean;
        row.ratio = ev.ratio;
        row.shortfall_rate = static_cast<double>(pc.short_stages) / (static_cast<double>(ev.scenarios) * cfg.T);
        out.rows.push_back(std::move(row));
        ++sum.days;
        all.policy.insert(all.policy.end(), pc.costs.policy.begin(), pc.costs.policy.end());
        all.oracle.insert(all.oracle.end(), pc.costs.oracle.begin(), pc.costs.oracle.end());
        short_stages += pc.short_stages;
      }
      if (!all.policy.empty()) {
        const EvalResult ev = summarize(specs[s].name, all, cfg.seed);
        sum.scenarios = ev.scenarios;
        sum.mean_cost = ev.mean_cost;
        sum.oracle_mean = ev.oracle_mean;
        sum.ratio = ev.ratio;
        sum.ratio_se = ev.ratio_se;
        sum.shortfall_rate = static_cast<double>(short_stages) / (static_cast<double>(ev.scenarios) * cfg.T);
      }
      out.summary.push_back(sum);
    }
  }
  return out;
}

std::string results_csv(const SweepResult& r) {
  std::string s = "p,day,policy,law,status,scenarios,mean_cost,oracle_mean,ratio,shortfall_rate\n";
  for (const SweepRow& row : r.rows) {
    s += fmt(row.p) + "," + row.day + "," + row.policy + "," + row.law + "," + row.status + "," +
         std::to_string(row.scenarios) + "," + fmt(row.mean_cost) + "," + fmt(row.oracle_mean) + "," +
         fmt(row.ratio) + "," + fmt(row.shortfall_rate) + "\n";
  }
  return s;
}

std::string summary_json(const SweepResult& r, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["scenarios_per_day"] = cfg.scenarios;
  j["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const SweepSummary& s : r.summary) {
    rows.push_back({{"p", s.p},
                    {"policy", s.policy},
                    {"days", s.days},
                    {"failed_days", s.failed_days},
                    {"scenarios", s.scenarios},
                    {"mean_cost", s.mean_cost},
                    {"oracle_mean", s.oracle_mean},
                    {"ratio", s.ratio},
                    {"ratio_se", s.ratio_se},
                    {"shortfall_rate", s.shortfall_rate}});
  }
  j["summary"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace rld
