#include "rld/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rld/error.hpp"

namespace rld {

namespace {

using ojson = nlohmann::ordered_json;

// Pulls typed fields out of one JSON object and rejects leftover keys.
class Reader {
 public:
  Reader(const ojson& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  const ojson* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where() + "." + it.key());
    }
  }

  std::string where() const { return path_; }

 private:
  const ojson& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

ojson solver_json(const SolverSettings& s) {
  ojson j;
  j["tol"] = s.tol;
  j["max_iter"] = s.max_iter;
  j["equilibrate"] = s.equilibrate;
  j["ruiz_passes"] = s.ruiz_passes;
  j["relaxation"] = s.relaxation;
  j["infeasibility_tol"] = s.infeasibility_tol;
  j["check_interval"] = s.check_interval;
  j["rho_x"] = s.rho_x;
  j["scale"] = s.scale;
  j["anderson_memory"] = s.anderson_memory;
  j["anderson_safeguard"] = s.anderson_safeguard;
  j["adaptive_scale"] = s.adaptive_scale;
  j["adapt_interval"] = s.adapt_interval;
  return j;
}

void read_solver(const ojson& j, SolverSettings& s) {
  Reader r(j, "solver");
  r.get("tol", s.tol);
  r.get("max_iter", s.max_iter);
  r.get("equilibrate", s.equilibrate);
  r.get("ruiz_passes", s.ruiz_passes);
  r.get("relaxation", s.relaxation);
  r.get("infeasibility_tol", s.infeasibility_tol);
  r.get("check_interval", s.check_interval);
  r.get("rho_x", s.rho_x);
  r.get("scale", s.scale);
  r.get("anderson_memory", s.anderson_memory);
  r.get("anderson_safeguard", s.anderson_safeguard);
  r.get("adaptive_scale", s.adaptive_scale);
  r.get("adapt_interval", s.adapt_interval);
  r.finish();
}

ojson synth_json(const SynthConfig& s) {
  ojson j;
  j["days"] = s.days;
  j["seed"] = s.seed;
  j["load_base"] = s.load_base;
  j["load_swing"] = s.load_swing;
  j["load_day_noise"] = s.load_day_noise;
  j["load_hour_noise"] = s.load_hour_noise;
  j["wind_ar"] = s.wind_ar;
  j["wind_noise"] = s.wind_noise;
  j["wind_diurnal"] = s.wind_diurnal;
  return j;
}

void read_synth(const ojson& j, SynthConfig& s) {
  Reader r(j, "synthetic");
  r.get("days", s.days);
  r.get("seed", s.seed);
  r.get("load_base", s.load_base);
  r.get("load_swing", s.load_swing);
  r.get("load_day_noise", s.load_day_noise);
  r.get("load_hour_noise", s.load_hour_noise);
  r.get("wind_ar", s.wind_ar);
  r.get("wind_noise", s.wind_noise);
  r.get("wind_diurnal", s.wind_diurnal);
  r.finish();
}

ojson dp_json(const DpCheckConfig& d) {
  ojson j;
  j["T"] = d.T;
  j["instances"] = d.instances;
  j["step"] = d.step;
  j["atoms"] = d.atoms;
  j["sigma_min"] = d.sigma_min;
  j["sigma_max"] = d.sigma_max;
  j["demand_lo"] = d.demand_lo;
  j["demand_hi"] = d.demand_hi;
  j["cell_budget"] = d.cell_budget;
  return j;
}

void read_dp(const ojson& j, DpCheckConfig& d) {
  Reader r(j, "dp");
  r.get("T", d.T);
  r.get("instances", d.instances);
  r.get("step", d.step);
  r.get("atoms", d.atoms);
  r.get("sigma_min", d.sigma_min);
  r.get("sigma_max", d.sigma_max);
  r.get("demand_lo", d.demand_lo);
  r.get("demand_hi", d.demand_hi);
  r.get("cell_budget", d.cell_budget);
  r.finish();
}

}  // namespace

void RunConfig::validate() const {
  base_params(*this).validate();
  if (!(ramp_factor >= 0.0)) throw ConfigError("ramp_factor must be >= 0");
  for (double p : penetration) {
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("penetration levels must lie in [0, 100]");
  }
  if (!(sigma.rho >= 0.0)) throw ConfigError("sigma.rho must be >= 0");
  if (sigma.base != "wind" && sigma.base != "demand") {
    throw ConfigError("sigma.base must be 'wind' or 'demand'");
  }
  if (!sigma.table.empty()) {
    if (static_cast<int>(sigma.table.size()) < T) throw ConfigError("sigma.table needs T entries");
    double prev = 0.0;
    for (double v : sigma.table) {
      if (!(v >= prev) || !std::isfinite(v)) throw ConfigError("sigma.table must be nondecreasing and >= 0");
      prev = v;
    }
  }
  distribution_from_string(distribution);
  if (scenarios < 1) throw ConfigError("scenarios must be >= 1");
  if (days < 1) throw ConfigError("days must be >= 1");
  if (scenario_mode != "auto" && scenario_mode != "forward" && scenario_mode != "anchored") {
    throw ConfigError("scenario_mode must be auto, forward or anchored");
  }
  if (oracle != "exact" && oracle != "lp") throw ConfigError("oracle must be 'exact' or 'lp'");
  if (policies.empty()) throw ConfigError("policy list is empty");
  lolp_mode_from_string(lolp_mode);
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (!(solver.tol > 0.0) || solver.max_iter < 1 || solver.check_interval < 1 || solver.adapt_interval < 1) {
    throw ConfigError("solver tolerance and iteration limits must be positive");
  }
  if (!(solver.relaxation > 0.0 && solver.relaxation < 2.0)) throw ConfigError("solver.relaxation must lie in (0, 2)");
  if (!(solver.rho_x > 0.0) || !(solver.scale > 0.0) || !(solver.infeasibility_tol > 0.0)) {
    throw ConfigError("solver rho_x, scale and infeasibility_tol must be positive");
  }
  if (solver.anderson_memory < 0 || solver.ruiz_passes < 0) {
    throw ConfigError("solver anderson_memory and ruiz_passes must be >= 0");
  }
  if (dp.T < 1 || dp.T > 4) throw ConfigError("dp.T must lie in 1..4");
  if (dp.instances < 1 || !(dp.step > 0.0) || dp.atoms < 1 || dp.atoms % 2 == 0) {
    throw ConfigError("dp needs instances >= 1, step > 0 and an odd atom count");
  }
  if (!(dp.sigma_min >= 0.0 && dp.sigma_max >= dp.sigma_min)) throw ConfigError("dp sigma range is invalid");
  if (!(dp.demand_hi >= dp.demand_lo)) throw ConfigError("dp demand range is invalid");
  if (bench.repeats < 1) throw ConfigError("bench.repeats must be >= 1");
  for (int h : bench.horizons) {
    if (h < 2) throw ConfigError("bench horizons must be >= 2");
  }
}

std::string config_to_json(const RunConfig& cfg) {
  ojson j;
  j["T"] = cfg.T;
  j["c"] = cfg.c;
  j["q"] = cfg.q;
  j["beta"] = cfg.beta;
  j["lolp_matches_voll"] = cfg.lolp_matches_voll;
  j["ramp_factor"] = cfg.ramp_factor;
  j["penetration"] = cfg.penetration;
  j["sigma"] = ojson{{"rho", cfg.sigma.rho}, {"base", cfg.sigma.base}, {"table", cfg.sigma.table}};
  j["distribution"] = cfg.distribution;
  j["scenarios"] = cfg.scenarios;
  j["seed"] = cfg.seed;
  j["days"] = cfg.days;
  j["data"] = cfg.data;
  j["scenario_mode"] = cfg.scenario_mode;
  j["oracle"] = cfg.oracle;
  j["policies"] = cfg.policies;
  j["lolp_mode"] = cfg.lolp_mode;
  j["receding_horizon"] = cfg.receding_horizon;
  j["jobs"] = cfg.jobs;
  j["solver"] = solver_json(cfg.solver);
  j["synthetic"] = synth_json(cfg.synthetic);
  j["dp"] = dp_json(cfg.dp);
  j["bench"] = ojson{{"horizons", cfg.bench.horizons}, {"repeats", cfg.bench.repeats}};
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Reader r(j, "config");
  r.get("T", cfg.T);
  r.get("c", cfg.c);
  r.get("q", cfg.q);
  r.get("beta", cfg.beta);
  r.get("lolp_matches_voll", cfg.lolp_matches_voll);
  r.get("ramp_factor", cfg.ramp_factor);
  r.get("penetration", cfg.penetration);
  if (const ojson* s = r.child("sigma")) {
    Reader rs(*s, "sigma");
    rs.get("rho", cfg.sigma.rho);
    rs.get("base", cfg.sigma.base);
    rs.get("table", cfg.sigma.table);
    rs.finish();
  }
  r.get("distribution", cfg.distribution);
  r.get("scenarios", cfg.scenarios);
  r.get("seed", cfg.seed);
  r.get("days", cfg.days);
  r.get("data", cfg.data);
  r.get("scenario_mode", cfg.scenario_mode);
  r.get("oracle", cfg.oracle);
  r.get("policies", cfg.policies);
  r.get("lolp_mode", cfg.lolp_mode);
  r.get("receding_horizon", cfg.receding_horizon);
  r.get("jobs", cfg.jobs);
  if (const ojson* s = r.child("solver")) read_solver(*s, cfg.solver);
  if (const ojson* s = r.child("synthetic")) read_synth(*s, cfg.synthetic);
  if (const ojson* s = r.child("dp")) read_dp(*s, cfg.dp);
  if (const ojson* s = r.child("bench")) {
    Reader rb(*s, "bench");
    rb.get("horizons", cfg.bench.horizons);
    rb.get("repeats", cfg.bench.repeats);
    rb.finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

DispatchParams base_params(const RunConfig& cfg) {
  DispatchParams p;
  p.T = cfg.T;
  p.c = cfg.c;
  p.q = cfg.q;
  p.beta = cfg.beta;
  if (cfg.lolp_matches_voll) p.beta[0] = lolp_beta_matching_voll(p);
  return p;
}

LolpMode lolp_mode_from_string(const std::string& s) {
  if (s == "two-term") return LolpMode::TwoTerm;
  if (s == "printed-root") return LolpMode::PrintedRoot;
  throw ConfigError("unknown lolp_mode '" + s + "'");
}

ErrorModel make_error_model(const RunConfig& cfg, const DayInstance& day, Distribution dist) {
  double m = 0.0;
  if (cfg.sigma.base == "wind") {
    m = std::abs(day.mean_wind);
  } else {
    for (double v : day.d) m += std::abs(v);
    m /= static_cast<double>(day.d.size());
  }
  std::vector<double> curve(static_cast<std::size_t>(cfg.T) + 1, 0.0);
  for (int h = 1; h <= cfg.T; ++h) {
    curve[static_cast<std::size_t>(h)] =
        cfg.sigma.table.empty() ? m * cfg.sigma.rho * std::sqrt(static_cast<double>(h))
                                : m * cfg.sigma.table[static_cast<std::size_t>(h) - 1];
  }
  return ErrorModel(std::move(curve), dist);
}

}  // namespace rld
