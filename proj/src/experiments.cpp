#include "rld/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include <json.hpp>

#include "rld/affine_socp.hpp"
#include "rld/data_io.hpp"
#include "rld/error.hpp"

namespace rld {

DpInstance make_dp_instance(const RunConfig& cfg, int index) {
  const DpCheckConfig& dc = cfg.dp;
  Rng rng = make_stream(cfg.seed, 0xd9c4ULL, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> demand(dc.demand_lo, dc.demand_hi);
  std::uniform_real_distribution<double> sig(dc.sigma_min, dc.sigma_max);

  DpInstance inst;
  inst.dhat0.resize(static_cast<std::size_t>(dc.T) + 1);
  for (double& v : inst.dhat0) v = demand(rng);
  inst.sigma1 = sig(rng);
  inst.params = base_params(cfg);
  inst.params.T = dc.T;
  const std::vector<double> head(inst.dhat0.begin(), inst.dhat0.begin() + dc.T);
  const RampLimits ramp = calibrate_ramp(head, cfg.ramp_factor);
  inst.params.r_down = ramp.r_down;
  inst.params.r_up = ramp.r_up;
  inst.model = ErrorModel::sqrt_curve(dc.T, inst.sigma1, distribution_from_string(cfg.distribution));
  const double step = step_dividing(std::max(ramp.r_down, ramp.r_up), dc.step);
  inst.grid = auto_grid(inst.dhat0, inst.model, inst.params, step, dc.atoms);
  return inst;
}

std::vector<DpCheckEntry> run_dp_check(const RunConfig& cfg) {
  cfg.validate();
  DPOptions opts;
  opts.cell_budget = cfg.dp.cell_budget;
  std::vector<DpCheckEntry> out;
  for (int i = 0; i < cfg.dp.instances; ++i) {
    const DpInstance inst = make_dp_instance(cfg, i);
    const PenaltyKind kinds[] = {PenaltyKind::voll(inst.params.q),
                                 PenaltyKind::lolp(inst.params.beta[0], inst.params)};
    for (const PenaltyKind& kind : kinds) {
      const DPSolution sol = backward_induction(inst.dhat0, inst.grid, inst.model, inst.params, kind, opts);
      DpCheckEntry e;
      e.instance = i;
      e.penalty = kind.kind == PenaltyKind::Kind::Voll ? "voll" : "lolp";
      e.value = sol.value;
      e.grid_step = inst.grid.step;
      e.grid_size = inst.grid.size();
      e.report = verify_threshold_structure(sol);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::string dp_report_json(const std::vector<DpCheckEntry>& entries, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["T"] = cfg.dp.T;
  std::int64_t clamp = 0;
  std::int64_t unimodal = 0;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const DpCheckEntry& e : entries) {
    clamp += e.report.clamp_violations;
    unimodal += e.report.unimodal_violations;
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (const ThresholdViolation& v : e.report.samples) {
      samples.push_back({{"kind", v.kind == ThresholdViolation::Kind::Clamp ? "clamp" : "unimodal"},
                         {"t", v.t},
                         {"node", v.node},
                         {"g_index", v.g_index},
                         {"detail", v.detail}});
    }
    list.push_back({{"instance", e.instance},
                    {"penalty", e.penalty},
                    {"value", e.value},
                    {"grid_step", e.grid_step},
                    {"grid_size", e.grid_size},
                    {"nodes_checked", e.report.nodes_checked},
                    {"clamp_violations", e.report.clamp_violations},
                    {"unimodal_violations", e.report.unimodal_violations},
                    {"samples", samples}});
  }
  j["clamp_violations"] = clamp;
  j["unimodal_violations"] = unimodal;
  j["ok"] = clamp == 0 && unimodal == 0;
  j["instances"] = list;
  return j.dump(2) + "\n";
}

DayProgram day_affine_program(const RunConfig& cfg, const DayProfile& day, double p, int horizon) {
  if (horizon < 1 || horizon > static_cast<int>(day.load.size())) {
    throw ConfigError("horizon must lie in 1.." + std::to_string(day.load.size()));
  }
  DayProfile head = day;
  head.load.resize(static_cast<std::size_t>(horizon));
  head.wind.resize(static_cast<std::size_t>(horizon));
  const DayInstance inst = make_instance(head, p, cfg.ramp_factor);
  RunConfig sub = cfg;
  sub.T = horizon;
  DayProgram out;
  out.params = base_params(sub);
  out.params.r_down = inst.ramp.r_down;
  out.params.r_up = inst.ramp.r_up;
  out.model = make_error_model(sub, inst, distribution_from_string(cfg.distribution));
  out.dhat0 = inst.d;
  out.dhat0.push_back(inst.d.back());
  out.stacked = build_stacked_model(horizon, out.model);
  out.rows = build_chance_rows(horizon, out.params);
  out.problem = assemble_socp(out.dhat0, out.stacked, out.rows, out.params);
  return out;
}

std::vector<BenchEntry> run_solver_bench(const RunConfig& cfg) {
  cfg.validate();
  SynthConfig sc = cfg.synthetic;
  sc.days = 1;
  const DayProfile full = synth_profiles(sc).front();
  const double p = *std::max_element(cfg.penetration.begin(), cfg.penetration.end());
  const AdmmConicSolver solver(cfg.solver);

  std::vector<BenchEntry> out;
  for (int h : cfg.bench.horizons) {
    if (h > static_cast<int>(full.load.size())) throw ConfigError("bench horizon longer than a day");
    const ConicProblem prob = day_affine_program(cfg, full, p, h).problem;

    BenchEntry e;
    e.horizon = h;
    e.variables = prob.num_vars();
    e.rows = prob.num_rows();
    std::vector<double> times;
    Solution sol;
    for (int r = 0; r < cfg.bench.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      sol = solver.solve(prob);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    e.seconds = times[times.size() / 2];
    e.status = to_string(sol.status);
    e.iterations = sol.iterations;
    e.objective = sol.objective;
    e.max_residual = sol.residuals.max();
    out.push_back(e);
  }
  return out;
}

std::string solver_bench_json(const std::vector<BenchEntry>& entries, const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["repeats"] = cfg.bench.repeats;
  j["tol"] = cfg.solver.tol;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const BenchEntry& e : entries) {
    list.push_back({{"horizon", e.horizon},
                    {"variables", e.variables},
                    {"rows", e.rows},
                    {"status", e.status},
                    {"iterations", e.iterations},
                    {"seconds", e.seconds},
                    {"objective", e.objective},
                    {"max_residual", e.max_residual}});
  }
  j["runs"] = list;
  return j.dump(2) + "\n";
}

}  // namespace rld
