// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Arguments select criteria by number (default: all);
// --report <file> also writes the lines to a file.
//
// Reference values come from tests/oracles.hpp, never from the library code
// under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rld/affine_socp.hpp"
#include "rld/config.hpp"
#include "rld/core_model.hpp"
#include "rld/dp_oracle.hpp"
#include "rld/experiments.hpp"
#include "rld/policies.hpp"
#include "rld/sim_eval.hpp"
#include "rld/solver.hpp"
#include "rld/sweep.hpp"

using namespace rld;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail << "first failure: " << why << "; ";
    pass = pass && ok;
  }
};

// The full sweep is shared by criteria 7 and 8.
struct SweepRun {
  SweepResult result;
  std::string csv;
  double seconds = 0.0;
};

SweepRun run_full_sweep() {
  const RunConfig cfg;  // synthetic, 100 days, 200 scenarios, p = 5..30
  const auto t0 = Clock::now();
  SweepRun run;
  run.result = penetration_sweep(load_days(cfg), cfg, is_synthetic(cfg));
  run.csv = results_csv(run.result);
  run.seconds = seconds_since(t0);
  return run;
}

// 1. DP stage-0 target against the exact one-step VOLL target, T = 2.
void criterion_1(Outcome& out) {
  const auto t0 = Clock::now();
  RunConfig cfg;  // c = 50, q = 2000, sigma(1) in [1, 10], step 0.25
  cfg.dp.T = 2;
  // The expectation is taken over a quantized law; its atom spacing 12 sigma / k
  // must be comparable to the grid step before the target resolves to it.
  cfg.dp.atoms = 255;
  double worst_steps = 0.0;
  for (int i = 0; i < 20; ++i) {
    const DpInstance inst = make_dp_instance(cfg, i);
    out.require(inst.grid.step <= 0.25 + 1e-15, "grid step above 0.25");
    const DPSolution sol =
        backward_induction(inst.dhat0, inst.grid, inst.model, inst.params, PenaltyKind::voll(inst.params.q));
    const double dp = extract_target(sol, 0, 0);
    const double exact = voll_one_step_target_exact(ForecastState{0, inst.dhat0}, inst.params, inst.model);
    const double steps = std::abs(dp - exact) / inst.grid.step;
    worst_steps = std::max(worst_steps, steps);
    out.require(steps <= 2.0, "instance " + std::to_string(i) + " off by " + std::to_string(steps) + " steps");
  }
  const double secs = seconds_since(t0);
  out.require(secs <= 120.0, "runtime above 2 min");
  out.detail << "20 instances, worst |dp - exact| = " << worst_steps << " steps, " << secs << " s";
}

// 2. 0 <= S_approx - S_exact <= sigma(1) (z((q-2c)/(q-c)) - z((q-2c)/q)).
void criterion_2(Outcome& out) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dem(50.0, 150.0), sig(1.0, 10.0), ramp(0.0, 30.0);
  double worst_low = 0.0;
  double worst_high = -1e300;
  for (int i = 0; i < 100; ++i) {
    DispatchParams p;  // c = 50, q = 2000
    p.T = 2;
    p.r_down = ramp(rng);
    p.r_up = ramp(rng);
    const double s1 = sig(rng);
    const ErrorModel m = ErrorModel::sqrt_curve(1, s1);
    const ForecastState s{0, {dem(rng), dem(rng)}};
    const double gap = voll_one_step_target_approx(s, p, m) - voll_one_step_target_exact(s, p, m);
    const double bound = s1 * (oracle::normal_quantile((p.q - 2 * p.c) / (p.q - p.c)) -
                               oracle::normal_quantile((p.q - 2 * p.c) / p.q));
    worst_low = std::min(worst_low, gap);
    worst_high = std::max(worst_high, gap - bound);
    out.require(gap >= -1e-7, "negative gap on instance " + std::to_string(i));
    out.require(gap <= bound + 1e-7, "gap above the bound on instance " + std::to_string(i));
  }
  out.detail << "100 instances, min gap " << worst_low << ", max (gap - bound) " << worst_high;
}

// 3. Threshold structure of the DP on seeded T = 3 instances.
void criterion_3(Outcome& out) {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.dp.T = 3;
  cfg.dp.instances = 5;
  const std::vector<DpCheckEntry> entries = run_dp_check(cfg);
  std::int64_t violations = 0;
  std::int64_t nodes = 0;
  std::set<std::string> kinds;
  for (const DpCheckEntry& e : entries) {
    violations += e.report.clamp_violations + e.report.unimodal_violations;
    nodes += e.report.nodes_checked;
    kinds.insert(e.penalty);
  }
  const double secs = seconds_since(t0);
  out.require(entries.size() == 10 && kinds.size() == 2, "expected 5 instances for each penalty kind");
  out.require(violations == 0, std::to_string(violations) + " violations");
  out.require(secs <= 300.0, "runtime above 5 min");
  out.detail << entries.size() << " programs, " << nodes << " nodes, " << violations << " violations, " << secs
             << " s";
}

// 4. Per-row Monte Carlo violation frequency of a solved T = 24 policy.
void criterion_4(Outcome& out) {
  const RunConfig cfg;  // beta_k = 0.03
  const DayProfile day = synth_profiles(cfg.synthetic).front();
  const int n = 10000;
  const double limit = 0.03 + 3.0 * std::sqrt(0.03 * 0.97 / n);
  double worst = 0.0;
  for (double p : {10.0, 30.0}) {
    const DayProgram prog = day_affine_program(cfg, day, p, 24);
    const AffinePolicy pol = solve_affine_policy(prog.problem, 24, AdmmConicSolver(cfg.solver));
    const int T = 24;
    const Eigen::Map<const Eigen::VectorXd> d0(prog.dhat0.data(), T + 1);
    const Eigen::VectorXd base = prog.stacked.A * d0;
    const double scale = d0.cwiseAbs().maxCoeff();
    std::vector<int> hits(static_cast<std::size_t>(prog.rows.rows()), 0);
    Rng rng = make_stream(cfg.seed, 0xacce, static_cast<std::uint64_t>(p));
    for (int i = 0; i < n; ++i) {
      std::vector<MarginalError> eps;
      for (int t = 0; t < T; ++t) eps.push_back(sample_marginal_error(prog.model, t, rng));
      const Eigen::VectorXd e = stack_errors(prog.stacked.layout, eps);
      const Eigen::VectorXd g = pol.G() * e + pol.a();
      const Eigen::VectorXd lhs =
          prog.rows.Hd * (base + prog.stacked.C * e) + prog.rows.Hg * g - prog.rows.y;
      // Rows tracked exactly by the policy sit at zero up to the solver tolerance.
      for (int r = 0; r < prog.rows.rows(); ++r) hits[static_cast<std::size_t>(r)] += lhs[r] > 1e-8 * scale;
    }
    for (int r = 0; r < prog.rows.rows(); ++r) {
      const double freq = hits[static_cast<std::size_t>(r)] / static_cast<double>(n);
      worst = std::max(worst, freq);
      out.require(freq <= limit, "p=" + std::to_string(p) + " row " + std::to_string(r) + " at " +
                                     std::to_string(freq));
    }
    out.detail << "p=" << p << ": " << prog.rows.rows() << " rows; ";
  }
  out.detail << "worst frequency " << worst << " (limit " << limit << ")";
}

ConicProblem lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c) {
  ConicProblem p;
  p.c = c;
  p.A = G.sparseView();
  p.b = h;
  p.cones = {{Cone::Kind::NonNeg, static_cast<int>(h.size())}};
  return p;
}

// 5. KKT residuals on the bundled instances and random small programs
// against brute-force oracles.
void criterion_5(Outcome& out) {
  const SolverSettings settings;
  const std::filesystem::path dir = std::filesystem::path(RLD_SOURCE_DIR) / "data" / "instances";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  out.require(!files.empty(), "no bundled instances in " + dir.string());
  double worst_kkt = 0.0;
  for (const auto& f : files) {
    std::ifstream in(f);
    const ConicProblem prob = read_problem(in);
    const Solution s = solve(prob, settings);
    const double kkt = kkt_residuals(prob, s.x, s.y, s.s).max();
    worst_kkt = std::max(worst_kkt, kkt);
    out.require(s.status == SolveStatus::Optimal, f.filename().string() + " not optimal");
    out.require(kkt <= 1e-8, f.filename().string() + " kkt " + std::to_string(kkt));
    if (f.filename() == "lp_box_opt4.txt") out.require(std::abs(s.objective - 4.0) <= 1e-6, "box lp optimum");
    if (f.filename() == "socp_disc_opt_minus_sqrt2.txt") {
      out.require(std::abs(s.objective + std::sqrt(2.0)) <= 1e-6, "disc optimum");
    }
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 3.0), rad(1.0, 3.0);
  double worst_rel = 0.0;
  auto compare = [&](const std::string& what, const ConicProblem& prob, double want) {
    const Solution s = solve(prob, settings);
    const double rel = std::abs(s.objective - want) / std::max(1.0, std::abs(want));
    worst_rel = std::max(worst_rel, rel);
    out.require(s.status == SolveStatus::Optimal, what + " not optimal");
    out.require(rel <= 1e-4, what + " off by " + std::to_string(rel));
  };
  // 20 LPs with 2..6 variables, bounded by a box, cut by random halfspaces.
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const int extra = 6;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * n + extra, n);
    Eigen::VectorXd h(2 * n + extra);
    for (int j = 0; j < n; ++j) {
      G(j, j) = 1.0;
      G(n + j, j) = -1.0;
      h[j] = h[n + j] = 10.0;
    }
    for (int i = 0; i < extra; ++i) {
      for (int j = 0; j < n; ++j) G(2 * n + i, j) = u(rng);
      h[2 * n + i] = pos(rng);
    }
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c[j] = u(rng);
    compare("lp " + std::to_string(trial), lp(G, h, c), oracle::lp_vertex_min(G, h, c));
  }
  // 15 intersections of three discs in the plane.
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<oracle::Disc> ds;
    for (int k = 0; k < 3; ++k) ds.push_back({u(rng), u(rng), rad(rng)});
    const double c0 = u(rng);
    const double c1 = u(rng);
    ConicProblem p;
    p.c = Eigen::Vector2d(c0, c1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(9, 2);
    p.b.resize(9);
    for (int k = 0; k < 3; ++k) {
      p.b[3 * k] = ds[static_cast<std::size_t>(k)].r;
      p.b[3 * k + 1] = -ds[static_cast<std::size_t>(k)].cx;
      p.b[3 * k + 2] = -ds[static_cast<std::size_t>(k)].cy;
      A(3 * k + 1, 0) = -1.0;
      A(3 * k + 2, 1) = -1.0;
      p.cones.push_back({Cone::Kind::SecondOrder, 3});
    }
    p.A = A.sparseView();
    compare("discs " + std::to_string(trial), p, oracle::disc_intersection_min(ds, c0, c1));
  }
  // 15 balls in 3..6 dimensions: min c'x over |x - x0| <= r is c'x0 - r |c|.
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + trial % 4;
    Eigen::VectorXd c(n), x0(n);
    for (int j = 0; j < n; ++j) {
      c[j] = u(rng);
      x0[j] = 5.0 * u(rng);
    }
    const double r = rad(rng);
    ConicProblem p;
    p.c = c;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n);
    A.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
    p.A = A.sparseView();
    p.b.resize(n + 1);
    p.b[0] = r;
    p.b.tail(n) = -x0;
    p.cones = {{Cone::Kind::SecondOrder, n + 1}};
    compare("ball " + std::to_string(trial), p, c.dot(x0) - r * c.norm());
  }
  out.detail << files.size() << " bundled instances, worst kkt " << worst_kkt
             << "; 50 random programs, worst relative error " << worst_rel;
}

// 6. Oracle dispatch cost of d = (10, 20) with r = 5, c = 1, q = 100.
void criterion_6(Outcome& out) {
  DispatchParams p;
  p.T = 2;
  p.c = 1.0;
  p.q = 100.0;
  p.r_down = p.r_up = 5.0;
  const std::vector<double> d{10.0, 20.0};
  const double via_lp = oracle_cost(d, p, OracleBackend::Lp);
  const double exact = oracle_cost_exact(d, p);
  const double enumerated = oracle::enumerate_dispatch(d, 1.0, 100.0, 5.0, 5.0, 40.0, 0.5);
  out.require(std::abs(via_lp - 35.0) <= 1e-6, "lp oracle " + std::to_string(via_lp));
  out.require(std::abs(exact - 35.0) <= 1e-6, "exact oracle " + std::to_string(exact));
  out.require(std::abs(enumerated - 35.0) <= 1e-9, "enumeration " + std::to_string(enumerated));
  out.detail.precision(10);
  out.detail << "lp " << via_lp << ", exact " << exact << ", enumeration " << enumerated;
}

// 7. Properties of the full penetration sweep.
void criterion_7(Outcome& out, const SweepRun& run) {
  std::map<std::pair<double, std::string>, const SweepSummary*> at;
  std::set<double> levels;
  int failed = 0;
  double min_ratio = 1e300;
  for (const SweepSummary& s : run.result.summary) {
    at[{s.p, s.policy}] = &s;
    levels.insert(s.p);
    failed += s.failed_days;
    min_ratio = std::min(min_ratio, s.ratio);
    out.require(s.ratio >= 1.0 - 1e-6, "summary ratio below 1 at p=" + std::to_string(s.p) + " " + s.policy);
  }
  for (const SweepRow& r : run.result.rows) {
    if (r.status != "ok") continue;
    min_ratio = std::min(min_ratio, r.ratio);
    out.require(r.ratio >= 1.0 - 1e-6, "day ratio below 1 on " + r.day + " " + r.policy);
  }
  out.require(levels.size() == 6, "expected six penetration levels");
  const SweepSummary* prev = nullptr;
  double worst_laplace = 0.0;
  for (double p : levels) {
    const std::string tag = "p=" + std::to_string(static_cast<int>(p)) + ": ";
    const SweepSummary* cc = at[{p, "cc-gauss"}];
    const SweepSummary* lap = at[{p, "cc-laplace"}];
    const SweepSummary* one = at[{p, "one-step"}];
    const SweepSummary* multi = at[{p, "multi-step"}];
    if (!cc || !lap || !one || !multi) {
      out.require(false, tag + "missing policy");
      continue;
    }
    out.require(cc->ratio <= one->ratio, tag + "cc above one-step");
    const bool between = multi->ratio >= std::min(cc->ratio, one->ratio) && multi->ratio <= std::max(cc->ratio, one->ratio);
    out.require(between || std::abs(multi->ratio - cc->ratio) <= 0.05 * cc->ratio, tag + "multi-step out of band");
    const double rel = std::abs(lap->ratio - cc->ratio) / cc->ratio;
    worst_laplace = std::max(worst_laplace, rel);
    out.require(rel <= 0.10, tag + "gauss and laplace curves apart");
    if (prev) {
      out.require(cc->ratio >= prev->ratio - std::max(cc->ratio_se, prev->ratio_se), tag + "cc ratio decreased");
    }
    prev = cc;
  }
  out.require(run.seconds <= 900.0, "runtime above 15 min");
  out.detail << run.result.rows.size() << " rows, min ratio " << min_ratio << ", worst gauss/laplace gap "
             << worst_laplace << ", failed designs " << failed << ", " << run.seconds << " s";
  for (const char* name : {"cc-gauss", "one-step", "multi-step"}) {
    out.detail << "; " << name << " by p:";
    for (double p : levels) {
      if (const SweepSummary* s = at[{p, name}]) out.detail << " " << s->ratio;
    }
  }
}

// 8. A second identical run reproduces results.csv byte for byte.
void criterion_8(Outcome& out, const SweepRun& first) {
  const SweepRun second = run_full_sweep();
  out.require(!first.csv.empty(), "empty results.csv");
  out.require(first.csv == second.csv, "results.csv differs between runs");
  out.detail << first.csv.size() << " bytes, identical: " << (first.csv == second.csv ? "yes" : "no");
}

// 9. alpha(beta) is the (1 - beta) standard normal quantile.
void criterion_9(Outcome& out) {
  double worst = 0.0;
  for (double beta : {0.5, 0.1, 0.03, 0.01, 0.001}) {
    const double a = alpha_from_beta(beta);
    const double identity = std::abs(a - normal_quantile(1.0 - beta));
    const double independent = std::abs(a - oracle::normal_quantile(1.0 - beta));
    worst = std::max({worst, identity, independent});
    out.require(identity <= 1e-9, "identity at beta=" + std::to_string(beta));
    out.require(independent <= 1e-9, "series oracle at beta=" + std::to_string(beta));
  }
  out.detail << "5 levels, worst deviation " << worst;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  std::ofstream report;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--report" && i + 1 < argc) {
      report.open(argv[++i]);
      if (!report) {
        std::cerr << "cannot write " << argv[i] << "\n";
        return 2;
      }
    } else {
      wanted.insert(std::atoi(arg.c_str()));
    }
  }
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::optional<SweepRun> sweep;
  auto shared_sweep = [&]() -> const SweepRun& {
    if (!sweep) sweep = run_full_sweep();
    return *sweep;
  };
  const std::map<int, std::function<void(Outcome&)>> criteria{
      {1, criterion_1},
      {2, criterion_2},
      {3, criterion_3},
      {4, criterion_4},
      {5, criterion_5},
      {6, criterion_6},
      {7, [&](Outcome& o) { criterion_7(o, shared_sweep()); }},
      {8, [&](Outcome& o) { criterion_8(o, shared_sweep()); }},
      {9, criterion_9},
  };

  bool all = true;
  for (int k : wanted) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    Outcome out;
    try {
      it->second(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    all = all && out.pass;
    const std::string line = "criterion " + std::to_string(k) + ": " + (out.pass ? "PASS" : "FAIL") + " (" +
                             out.detail.str() + ")";
    std::cout << line << std::endl;
    if (report) report << line << std::endl;
  }
  return all ? 0 : 1;
}
