#include "rld/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "rld/error.hpp"

namespace rld {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// E[X 1{X <= x}] for the zero-mean unit-variance law.
double partial_mean(Distribution d, double x) {
  if (std::isinf(x)) return 0.0;
  if (d == Distribution::Gaussian) return -standard_pdf(d, x);
  const double s = std::sqrt(0.5);
  if (x < 0.0) return 0.5 * std::exp(x / s) * (x - s);
  return -0.5 * std::exp(-x / s) * (x + s);
}

double cdf_ext(Distribution d, double x) {
  if (x == -kInf) return 0.0;
  if (x == kInf) return 1.0;
  return standard_cdf(d, x);
}

int index_width(double r, double step) {
  return static_cast<int>(std::floor(r / step + 1e-9));
}

std::size_t cell(const DPSolution& sol, int node, int g) {
  return static_cast<std::size_t>(node) * static_cast<std::size_t>(sol.grid.size()) +
         static_cast<std::size_t>(g);
}

// Number of bigM units carried by a Q value.
double penalty_units(const DPSolution& sol, double v) {
  if (sol.penalty.kind != PenaltyKind::Kind::Lolp) return 0.0;
  return std::floor(v / sol.penalty.big_m);
}

}  // namespace

QuantizedLaw quantize(Distribution d, double std_dev, int k) {
  if (k < 1 || k % 2 == 0) throw ConfigError("quantization needs an odd number of atoms");
  if (std_dev == 0.0 || k == 1) return {{0.0}, {1.0}};
  QuantizedLaw law;
  const double width = 12.0 / k;
  for (int i = 0; i < k; ++i) {
    const double a = i == 0 ? -kInf : -6.0 + width * i;
    const double b = i == k - 1 ? kInf : -6.0 + width * (i + 1);
    const double mass = cdf_ext(d, b) - cdf_ext(d, a);
    const double mean = (partial_mean(d, b) - partial_mean(d, a)) / mass;
    law.atoms.push_back(std_dev * mean);
    law.probs.push_back(mass);
  }
  // Exact symmetry of the atoms; renormalize the masses.
  for (int i = 0; i < k / 2; ++i) {
    const auto j = static_cast<std::size_t>(k - 1 - i);
    const auto ii = static_cast<std::size_t>(i);
    const double a = 0.5 * (law.atoms[j] - law.atoms[ii]);
    law.atoms[ii] = -a;
    law.atoms[j] = a;
    const double p = 0.5 * (law.probs[ii] + law.probs[j]);
    law.probs[ii] = law.probs[j] = p;
  }
  law.atoms[static_cast<std::size_t>(k / 2)] = 0.0;
  const double total = std::accumulate(law.probs.begin(), law.probs.end(), 0.0);
  for (double& p : law.probs) p /= total;
  return law;
}

int GridSpec::size() const {
  return static_cast<int>(std::llround((g_max - g_min) / step)) + 1;
}

void GridSpec::validate() const {
  if (!(g_min >= 0.0)) throw ConfigError("dispatch grid must start at g >= 0");
  if (!(step > 0.0)) throw ConfigError("dispatch grid step must be positive");
  if (!(g_max > g_min)) throw ConfigError("dispatch grid is empty");
  if (atoms < 1 || atoms % 2 == 0) throw ConfigError("quantization needs an odd number of atoms");
}

double step_dividing(double r, double max_step) {
  if (!(max_step > 0.0)) throw ConfigError("grid step must be positive");
  if (r <= 0.0) return max_step;
  return r / std::ceil(r / max_step - 1e-12);
}

GridSpec auto_grid(std::span<const double> dhat0, const ErrorModel& model,
                   const DispatchParams& params, double step, int atoms) {
  const int T = params.T;
  if (static_cast<int>(dhat0.size()) < T) throw ModelError("forecast shorter than the horizon");
  const auto head = dhat0.subspan(0, static_cast<std::size_t>(T));
  const double lo = *std::min_element(head.begin(), head.end());
  const double hi = *std::max_element(head.begin(), head.end());
  const double spread = 8.0 * T * model.sigma(std::min(T, model.horizon()));
  const double ramp = std::max(params.r_down, params.r_up);
  GridSpec g;
  g.step = step;
  g.atoms = atoms;
  g.g_min = std::max(0.0, std::floor((lo - spread - 2.0 * ramp) / step) * step);
  const double top = hi + spread + (T + 1) * ramp + 2.0 * step;
  g.g_max = g.g_min + std::ceil((top - g.g_min) / step) * step;
  return g;
}

PenaltyKind PenaltyKind::voll(double q) {
  PenaltyKind k;
  k.kind = Kind::Voll;
  k.q = q;
  return k;
}

PenaltyKind PenaltyKind::lolp(double beta0, const DispatchParams& params, double big_m) {
  PenaltyKind k;
  k.kind = Kind::Lolp;
  k.beta0 = beta0;
  k.big_m = big_m > 0.0 ? big_m : 1e6 * params.c * params.T;
  return k;
}

double DPSolution::q_value(int t, int node, int g) const {
  return stages[static_cast<std::size_t>(t)].Q[cell(*this, node, g)];
}

int DPSolution::window_lo(int g) const {
  return std::max(0, g - index_width(params.r_down, grid.step));
}

int DPSolution::window_hi(int g) const {
  return std::min(grid.size() - 1, g + index_width(params.r_up, grid.step));
}

DPSolution backward_induction(std::span<const double> dhat0, const GridSpec& grid,
                              const ErrorModel& model, const DispatchParams& params,
                              const PenaltyKind& kind, const DPOptions& opts) {
  const int T = params.T;
  if (T < 1 || T > 4) throw ConfigError("dynamic program supports 1 <= T <= 4");
  grid.validate();
  if (static_cast<int>(dhat0.size()) < T) throw ModelError("forecast shorter than the horizon");
  if (T > 1 && model.horizon() < T - 1) throw ModelError("error model horizon shorter than T - 1");
  if (kind.kind == PenaltyKind::Kind::Voll && !(kind.q > 0.0)) {
    throw ConfigError("VOLL penalty needs q > 0");
  }
  if (kind.kind == PenaltyKind::Kind::Lolp &&
      (!(kind.beta0 > 0.0 && kind.beta0 < 1.0) || !(kind.big_m > 0.0))) {
    throw ConfigError("LOLP penalty needs 0 < beta0 < 1 and bigM > 0");
  }

  DPSolution sol;
  sol.T = T;
  sol.grid = grid;
  sol.penalty = kind;
  sol.params = params;
  const int ng = grid.size();

  // Branching law per stage: one quantized law per dispatched future period.
  std::vector<std::vector<QuantizedLaw>> laws(static_cast<std::size_t>(T));
  std::vector<std::int64_t> counts(static_cast<std::size_t>(T), 1);
  for (int t = 0; t + 1 < T; ++t) {
    std::int64_t fan = 1;
    for (int tau = t + 1; tau < T; ++tau) {
      laws[static_cast<std::size_t>(t)].push_back(
          quantize(model.distribution(), marginal_std(model, t, tau), grid.atoms));
      fan *= static_cast<std::int64_t>(laws[static_cast<std::size_t>(t)].back().atoms.size());
    }
    counts[static_cast<std::size_t>(t) + 1] = counts[static_cast<std::size_t>(t)] * fan;
  }
  std::int64_t cells = 0;
  for (std::int64_t n : counts) cells += n * ng;
  if (cells > opts.cell_budget) {
    throw ConfigError("dynamic program needs " + std::to_string(cells) + " table cells, budget is " +
                      std::to_string(opts.cell_budget));
  }

  // Forward pass: build the scenario tree.
  sol.stages.resize(static_cast<std::size_t>(T));
  DPNode root;
  root.dhat.assign(dhat0.begin(), dhat0.begin() + T);
  sol.stages[0].nodes.push_back(std::move(root));
  for (int t = 0; t + 1 < T; ++t) {
    auto& cur = sol.stages[static_cast<std::size_t>(t)].nodes;
    auto& next = sol.stages[static_cast<std::size_t>(t) + 1].nodes;
    next.reserve(static_cast<std::size_t>(counts[static_cast<std::size_t>(t) + 1]));
    const auto& stage_laws = laws[static_cast<std::size_t>(t)];
    for (std::size_t n = 0; n < cur.size(); ++n) {
      cur[n].first_child = static_cast<int>(next.size());
      std::vector<std::size_t> pick(stage_laws.size(), 0);
      while (true) {
        DPNode child;
        child.dhat = cur[n].dhat;
        child.parent = static_cast<int>(n);
        for (std::size_t j = 0; j < stage_laws.size(); ++j) {
          child.dhat[static_cast<std::size_t>(t) + 1 + j] += stage_laws[j].atoms[pick[j]];
          child.prob *= stage_laws[j].probs[pick[j]];
        }
        next.push_back(std::move(child));
        std::size_t j = 0;
        while (j < pick.size() && ++pick[j] == stage_laws[j].atoms.size()) pick[j++] = 0;
        if (j == pick.size()) break;
      }
      cur[n].child_count = static_cast<int>(next.size()) - cur[n].first_child;
    }
  }

  // Backward pass.
  const bool lolp = kind.kind == PenaltyKind::Kind::Lolp;
  const double M = kind.big_m;
  std::vector<double> J_next;
  for (int t = T - 1; t >= 0; --t) {
    DPStage& st = sol.stages[static_cast<std::size_t>(t)];
    const auto nn = st.nodes.size();
    st.Q.assign(nn * static_cast<std::size_t>(ng), 0.0);
    const std::vector<DPNode>* children =
        t + 1 < T ? &sol.stages[static_cast<std::size_t>(t) + 1].nodes : nullptr;
    for (std::size_t n = 0; n < nn; ++n) {
      const DPNode& node = st.nodes[n];
      const double d = node.dhat[static_cast<std::size_t>(t)];
      double* Q = &st.Q[n * static_cast<std::size_t>(ng)];
      for (int i = 0; i < ng; ++i) {
        const double g = grid.value(i);
        double v = params.c * g;
        if (lolp) {
          if (d > g) v += M;
        } else {
          v += kind.q * std::max(0.0, d - g);
        }
        Q[i] = v;
      }
      if (!children) continue;
      if (!lolp) {
        for (int k = 0; k < node.child_count; ++k) {
          const auto ch = static_cast<std::size_t>(node.first_child + k);
          const double p = (*children)[ch].prob;
          const double* J = &J_next[ch * static_cast<std::size_t>(ng)];
          for (int i = 0; i < ng; ++i) Q[i] += p * J[i];
        }
        continue;
      }
      std::vector<double> infeasible_mass(static_cast<std::size_t>(ng), 0.0);
      for (int k = 0; k < node.child_count; ++k) {
        const auto ch = static_cast<std::size_t>(node.first_child + k);
        const double p = (*children)[ch].prob;
        const double* J = &J_next[ch * static_cast<std::size_t>(ng)];
        for (int i = 0; i < ng; ++i) {
          Q[i] += p * std::fmod(J[i], M);
          if (J[i] >= M) infeasible_mass[static_cast<std::size_t>(i)] += p;
        }
      }
      for (int i = 0; i < ng; ++i) {
        if (infeasible_mass[static_cast<std::size_t>(i)] > kind.beta0 + 1e-12) Q[i] += M;
      }
    }

    if (t == 0) break;
    // J_t(node, g_prev): sliding-window minimum of Q_t(node, .).
    J_next.assign(nn * static_cast<std::size_t>(ng), 0.0);
    for (std::size_t n = 0; n < nn; ++n) {
      const double* Q = &st.Q[n * static_cast<std::size_t>(ng)];
      double* J = &J_next[n * static_cast<std::size_t>(ng)];
      std::deque<int> win;
      int pushed = 0;
      for (int i = 0; i < ng; ++i) {
        const int hi = sol.window_hi(i);
        const int lo = sol.window_lo(i);
        for (; pushed <= hi; ++pushed) {
          while (!win.empty() && Q[win.back()] > Q[pushed]) win.pop_back();
          win.push_back(pushed);
        }
        while (win.front() < lo) win.pop_front();
        J[i] = Q[win.front()];
        if (lolp && J[i] >= M) ++sol.penalized_cells;
      }
    }
  }
  const double* Q0 = sol.stages[0].Q.data();
  sol.value = *std::min_element(Q0, Q0 + ng);
  return sol;
}

int extract_target_index(const DPSolution& sol, int t, int node) {
  const int ng = sol.grid.size();
  int best = 0;
  for (int i = 1; i < ng; ++i) {
    if (sol.q_value(t, node, i) < sol.q_value(t, node, best)) best = i;
  }
  return best;
}

double extract_target(const DPSolution& sol, int t, int node) {
  return sol.grid.value(extract_target_index(sol, t, node));
}

int greedy_index(const DPSolution& sol, int t, int node, int g_prev) {
  const int lo = sol.window_lo(g_prev);
  const int hi = sol.window_hi(g_prev);
  int best = lo;
  for (int i = lo + 1; i <= hi; ++i) {
    if (sol.q_value(t, node, i) < sol.q_value(t, node, best)) best = i;
  }
  return best;
}

ThresholdReport verify_threshold_structure(const DPSolution& sol, int slack_steps, double rel_tol) {
  ThresholdReport rep;
  const int ng = sol.grid.size();
  auto record = [&](ThresholdViolation v) {
    if (rep.samples.size() < 100) rep.samples.push_back(std::move(v));
  };
  for (int t = 0; t < sol.T; ++t) {
    const auto& nodes = sol.stages[static_cast<std::size_t>(t)].nodes;
    for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
      ++rep.nodes_checked;
      const int S = extract_target_index(sol, t, n);
      const double units_min = penalty_units(sol, sol.q_value(t, n, S));

      // Penalty units never grow with g; the remaining cost is unimodal on
      // the cells that carry the fewest units.
      bool unimodal = true;
      int where = 0;
      for (int i = 0; i + 1 < ng && unimodal; ++i) {
        const double a = sol.q_value(t, n, i);
        const double b = sol.q_value(t, n, i + 1);
        if (penalty_units(sol, b) > penalty_units(sol, a)) {
          unimodal = false;
          where = i + 1;
          break;
        }
        if (penalty_units(sol, a) > units_min) continue;
        const double tol = rel_tol * (1.0 + std::abs(a));
        if (i < S && a < b - tol) {
          unimodal = false;
          where = i;
        } else if (i >= S && b < a - tol) {
          unimodal = false;
          where = i + 1;
        }
      }
      if (!unimodal) {
        ++rep.unimodal_violations;
        record({ThresholdViolation::Kind::Unimodal, t, n, where, "Q is not unimodal in g"});
      }

      // Threshold rule; windows that only see extra penalty units stand for
      // an infeasible slice and carry no structure.
      for (int i = 0; i < ng; ++i) {
        const int got = greedy_index(sol, t, n, i);
        if (penalty_units(sol, sol.q_value(t, n, got)) > units_min) continue;
        const int expect = std::clamp(S, sol.window_lo(i), sol.window_hi(i));
        if (std::abs(got - expect) > slack_steps) {
          ++rep.clamp_violations;
          record({ThresholdViolation::Kind::Clamp, t, n, i,
                  "greedy index " + std::to_string(got) + " vs clamped target " +
                      std::to_string(expect)});
        }
      }
    }
  }
  return rep;
}

}  // namespace rld
