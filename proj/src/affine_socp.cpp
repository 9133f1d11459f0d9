#include "rld/affine_socp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rld/error.hpp"

namespace rld {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

}  // namespace

StackedModel build_stacked_model(int T, const ErrorModel& model) {
  if (T < 1) throw ModelError("stacked model needs T >= 1");
  if (model.horizon() < T) throw ModelError("error model horizon shorter than T");
  StackedModel st;
  st.T = T;
  st.layout = ErrorLayout{T};
  const int dim = T + 1;
  const int N = st.layout.size();

  std::vector<Triplet> a_trips;
  std::vector<Triplet> c_trips;
  for (int s = 0; s <= T; ++s) {
    for (int k = 0; k < dim; ++k) a_trips.emplace_back(s * dim + k, k, 1.0);
    // Block row s accumulates the updates C_0 .. C_{s-1}.
    for (int tau = 0; tau < s; ++tau) {
      for (int j = 0; j < st.layout.block_size(tau); ++j) {
        c_trips.emplace_back(s * dim + tau + 1 + j, st.layout.index(tau, j), 1.0);
      }
    }
  }
  st.A.resize(dim * dim, dim);
  st.A.setFromTriplets(a_trips.begin(), a_trips.end());
  st.C.resize(dim * dim, N);
  st.C.setFromTriplets(c_trips.begin(), c_trips.end());

  st.sigma_diag.resize(N);
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < st.layout.block_size(s); ++j) {
      const double v = marginal_std(model, s, s + 1 + j);
      st.sigma_diag[st.layout.index(s, j)] = v * v;
    }
  }
  return st;
}

Eigen::VectorXd stack_errors(const ErrorLayout& layout, std::span<const MarginalError> eps) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  for (const MarginalError& e : eps) {
    if (e.stage < 0 || e.stage >= layout.T ||
        static_cast<int>(e.eps.size()) != layout.block_size(e.stage)) {
      throw ModelError("marginal error does not fit the stacked layout");
    }
    for (std::size_t j = 0; j < e.eps.size(); ++j) {
      out[layout.index(e.stage, static_cast<int>(j))] = e.eps[j];
    }
  }
  return out;
}

ChanceRows build_chance_rows(int T, const DispatchParams& params, ChanceRowOptions opts) {
  if (T < 2) throw ModelError("chance rows need T >= 2");
  const int dim = T + 1;
  ChanceRows rows;
  std::vector<Triplet> hd, hg;
  std::vector<double> y, alpha;
  int r = 0;
  auto push = [&](ChanceRows::Block block, double rhs) {
    rows.block.push_back(block);
    y.push_back(rhs);
    alpha.push_back(alpha_from_beta(params.beta[static_cast<std::size_t>(block)]));
    return r++;
  };

  if (opts.lolp) {
    // dhat_{t,t} - g_t <= 0, reading coordinate t of stacked block t.
    for (int t = 0; t < T; ++t) {
      const int i = push(ChanceRows::Block::Lolp, 0.0);
      hd.emplace_back(i, t * dim + t, 1.0);
      hg.emplace_back(i, t, -1.0);
    }
  }
  if (opts.nonneg) {
    for (int t = 0; t < T; ++t) {
      const int i = push(ChanceRows::Block::NonNeg, 0.0);
      hg.emplace_back(i, t, -1.0);
    }
  }
  if (opts.ramps) {
    // g_t - g_{t+1} <= r_down
    for (int t = 0; t + 1 < T; ++t) {
      const int i = push(ChanceRows::Block::RampDown, params.r_down);
      hg.emplace_back(i, t, 1.0);
      hg.emplace_back(i, t + 1, -1.0);
    }
    // g_{t+1} - g_t <= r_up
    for (int t = 0; t + 1 < T; ++t) {
      const int i = push(ChanceRows::Block::RampUp, params.r_up);
      hg.emplace_back(i, t, -1.0);
      hg.emplace_back(i, t + 1, 1.0);
    }
  }
  rows.Hd.resize(r, dim * dim);
  rows.Hd.setFromTriplets(hd.begin(), hd.end());
  rows.Hg.resize(r, T);
  rows.Hg.setFromTriplets(hg.begin(), hg.end());
  rows.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  rows.alpha = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  return rows;
}

AffinePolicy::AffinePolicy(int T, Eigen::MatrixXd G, Eigen::VectorXd a)
    : T_(T), layout_{T}, G_(std::move(G)), a_(std::move(a)) {
  if (G_.rows() != T || G_.cols() != layout_.size() || a_.size() != T) {
    throw ModelError("affine policy dimensions do not match T");
  }
}

bool AffinePolicy::is_causal(double tol) const {
  for (int t = 0; t < T_; ++t) {
    for (int k = layout_.offset(t); k < layout_.size(); ++k) {
      if (std::abs(G_(t, k)) > tol) return false;
    }
  }
  return true;
}

PolicyVariables::PolicyVariables(int T_) : T(T_), layout{T_} {
  row_offset.resize(static_cast<std::size_t>(T) + 1);
  int next = T;
  for (int t = 0; t <= T; ++t) {
    row_offset[static_cast<std::size_t>(t)] = next;
    if (t < T) next += layout.offset(t);
  }
}

int PolicyVariables::count() const { return row_offset.back(); }

ConicProblem assemble_socp(std::span<const double> dhat0, const StackedModel& stacked,
                           const ChanceRows& rows, const DispatchParams& params,
                           const AssembleOptions& opts) {
  const int T = stacked.T;
  const int dim = T + 1;
  if (static_cast<int>(dhat0.size()) != dim) {
    throw ModelError("forecast has " + std::to_string(dhat0.size()) + " entries, expected " +
                     std::to_string(dim));
  }
  if (rows.Hd.cols() != dim * dim || rows.Hg.cols() != T ||
      stacked.C.rows() != dim * dim || stacked.sigma_diag.size() != stacked.layout.size()) {
    throw ModelError("chance rows and stacked model dimensions disagree");
  }

  const PolicyVariables vars(T);
  const Eigen::Map<const Eigen::VectorXd> d0(dhat0.data(), dim);
  const Eigen::VectorXd constant = rows.Hd * (stacked.A * d0) - rows.y;
  // Row-major copies so each chance row is walked once.
  const Eigen::SparseMatrix<double, Eigen::RowMajor> HdC = rows.Hd * stacked.C;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> Hg = rows.Hg;
  const Eigen::VectorXd sd = stacked.sigma_diag.cwiseSqrt();

  ConicProblem p;
  p.c = Eigen::VectorXd::Zero(vars.count());
  for (int t = 0; t < T; ++t) p.c[vars.a_index(t)] = params.c;

  std::vector<Triplet> trips;
  std::vector<double> b;
  Eigen::VectorXd hdc_row = Eigen::VectorXd::Zero(stacked.layout.size());

  for (int i = 0; i < rows.rows(); ++i) {
    const int top = static_cast<int>(b.size());
    // Cone head: -h_i = -constant_i - (Hg a)_i
    b.push_back(-constant[i]);
    int reach = 0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Hg, i); it; ++it) {
      trips.emplace_back(top, vars.a_index(static_cast<int>(it.col())), it.value());
      reach = std::max(reach, vars.visible(static_cast<int>(it.col())));
    }
    hdc_row.setZero();
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(HdC, i); it; ++it) {
      hdc_row[it.col()] = it.value();
      reach = std::max(reach, static_cast<int>(it.col()) + 1);
    }
    const double alpha = rows.alpha[i];
    if (alpha > 0.0) {
      // Tail: alpha * sigma_k * (HdC_{ik} + sum_t Hg_{it} G_{t,k})
      for (int k = 0; k < reach; ++k) {
        if (sd[k] == 0.0) continue;
        const int row = static_cast<int>(b.size());
        const double w = alpha * sd[k];
        b.push_back(w * hdc_row[k]);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Hg, i); it; ++it) {
          const int t = static_cast<int>(it.col());
          if (k < vars.visible(t)) trips.emplace_back(row, vars.g_index(t, k), -w * it.value());
        }
      }
    }
    const int size = static_cast<int>(b.size()) - top;
    p.cones.push_back({size == 1 ? Cone::Kind::NonNeg : Cone::Kind::SecondOrder, size});
  }

  if (opts.g_prev) {
    const int up = static_cast<int>(b.size());
    b.push_back(params.r_up + *opts.g_prev);
    trips.emplace_back(up, vars.a_index(0), 1.0);
    b.push_back(params.r_down - *opts.g_prev);
    trips.emplace_back(up + 1, vars.a_index(0), -1.0);
    p.cones.push_back({Cone::Kind::NonNeg, 2});
  }

  p.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  p.A.resize(static_cast<Eigen::Index>(b.size()), vars.count());
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.makeCompressed();
  return p;
}

AffinePolicy policy_from_solution(int T, const Eigen::VectorXd& x) {
  const PolicyVariables vars(T);
  if (x.size() != vars.count()) throw ModelError("solution vector does not match policy layout");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(T, vars.layout.size());
  Eigen::VectorXd a(T);
  for (int t = 0; t < T; ++t) {
    a[t] = x[vars.a_index(t)];
    for (int k = 0; k < vars.visible(t); ++k) G(t, k) = x[vars.g_index(t, k)];
  }
  return AffinePolicy(T, std::move(G), std::move(a));
}

AffineSolveResult try_solve_affine_policy(const ConicProblem& problem, int T,
                                          const ConicSolver& solver) {
  AffineSolveResult out;
  out.solution = solver.solve(problem);
  out.status = out.solution.status;
  if (out.status == SolveStatus::Optimal) out.policy = policy_from_solution(T, out.solution.x);
  return out;
}

AffinePolicy solve_affine_policy(const ConicProblem& problem, int T, const ConicSolver& solver) {
  AffineSolveResult r = try_solve_affine_policy(problem, T, solver);
  if (r.status != SolveStatus::Optimal) {
    throw SolverError(std::string("affine policy program: ") + to_string(r.status) +
                      " after " + std::to_string(r.solution.iterations) + " iterations (residual " +
                      std::to_string(r.solution.residuals.max()) + ")");
  }
  return std::move(r.policy);
}

AffinePolicy design_affine_policy(std::span<const double> dhat0, const DispatchParams& params,
                                  const ErrorModel& model, const ConicSolver& solver) {
  const StackedModel st = build_stacked_model(params.T, model);
  const ChanceRows rows = build_chance_rows(params.T, params);
  return solve_affine_policy(assemble_socp(dhat0, st, rows, params), params.T, solver);
}

double execute_affine(const AffinePolicy& policy, std::span<const MarginalError> history, int t) {
  if (t < 0 || t >= policy.horizon()) throw ModelError("affine policy stage out of range");
  if (static_cast<int>(history.size()) < t) {
    throw ModelError("affine policy at stage " + std::to_string(t) + " needs " +
                     std::to_string(t) + " past marginal errors, got " +
                     std::to_string(history.size()));
  }
  const ErrorLayout& layout = policy.layout();
  double g = policy.a()[t];
  for (int s = 0; s < t; ++s) {
    const MarginalError& e = history[static_cast<std::size_t>(s)];
    if (e.stage != s || static_cast<int>(e.eps.size()) != layout.block_size(s)) {
      throw ModelError("marginal error history is out of order");
    }
    for (int j = 0; j < layout.block_size(s); ++j) {
      g += policy.G()(t, layout.index(s, j)) * e.eps[static_cast<std::size_t>(j)];
    }
  }
  return g;
}

double project_feasible(double g_raw, std::optional<double> g_prev, const DispatchParams& params) {
  if (!g_prev) return std::max(0.0, g_raw);
  const Interval iv = feasible_interval(*g_prev, params);
  return std::clamp(g_raw, iv.lo, iv.hi);
}

}  // namespace rld
