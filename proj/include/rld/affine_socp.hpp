#pragma once

// Chance-constrained affine dispatch compiled to a second-order cone program.
//
// Stacking every stage's forecast vector gives dhat = A dhat_0 + C eps, and an
// affine policy g = G eps + a with G strictly block lower triangular. Each
// linear constraint row  (Hd dhat + Hg g - y)_i <= 0  held with probability
// 1 - beta_i becomes the cone constraint  h_i + alpha_i ||Sigma^{1/2} P_i|| <= 0
// with h = Hd A dhat_0 - y + Hg a and P = Hd C + Hg G.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rld/core_model.hpp"
#include "rld/solver.hpp"

namespace rld {

// Layout of the stacked marginal-error vector eps = (eps_0, ..., eps_{T-1}),
// eps_s has n_s = T - s coordinates.
struct ErrorLayout {
  int T = 0;

  int size() const { return T * (T + 1) / 2; }
  int block_size(int s) const { return T - s; }
  int offset(int s) const { return s * T - s * (s - 1) / 2; }
  int index(int s, int j) const { return offset(s) + j; }
};

struct StackedModel {
  int T = 0;
  ErrorLayout layout;
  Eigen::SparseMatrix<double> A;  // (T+1)^2 x (T+1)
  Eigen::SparseMatrix<double> C;  // (T+1)^2 x N
  Eigen::VectorXd sigma_diag;     // diagonal of the block-diagonal covariance
};

StackedModel build_stacked_model(int T, const ErrorModel& model);

// Stacks per-stage marginal errors into one vector.
Eigen::VectorXd stack_errors(const ErrorLayout& layout, std::span<const MarginalError> eps);

struct ChanceRows {
  enum class Block { Lolp = 0, NonNeg = 1, RampDown = 2, RampUp = 3 };

  Eigen::SparseMatrix<double> Hd;  // rows x (T+1)^2
  Eigen::SparseMatrix<double> Hg;  // rows x T
  Eigen::VectorXd y;
  Eigen::VectorXd alpha;
  std::vector<Block> block;        // block of each row

  int rows() const { return static_cast<int>(y.size()); }
};

struct ChanceRowOptions {
  bool lolp = true;
  bool nonneg = true;
  bool ramps = true;
};

ChanceRows build_chance_rows(int T, const DispatchParams& params, ChanceRowOptions opts = {});

class AffinePolicy {
 public:
  AffinePolicy() = default;
  AffinePolicy(int T, Eigen::MatrixXd G, Eigen::VectorXd a);

  int horizon() const { return T_; }
  const ErrorLayout& layout() const { return layout_; }
  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::VectorXd& a() const { return a_; }

  // Strict block lower triangularity of G.
  bool is_causal(double tol = 0.0) const;

 private:
  int T_ = 0;
  ErrorLayout layout_;
  Eigen::MatrixXd G_;  // T x N
  Eigen::VectorXd a_;  // T
};

// Maps between (G, a) and the cone program's variable vector.
// Variables: a_0..a_{T-1}, then the free entries of G row by row.
struct PolicyVariables {
  int T = 0;
  ErrorLayout layout;
  std::vector<int> row_offset;  // first variable of G row t

  explicit PolicyVariables(int T);
  int count() const;
  int a_index(int t) const { return t; }
  // Variable for G(t, k); k must belong to a stage s < t.
  int g_index(int t, int k) const { return row_offset[static_cast<std::size_t>(t)] + k; }
  // Number of eps coordinates visible at stage t.
  int visible(int t) const { return layout.offset(t); }
};

struct AssembleOptions {
  // Hard bound of the first dispatch relative to a previous one (used when
  // re-solving mid-horizon).
  std::optional<double> g_prev;
};

ConicProblem assemble_socp(std::span<const double> dhat0, const StackedModel& stacked,
                           const ChanceRows& rows, const DispatchParams& params,
                           const AssembleOptions& opts = {});

AffinePolicy policy_from_solution(int T, const Eigen::VectorXd& x);

struct AffineSolveResult {
  SolveStatus status = SolveStatus::MaxIter;
  AffinePolicy policy;
  Solution solution;
};

// Solves and unpacks; throws SolverError with the status unless the solver
// reports optimal (infeasible instances are never silently replaced).
AffinePolicy solve_affine_policy(const ConicProblem& problem, int T, const ConicSolver& solver);

// Same as above but returns the status instead of throwing.
AffineSolveResult try_solve_affine_policy(const ConicProblem& problem, int T,
                                          const ConicSolver& solver);

// Convenience: build, assemble and solve for one forecast.
AffinePolicy design_affine_policy(std::span<const double> dhat0, const DispatchParams& params,
                                  const ErrorModel& model, const ConicSolver& solver);

// g_t = a_t + sum_{tau < t} G_{t,tau} eps_tau, unclamped.
double execute_affine(const AffinePolicy& policy, std::span<const MarginalError> history, int t);

// Nearest point of the ramp-feasible interval; positivity only when there is
// no previous dispatch.
double project_feasible(double g_raw, std::optional<double> g_prev, const DispatchParams& params);

}  // namespace rld
