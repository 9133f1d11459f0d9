#pragma once

// First-order conic solver for
//
//   minimize    c'x
//   subject to  b - A x = s,  s in K
//
// where K is a product of nonnegative orthants and second-order cones
// {(t, z) : ||z||_2 <= t}. The iteration is Douglas-Rachford splitting on the
// homogeneous self-dual embedding: one sparse quasi-definite solve (factored
// once) and one cone projection per iteration. Infeasibility and
// unboundedness are reported through certificates of the embedding.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace rld {

struct Cone {
  enum class Kind { NonNeg, SecondOrder };
  Kind kind = Kind::NonNeg;
  int dim = 0;
};

struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;  // rows = total cone dimension
  Eigen::VectorXd b;
  std::vector<Cone> cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  int cone_rows() const;
  // Throws SolverError on inconsistent dimensions or non-finite data.
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(SolveStatus s);

// Scale-normalized conic KKT residuals (infinity norms):
//   primal = ||Ax + s - b|| / (1 + max(||b||, ||Ax||, ||s||))
//   dual   = ||A'y + c||    / (1 + max(||c||, ||A'y||))
//   gap    = |c'x + b'y|    / (1 + |c'x| + |b'y|)
// The *_abs fields hold the unnormalized numerators.
struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double primal_abs = 0.0;
  double dual_abs = 0.0;
  double gap_abs = 0.0;

  double max() const;
};

struct Solution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  SolveStatus status = SolveStatus::MaxIter;
  Residuals residuals;
  double objective = 0.0;
  int iterations = 0;
  // Normalized certificate residual when status is Infeasible / Unbounded.
  double certificate_norm = 0.0;
  // Max residual at every convergence check, in iteration order.
  std::vector<double> residual_history;
};

struct SolverSettings {
  double tol = 1e-8;
  int max_iter = 200000;
  bool equilibrate = true;
  int ruiz_passes = 25;
  double relaxation = 1.5;
  double infeasibility_tol = 1e-7;
  int check_interval = 10;
  // Weight of the primal variables in the splitting metric.
  double rho_x = 1e-3;
  // Relative weight of b against c after normalization.
  double scale = 400.0;
  // Slow solves re-balance that weight from the primal/dual residual ratio,
  // first after adapt_interval iterations, then at doubling intervals.
  bool adaptive_scale = true;
  int adapt_interval = 3000;
  // Anderson acceleration memory; 0 runs the plain iteration.
  int anderson_memory = 10;
  double anderson_safeguard = 1.0;
};

// Euclidean projection onto {(t, z) : ||z|| <= t}; v = (t, z).
Eigen::VectorXd soc_project(const Eigen::Ref<const Eigen::VectorXd>& v);

// Projects every block of v onto its cone, in place.
void project_onto_cones(const std::vector<Cone>& cones, Eigen::Ref<Eigen::VectorXd> v);

Residuals kkt_residuals(const ConicProblem& problem, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& s);

Solution solve(const ConicProblem& problem, const SolverSettings& settings = {});

// Seam for plugging in another conic backend; the default wraps solve().
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual Solution solve(const ConicProblem& problem) const = 0;
};

class AdmmConicSolver final : public ConicSolver {
 public:
  explicit AdmmConicSolver(SolverSettings settings = {}) : settings_(settings) {}
  Solution solve(const ConicProblem& problem) const override;
  const SolverSettings& settings() const { return settings_; }

 private:
  SolverSettings settings_;
};

// Plain-text problem dump (format in docs/problem_format.md).
void write_problem(std::ostream& os, const ConicProblem& problem);
ConicProblem read_problem(std::istream& is);

}  // namespace rld
