#include "rld/solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "rld/error.hpp"

namespace rld {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Ruiz equilibration. Row factors are kept constant inside each
// second-order cone so that scaled cone points stay in the cone.
struct Scaling {
  Vec D;  // rows
  Vec E;  // columns
};

Scaling ruiz_equilibrate(SpMat& A, const std::vector<Cone>& cones, int passes) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Scaling sc{Vec::Ones(m), Vec::Ones(n)};
  constexpr double kMin = 1e-4;
  constexpr double kMax = 1e4;

  for (int pass = 0; pass < passes; ++pass) {
    Vec row_norm = Vec::Zero(m);
    Vec col_norm = Vec::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        const double a = std::abs(it.value());
        row_norm[it.row()] = std::max(row_norm[it.row()], a);
        col_norm[it.col()] = std::max(col_norm[it.col()], a);
      }
    }
    Eigen::Index offset = 0;
    for (const Cone& cone : cones) {
      if (cone.kind == Cone::Kind::SecondOrder && cone.dim > 0) {
        const double block = row_norm.segment(offset, cone.dim).maxCoeff();
        row_norm.segment(offset, cone.dim).setConstant(block);
      }
      offset += cone.dim;
    }
    Vec d(m), e(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      d[i] = row_norm[i] < 1e-10 ? 1.0 : 1.0 / std::sqrt(row_norm[i]);
      d[i] = std::clamp(sc.D[i] * d[i], kMin, kMax) / sc.D[i];
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      e[j] = col_norm[j] < 1e-10 ? 1.0 : 1.0 / std::sqrt(col_norm[j]);
      e[j] = std::clamp(sc.E[j] * e[j], kMin, kMax) / sc.E[j];
    }
    A = d.asDiagonal() * A * e.asDiagonal();
    sc.D.array() *= d.array();
    sc.E.array() *= e.array();
  }
  return sc;
}

}  // namespace

int ConicProblem::cone_rows() const {
  int total = 0;
  for (const Cone& cone : cones) total += cone.dim;
  return total;
}

void ConicProblem::validate() const {
  if (A.rows() != b.size() || A.cols() != c.size()) {
    throw SolverError("conic problem: matrix is " + std::to_string(A.rows()) + "x" +
                      std::to_string(A.cols()) + " but b has " + std::to_string(b.size()) +
                      " and c has " + std::to_string(c.size()) + " entries");
  }
  if (cone_rows() != num_rows()) {
    throw SolverError("conic problem: cone dimensions sum to " + std::to_string(cone_rows()) +
                      " but there are " + std::to_string(num_rows()) + " rows");
  }
  for (const Cone& cone : cones) {
    if (cone.dim < 1) throw SolverError("conic problem: empty cone block");
  }
  if (!c.allFinite() || !b.allFinite()) throw SolverError("conic problem: non-finite data");
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      if (!std::isfinite(it.value())) throw SolverError("conic problem: non-finite matrix entry");
    }
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

double Residuals::max() const { return std::max({primal, dual, gap}); }

Vec soc_project(const Eigen::Ref<const Vec>& v) {
  const Eigen::Index n = v.size();
  if (n == 0) return Vec();
  const double t = v[0];
  const double nz = n > 1 ? v.tail(n - 1).norm() : 0.0;
  if (nz <= t) return v;
  if (nz <= -t) return Vec::Zero(n);
  Vec out(n);
  const double a = 0.5 * (t + nz);
  out[0] = a;
  out.tail(n - 1) = (a / nz) * v.tail(n - 1);
  return out;
}

void project_onto_cones(const std::vector<Cone>& cones, Eigen::Ref<Vec> v) {
  Eigen::Index offset = 0;
  for (const Cone& cone : cones) {
    auto block = v.segment(offset, cone.dim);
    if (cone.kind == Cone::Kind::NonNeg) {
      block = block.cwiseMax(0.0);
    } else {
      block = soc_project(block);
    }
    offset += cone.dim;
  }
}

Residuals kkt_residuals(const ConicProblem& problem, const Vec& x, const Vec& y, const Vec& s) {
  Residuals r;
  const Vec Ax = problem.A * x;
  const Vec Aty = problem.A.transpose() * y;
  const Vec pr = Ax + s - problem.b;
  const Vec du = Aty + problem.c;
  const double cx = problem.c.dot(x);
  const double by = problem.b.dot(y);
  r.primal_abs = inf_norm(pr);
  r.dual_abs = inf_norm(du);
  r.gap_abs = std::abs(cx + by);
  r.primal = r.primal_abs / (1.0 + std::max({inf_norm(problem.b), inf_norm(Ax), inf_norm(s)}));
  r.dual = r.dual_abs / (1.0 + std::max(inf_norm(problem.c), inf_norm(Aty)));
  r.gap = r.gap_abs / (1.0 + std::abs(cx) + std::abs(by));
  return r;
}

Solution solve(const ConicProblem& problem, const SolverSettings& settings) {
  problem.validate();
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m = problem.num_rows();

  Solution sol;
  if (n == 0 && m == 0) {
    sol.status = SolveStatus::Optimal;
    return sol;
  }

  SpMat A = problem.A;
  A.makeCompressed();
  Scaling sc{Vec::Ones(m), Vec::Ones(n)};
  if (settings.equilibrate && A.nonZeros() > 0) {
    sc = ruiz_equilibrate(A, problem.cones, settings.ruiz_passes);
  }
  Vec b = sc.D.cwiseProduct(problem.b);
  Vec c = sc.E.cwiseProduct(problem.c);
  double sigma_b = settings.scale / std::max(inf_norm(b), 1e-6);
  const double sigma_c = 1.0 / std::max(inf_norm(c), 1e-6);
  b *= sigma_b;
  c *= sigma_c;

  const double rho = settings.rho_x;
  const SpMat At = A.transpose();
  SpMat K = At * A;
  for (Eigen::Index j = 0; j < n; ++j) K.coeffRef(j, j) += rho;
  K.makeCompressed();
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw SolverError("factorization of the splitting system failed");

  Vec nbuf(n);
  // Solves [rho I, A'; -A, I] (x, y) = (rx, ry).
  auto solve_m = [&](const Vec& rx, const Vec& ry, Vec& x, Vec& y) {
    nbuf.noalias() = At * ry;
    nbuf = rx - nbuf;
    x = ldlt.solve(nbuf);
    y = ry;
    y.noalias() += A * x;
  };

  Vec px, py;
  solve_m(c, b, px, py);
  double hp = c.dot(px) + b.dot(py);

  // Douglas-Rachford state w = (wx, wy, wt), stacked.
  const Eigen::Index dim = n + m + 1;
  Vec w = Vec::Zero(dim);
  w[dim - 1] = 1.0;
  Vec fw(dim), r(dim);
  Vec ux = Vec::Zero(n), uy = Vec::Zero(m), sy = Vec::Zero(m);
  double ut = 1.0, kap = 0.0;
  Vec tx(n), ty(m), qx(n), qy(m), ry(m), rxw(n);
  const double lambda = settings.relaxation;

  // fw = F(w) = w + lambda (u - u~) with u~ = (R + Q)^{-1} R w, u = Pi_C(2u~ - w).
  auto apply = [&](const Vec& win) {
    const auto wx = win.head(n);
    const auto wy = win.segment(n, m);
    const double wt = win[dim - 1];
    rxw = rho * wx;
    ry = wy;
    solve_m(rxw, ry, qx, qy);
    const double tt = (wt + c.dot(qx) + b.dot(qy)) / (1.0 + hp);
    tx = qx - tt * px;
    ty = qy - tt * py;
    ux = 2.0 * tx - wx;
    ry = 2.0 * ty - wy;
    uy = ry;
    project_onto_cones(problem.cones, uy);
    sy = uy - ry;  // slack estimate, in K
    const double rt = 2.0 * tt - wt;
    ut = std::max(rt, 0.0);
    kap = ut - rt;
    fw.head(n) = wx + lambda * (ux - tx);
    fw.segment(n, m) = wy + lambda * (uy - ty);
    fw[dim - 1] = wt + lambda * (ut - tt);
  };

  auto unscale_and_check = [&](int iter) -> bool {
    if (ut > 1e-12) {
      Vec x = sc.E.cwiseProduct(ux) / (ut * sigma_b);
      Vec y = sc.D.cwiseProduct(uy) / (ut * sigma_c);
      Vec s = sy.cwiseQuotient(sc.D) / (ut * sigma_b);
      sol.residuals = kkt_residuals(problem, x, y, s);
      sol.residual_history.push_back(sol.residuals.max());
      sol.x = std::move(x);
      sol.y = std::move(y);
      sol.s = std::move(s);
      sol.iterations = iter;
      if (sol.residuals.max() <= settings.tol) {
        sol.status = SolveStatus::Optimal;
        return true;
      }
    }
    if (ut < kap) {
      const double by = b.dot(uy);
      if (by < 0.0) {
        const double ratio = inf_norm(At * uy) / -by;
        if (ratio <= settings.infeasibility_tol) {
          sol.status = SolveStatus::Infeasible;
          sol.certificate_norm = ratio;
          sol.y = sc.D.cwiseProduct(uy) / -by;
          sol.iterations = iter;
          return true;
        }
      }
      const double cx = c.dot(ux);
      if (cx < 0.0) {
        const double ratio = inf_norm(A * ux + sy) / -cx;
        if (ratio <= settings.infeasibility_tol) {
          sol.status = SolveStatus::Unbounded;
          sol.certificate_norm = ratio;
          sol.x = sc.E.cwiseProduct(ux) / -cx;
          sol.iterations = iter;
          return true;
        }
      }
    }
    return false;
  };

  // Type-II Anderson acceleration of the fixed-point map, safeguarded: an
  // extrapolated point whose residual grows is replaced by the plain step.
  // Columns of Y hold residual differences, columns of F differences of F(w)
  // (= step difference + residual difference).
  const int mem = std::max(settings.anderson_memory, 0);
  Eigen::MatrixXd Y(dim, mem), F(dim, mem), gram(mem, mem);
  int cols = 0, head = 0;
  Vec fw_prev(dim), r_prev(dim), fw_plain(dim), rhs(mem), gy(mem);
  bool have_prev = false, extrapolated = false;
  double r_plain = 0.0;
  auto reset_memory = [&] {
    cols = 0;
    head = 0;
    have_prev = false;
  };

  // Rebalances b against c. Only b moves, so the factorization is kept; the
  // primal block of w is carried over scaled and the memory is dropped.
  constexpr int kMaxAdaptations = 25;
  int adaptations = 0;
  int next_adapt = settings.adapt_interval;
  auto rescale_b = [&](double k) {
    sigma_b *= k;
    b *= k;
    solve_m(c, b, px, py);
    hp = c.dot(px) + b.dot(py);
    w.head(n) *= k;
    reset_memory();
    extrapolated = false;
  };

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    apply(w);
    r = fw - w;
    if (extrapolated && r.norm() > settings.anderson_safeguard * r_plain) {
      w = fw_plain;
      reset_memory();
      apply(w);
      r = fw - w;
    }
    extrapolated = false;

    if (iter % settings.check_interval == 0 || iter == settings.max_iter) {
      if (unscale_and_check(iter)) break;
      if (settings.adaptive_scale && ut > 1e-12 && iter >= next_adapt && adaptations < kMaxAdaptations) {
        const double ratio = std::sqrt(std::max(sol.residuals.primal, 1e-300) /
                                       std::max(sol.residuals.dual, 1e-300));
        if (ratio > 3.0 || ratio < 1.0 / 3.0) {
          rescale_b(std::clamp(ratio, 0.1, 10.0));
          ++adaptations;
        }
        next_adapt = iter + settings.adapt_interval * (1 << std::min(adaptations, 10));
      }
    }

    // Plain steps while the embedding has tau = 0: extrapolating there can
    // run along the cone of homogeneous fixed points.
    if (mem == 0 || ut <= 0.0) {
      if (have_prev) reset_memory();
      w.swap(fw);
      continue;
    }
    if (have_prev) {
      Y.col(head) = r - r_prev;
      F.col(head) = fw - fw_prev;
      cols = std::min(cols + 1, mem);
      gy.head(cols).noalias() = Y.leftCols(cols).transpose() * Y.col(head);
      gram.row(head).head(cols) = gy.head(cols).transpose();
      gram.col(head).head(cols) = gy.head(cols);
      head = (head + 1) % mem;
    }
    fw_prev = fw;
    r_prev = r;
    have_prev = true;
    if (cols == 0) {
      w = fw;
      continue;
    }
    rhs.head(cols).noalias() = Y.leftCols(cols).transpose() * r;
    Eigen::MatrixXd g = gram.topLeftCorner(cols, cols);
    g.diagonal().array() += 1e-10 * g.trace() + 1e-300;
    const Vec gamma = g.ldlt().solve(rhs.head(cols));
    if (!gamma.allFinite()) {
      w = fw;
      reset_memory();
      continue;
    }
    fw_plain = fw;
    r_plain = r.norm();
    w = fw;
    w.noalias() -= F.leftCols(cols) * gamma;
    // w = 0 is a fixed point of the embedding; never extrapolate towards it.
    if (w.norm() < 0.5 * fw.norm()) {
      w = fw;
      reset_memory();
      continue;
    }
    extrapolated = true;
  }
  if (sol.status == SolveStatus::MaxIter) sol.iterations = settings.max_iter;
  if (sol.x.size() == n) sol.objective = problem.c.dot(sol.x);
  return sol;
}

Solution AdmmConicSolver::solve(const ConicProblem& problem) const {
  return rld::solve(problem, settings_);
}

void write_problem(std::ostream& os, const ConicProblem& problem) {
  os.precision(17);
  os << "conic-problem v1\n";
  os << "vars " << problem.num_vars() << " rows " << problem.num_rows() << " nnz "
     << problem.A.nonZeros() << "\n";
  os << "cones " << problem.cones.size() << "\n";
  for (const Cone& cone : problem.cones) {
    os << (cone.kind == Cone::Kind::NonNeg ? "l " : "q ") << cone.dim << "\n";
  }
  os << "c\n";
  for (Eigen::Index j = 0; j < problem.c.size(); ++j) os << problem.c[j] << "\n";
  os << "b\n";
  for (Eigen::Index i = 0; i < problem.b.size(); ++i) os << problem.b[i] << "\n";
  os << "A\n";
  for (int k = 0; k < problem.A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(problem.A, k); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
}

ConicProblem read_problem(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string tok;
    if (!(is >> tok) || tok != word) throw SolverError("problem file: expected '" + word + "'");
  };
  expect("conic-problem");
  expect("v1");
  long n = 0, m = 0, nnz = 0;
  std::size_t ncones = 0;
  expect("vars");
  is >> n;
  expect("rows");
  is >> m;
  expect("nnz");
  is >> nnz;
  expect("cones");
  is >> ncones;
  if (!is || n < 0 || m < 0 || nnz < 0) throw SolverError("problem file: bad header");
  ConicProblem p;
  for (std::size_t k = 0; k < ncones; ++k) {
    std::string kind;
    int dim = 0;
    is >> kind >> dim;
    if (kind != "l" && kind != "q") throw SolverError("problem file: unknown cone '" + kind + "'");
    p.cones.push_back({kind == "l" ? Cone::Kind::NonNeg : Cone::Kind::SecondOrder, dim});
  }
  expect("c");
  p.c.resize(n);
  for (long j = 0; j < n; ++j) is >> p.c[j];
  expect("b");
  p.b.resize(m);
  for (long i = 0; i < m; ++i) is >> p.b[i];
  expect("A");
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (long k = 0; k < nnz; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    is >> i >> j >> v;
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  if (!is) throw SolverError("problem file: truncated");
  p.A.resize(m, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.validate();
  return p;
}

}  // namespace rld
