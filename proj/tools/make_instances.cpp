// Regenerates the bundled conic instances under data/instances.
//
//   rld_make_instances <dir>
//
// Affine-policy programs come from the default synthetic benchmark; the two
// small programs have optima known in closed form (see the file names).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "rld/config.hpp"
#include "rld/experiments.hpp"
#include "rld/solver.hpp"

namespace {

void dump(const std::filesystem::path& path, const rld::ConicProblem& problem) {
  std::ofstream os(path);
  rld::write_problem(os, problem);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  std::cout << path.string() << ": " << problem.num_vars() << " vars, " << problem.num_rows() << " rows\n";
}

// min x + y over the box [1, 4] x [2, 5] cut by x + y >= 4: optimum 4.
rld::ConicProblem box_lp() {
  Eigen::MatrixXd G(5, 2);
  G << -1, 0, 1, 0, 0, -1, 0, 1, -1, -1;
  rld::ConicProblem p;
  p.c = Eigen::Vector2d(1.0, 1.0);
  p.A = G.sparseView();
  p.b.resize(5);
  p.b << -1, 4, -2, 5, -4;
  p.cones = {{rld::Cone::Kind::NonNeg, 5}};
  return p;
}

// min -x - y over the unit disc: optimum -sqrt(2).
rld::ConicProblem unit_disc() {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 2);
  A(1, 0) = -1.0;
  A(2, 1) = -1.0;
  rld::ConicProblem p;
  p.c = Eigen::Vector2d(-1.0, -1.0);
  p.A = A.sparseView();
  p.b = Eigen::Vector3d(1.0, 0.0, 0.0);
  p.cones = {{rld::Cone::Kind::SecondOrder, 3}};
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: rld_make_instances <dir>\n";
    return 2;
  }
  try {
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);
    rld::RunConfig cfg;
    rld::SynthConfig sc = cfg.synthetic;
    sc.days = 2;
    const auto days = rld::synth_profiles(sc);
    struct Pick {
      int day;
      double p;
      int horizon;
    };
    for (const Pick& k : {Pick{0, 10, 6}, Pick{0, 20, 12}, Pick{0, 30, 24}, Pick{1, 5, 24}}) {
      const std::string name = "affine_day" + std::to_string(k.day) + "_p" + std::to_string(static_cast<int>(k.p)) +
                               "_T" + std::to_string(k.horizon) + ".txt";
      dump(dir / name, rld::day_affine_program(cfg, days[static_cast<std::size_t>(k.day)], k.p, k.horizon).problem);
    }
    dump(dir / "lp_box_opt4.txt", box_lp());
    dump(dir / "socp_disc_opt_minus_sqrt2.txt", unit_disc());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
