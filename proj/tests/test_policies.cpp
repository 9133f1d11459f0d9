#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rld/error.hpp"
#include "rld/policies.hpp"

using namespace rld;

namespace {

DispatchParams two_period(double r) {
  DispatchParams p;
  p.T = 2;
  p.r_down = r;
  p.r_up = r;
  return p;
}

ForecastState at0(std::vector<double> dhat) { return ForecastState{0, std::move(dhat)}; }

const double z_hi = oracle::normal_quantile(1900.0 / 1950.0);  // (q-2c)/(q-c)
const double z_lo = oracle::normal_quantile(1900.0 / 2000.0);  // (q-2c)/q
const double z_beta = oracle::normal_quantile(0.97);

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("clamp picks the violated endpoint") {
  DispatchParams p;
  p.r_down = 4.0;
  p.r_up = 3.0;
  CHECK(clamp_to_threshold(12.0, 10.0, p) == 12.0);
  CHECK(clamp_to_threshold(4.0, 10.0, p) == 6.0);
  CHECK(clamp_to_threshold(20.0, 10.0, p) == 13.0);
  CHECK(clamp_to_threshold(-3.0, std::nullopt, p) == 0.0);
  CHECK(clamp_to_threshold(42.0, std::nullopt, p) == 42.0);
  for (double s = -5.0; s < 25.0; s += 0.7) {
    const double once = clamp_to_threshold(s, 10.0, p);
    CHECK(clamp_to_threshold(once, 10.0, p) == once);
  }
}

TEST_CASE("lolp one-step target") {
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 5.0);
  CHECK(lolp_one_step_target(at0({100.0, 90.0}), p, m) == doctest::Approx(100.0));
  CHECK(lolp_one_step_target(at0({100.0, 120.0}), p, m) == doctest::Approx(112.0 + z_beta * 5.0).epsilon(1e-12));
  CHECK(lolp_one_step_target(at0({100.0, 120.0}), p, m) == doctest::Approx(121.404).epsilon(1e-5));
  const ErrorModel z = ErrorModel::zero(1);
  CHECK(lolp_one_step_target(at0({100.0, 120.0}), p, z) == doctest::Approx(112.0));
  CHECK(lolp_one_step_target(at0({100.0, 105.0}), p, z) == doctest::Approx(100.0));
}

TEST_CASE("printed lolp condition has no sign change on the bracket") {
  // The condition is at least 1 - d1 * max pdf, positive when d1 is small.
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 5.0);
  const auto small = lolp_printed_root(at0({0.1, 0.2}), p, m);
  CHECK_FALSE(small.has_value());
  CHECK_THROWS_AS(lolp_one_step_target(at0({0.1, 0.2}), p, m, LolpMode::PrintedRoot), ModelError);
}

TEST_CASE("voll exact target on the reference instance") {
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 5.0);
  const ForecastState s = at0({100.0, 110.0});
  const double root = voll_root(s, p, m);
  CHECK(root >= 111.4);
  CHECK(root <= 111.6);
  CHECK(voll_one_step_target_exact(s, p, m) == doctest::Approx(root));

  // Fine-grid minimization of the two-period stage value.
  const double grid_min = oracle::argmin_scan(
      [&](double g) { return oracle::two_period_q(g, 100.0, 110.0, 5.0, 50.0, 2000.0, 8.0, 8.0); }, 95.0, 125.0);
  CHECK(std::abs(grid_min - root) < 0.02);

  // Offsets relative to d1 - r_up lie between the two quantile levels.
  const double offset = root - (110.0 - 8.0);
  CHECK(offset >= z_lo * 5.0 - 1e-9);
  CHECK(offset <= z_hi * 5.0 + 1e-9);
}

TEST_CASE("voll exact target with vanishing noise") {
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 1e-7);
  CHECK(voll_one_step_target_exact(at0({100.0, 120.0}), p, m) == doctest::Approx(112.0).epsilon(1e-6));
}

TEST_CASE("voll approximate target and its gap") {
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 5.0);
  const ForecastState s = at0({100.0, 110.0});
  const double approx = voll_one_step_target_approx(s, p, m);
  CHECK(approx == doctest::Approx(102.0 + z_hi * 5.0).epsilon(1e-12));
  CHECK(std::abs(approx - 111.75) < 0.01);
  const double gap = approx - voll_one_step_target_exact(s, p, m);
  CHECK(gap >= 0.0);
  CHECK(gap <= 5.0 * (z_hi - z_lo) + 1e-9);
  CHECK(5.0 * (z_hi - z_lo) == doctest::Approx(1.522).epsilon(1e-3));
  CHECK(voll_approx_gap_bound(p, m, 0) == doctest::Approx(5.0 * (z_hi - z_lo)).epsilon(1e-9));
  CHECK(voll_one_step_target_approx(at0({200.0, 110.0}), p, m) == 200.0);
}

TEST_CASE("approximation gap bound holds on random instances") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(50.0, 150.0), sig(0.5, 20.0), r(0.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    DispatchParams p = two_period(r(rng));
    p.r_down = r(rng);
    const ErrorModel m = ErrorModel::sqrt_curve(1, sig(rng));
    const ForecastState s = at0({d(rng), d(rng)});
    const double gap = voll_one_step_target_approx(s, p, m) - voll_one_step_target_exact(s, p, m);
    CHECK(gap >= -1e-7);
    CHECK(gap <= voll_approx_gap_bound(p, m, 0) + 1e-7);
  }
}

TEST_CASE("matched lolp target is at least the voll target") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(50.0, 150.0), sig(0.5, 20.0), r(0.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    DispatchParams p = two_period(r(rng));
    p.beta[0] = lolp_beta_matching_voll(p);
    const ErrorModel m = ErrorModel::sqrt_curve(1, sig(rng));
    const ForecastState s = at0({d(rng), d(rng)});
    CHECK(lolp_one_step_target(s, p, m) >= voll_one_step_target_exact(s, p, m) - 1e-7);
  }
  DispatchParams p;
  CHECK(1.0 - lolp_beta_matching_voll(p) == doctest::Approx(1900.0 / 1950.0));
}

TEST_CASE("multi-step target") {
  DispatchParams p;
  p.T = 3;
  p.r_down = p.r_up = 8.0;
  const ErrorModel m({0.0, 5.0, 7.0});
  const ForecastState s = at0({100.0, 104.0, 112.0});
  const double expect = std::max({100.0, 104.0 - 8.0 + z_hi * 5.0, 112.0 - 16.0 + z_hi * 7.0});
  CHECK(multi_step_target(s, p, m) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(multi_step_target(s, p, m) - 109.65) < 0.01);

  // One remaining period: same as the one-step approximation.
  const ForecastState one = at0({100.0, 110.0});
  const ErrorModel m1 = ErrorModel::sqrt_curve(1, 5.0);
  CHECK(multi_step_target(one, p, m1) == doctest::Approx(voll_one_step_target_approx(one, p, m1)));

  p.r_up = 1000.0;
  CHECK(multi_step_target(at0({100.0, 100.0, 100.0}), p, m) == 100.0);
}

TEST_CASE("multi-step dominates one-step and targets rise with forecasts") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(50.0, 150.0), r(0.0, 30.0), bump(0.0, 10.0);
  const ErrorModel m = ErrorModel::sqrt_curve(4, 6.0);
  for (int i = 0; i < 100; ++i) {
    DispatchParams p;
    p.T = 4;
    p.r_down = p.r_up = r(rng);
    ForecastState s = at0({d(rng), d(rng), d(rng), d(rng), d(rng)});
    CHECK(multi_step_target(s, p, m) >= voll_one_step_target_approx(s, p, m) - 1e-12);
    const double base_multi = multi_step_target(s, p, m);
    const double base_exact = voll_one_step_target_exact(s, p, m);
    const double base_lolp = lolp_one_step_target(s, p, m);
    s.dhat[1] += bump(rng);
    s.dhat[3] += bump(rng);
    CHECK(multi_step_target(s, p, m) >= base_multi - 1e-12);
    CHECK(voll_one_step_target_exact(s, p, m) >= base_exact - 1e-7);
    CHECK(lolp_one_step_target(s, p, m) >= base_lolp - 1e-12);
  }
}

TEST_CASE("last period stops the lookahead") {
  DispatchParams p;
  p.T = 3;
  p.r_down = p.r_up = 8.0;
  const ErrorModel m = ErrorModel::sqrt_curve(3, 5.0);
  ForecastState s{2, {90.0, 95.0, 100.0, 140.0}};
  CHECK(multi_step_target(s, p, m, 2) == 100.0);
  CHECK(voll_one_step_target_approx(s, p, m, 2) == 100.0);
  CHECK(multi_step_target(s, p, m) > 100.0);
}

TEST_CASE("decide clamps the target") {
  const DispatchParams p = two_period(8.0);
  const ErrorModel m = ErrorModel::sqrt_curve(1, 5.0);
  const LookaheadPolicy pol(LookaheadKind::VollOneStepApprox, p, m);
  const ForecastState s = at0({100.0, 110.0});
  const std::vector<MarginalError> none;
  CHECK(decide(pol, StageInput{s, 100.0, none, 1}) == doctest::Approx(108.0));
  CHECK(decide(pol, StageInput{s, std::nullopt, none, 1}) == doctest::Approx(102.0 + z_hi * 5.0));

  DispatchParams loose = two_period(1e6);
  const LookaheadPolicy flat(LookaheadKind::MultiStep, loose, ErrorModel::zero(1));
  CHECK(decide(flat, StageInput{at0({42.0, 42.0}), 40.0, none, 1}) == 42.0);
}

TEST_CASE("lookahead policy rejects q at most 3c") {
  DispatchParams p = two_period(8.0);
  p.q = 150.0;
  CHECK_THROWS_AS(LookaheadPolicy(LookaheadKind::MultiStep, p, ErrorModel::zero(1)), ConfigError);
}

}  // TEST_SUITE
