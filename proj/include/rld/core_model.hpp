#pragma once

// Forecast-update model, ramp geometry and quantile utilities.
//
// Periods are indexed 0..T. At stage t the forecast vector holds realized net
// demand for periods 0..t and forecasts for t+1..T. Between stage t and t+1
// the forecasts of periods t+1..T are revised by the marginal error eps_t.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rld {

using Rng = std::mt19937_64;

// Independent generator stream for (seed, a, b); used for per-day and
// per-scenario streams so parallel runs stay reproducible.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

enum class Distribution { Gaussian, Laplace };

const char* to_string(Distribution d);
Distribution distribution_from_string(const std::string& name);

struct DispatchParams {
  int T = 24;
  double c = 50.0;     // per-unit generation cost
  double q = 2000.0;   // per-unit shortfall penalty (VOLL)
  // Chance budgets: LOLP, nonnegativity, ramp-down, ramp-up.
  std::array<double, 4> beta{0.03, 0.03, 0.03, 0.03};
  double r_down = 0.0;  // ramp magnitudes, both >= 0
  double r_up = 0.0;

  // Throws ConfigError when an invariant fails (q > 3c, 0 < beta < 0.5, ...).
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct ForecastState {
  int t = 0;
  std::vector<double> dhat;  // length T+1

  int horizon() const { return static_cast<int>(dhat.size()) - 1; }
  double current() const { return dhat[static_cast<std::size_t>(t)]; }
};

struct MarginalError {
  int stage = 0;
  std::vector<double> eps;  // eps[j] revises the forecast of period stage+1+j
};

// Horizon-indexed forecast error curve sigma(h), h = 0..T, with sigma(0) = 0.
// Errors are independent across stages and across target periods; the
// per-stage covariance is diagonal with entries sigma(h)^2 - sigma(h-1)^2.
class ErrorModel {
 public:
  explicit ErrorModel(std::vector<double> sigma_curve,
                      Distribution distribution = Distribution::Gaussian);

  // sigma(h) = scale * sqrt(h)
  static ErrorModel sqrt_curve(int T, double scale,
                               Distribution distribution = Distribution::Gaussian);
  static ErrorModel zero(int T);

  int horizon() const { return static_cast<int>(sigma_.size()) - 1; }
  double sigma(int h) const;
  std::span<const double> curve() const { return sigma_; }
  Distribution distribution() const { return distribution_; }
  ErrorModel with_distribution(Distribution d) const;
  bool degenerate() const;

 private:
  std::vector<double> sigma_;
  Distribution distribution_;
};

// Std of the revision to period tau's forecast between stages t and t+1.
double marginal_std(const ErrorModel& model, int t, int tau);

// Std of the total error d_tau - dhat_{t,tau} (sum of independent marginals).
double cumulative_error_std(const ErrorModel& model, int t, int tau);

MarginalError sample_marginal_error(const ErrorModel& model, int t, Rng& rng);

ForecastState update_forecast(const ForecastState& state, const MarginalError& eps);

Interval feasible_interval(double g_prev, const DispatchParams& params);

// Standard normal quantile; throws ModelError for p outside (0, 1).
double normal_quantile(double p);

// alpha = Phi^{-1}(1 - beta), the chance-row multiplier.
double alpha_from_beta(double beta);

// Zero-mean, unit-variance laws.
double standard_quantile(Distribution d, double p);
double standard_cdf(Distribution d, double x);
double standard_pdf(Distribution d, double x);

// Single zero-mean draw with the given std.
double sample_error(Distribution d, double std_dev, Rng& rng);

}  // namespace rld
