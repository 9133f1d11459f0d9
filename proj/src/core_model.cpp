#include "rld/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "rld/error.hpp"

namespace rld {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kLaplaceScale = std::numbers::sqrt2 / 2.0;  // b for unit variance

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(b + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

const char* to_string(Distribution d) {
  return d == Distribution::Gaussian ? "gaussian" : "laplace";
}

Distribution distribution_from_string(const std::string& name) {
  if (name == "gaussian" || name == "normal") return Distribution::Gaussian;
  if (name == "laplace") return Distribution::Laplace;
  throw ConfigError("unknown distribution '" + name + "'");
}

void DispatchParams::validate() const {
  if (T < 1) throw ConfigError("horizon T must be >= 1");
  if (!(c > 0.0)) throw ConfigError("unit cost c must be positive");
  if (!(q > 3.0 * c)) throw ConfigError("shortfall penalty q must exceed 3c");
  for (double b : beta) {
    if (!(b > 0.0 && b < 0.5)) throw ConfigError("chance budgets must lie in (0, 0.5)");
  }
  if (!(r_down >= 0.0) || !(r_up >= 0.0)) throw ConfigError("ramp magnitudes must be >= 0");
}

ErrorModel::ErrorModel(std::vector<double> sigma_curve, Distribution distribution)
    : sigma_(std::move(sigma_curve)), distribution_(distribution) {
  if (sigma_.empty()) throw ModelError("sigma curve must cover h = 0");
  if (sigma_[0] != 0.0) throw ModelError("sigma(0) must be 0: current demand is observed");
  for (std::size_t h = 1; h < sigma_.size(); ++h) {
    if (!std::isfinite(sigma_[h]) || sigma_[h] < sigma_[h - 1]) {
      throw ModelError("sigma curve must be finite and nondecreasing (h = " +
                       std::to_string(h) + ")");
    }
  }
}

ErrorModel ErrorModel::sqrt_curve(int T, double scale, Distribution distribution) {
  if (T < 0 || !(scale >= 0.0)) throw ModelError("invalid sqrt curve");
  std::vector<double> s(static_cast<std::size_t>(T) + 1);
  for (int h = 0; h <= T; ++h) s[static_cast<std::size_t>(h)] = scale * std::sqrt(double(h));
  return ErrorModel(std::move(s), distribution);
}

ErrorModel ErrorModel::zero(int T) {
  return ErrorModel(std::vector<double>(static_cast<std::size_t>(T) + 1, 0.0));
}

double ErrorModel::sigma(int h) const {
  if (h < 0 || h > horizon()) throw ModelError("forecast horizon out of range");
  return sigma_[static_cast<std::size_t>(h)];
}

ErrorModel ErrorModel::with_distribution(Distribution d) const {
  ErrorModel m = *this;
  m.distribution_ = d;
  return m;
}

bool ErrorModel::degenerate() const {
  return std::all_of(sigma_.begin(), sigma_.end(), [](double s) { return s == 0.0; });
}

double marginal_std(const ErrorModel& model, int t, int tau) {
  if (!(t < tau) || tau > model.horizon() || t < 0) {
    throw ModelError("marginal_std requires 0 <= t < tau <= T");
  }
  const int h = tau - t;
  const double v = model.sigma(h) * model.sigma(h) - model.sigma(h - 1) * model.sigma(h - 1);
  if (v < 0.0) throw ModelError("negative marginal variance");
  return std::sqrt(v);
}

double cumulative_error_std(const ErrorModel& model, int t, int tau) {
  if (!(t < tau) || tau > model.horizon() || t < 0) {
    throw ModelError("cumulative_error_std requires 0 <= t < tau <= T");
  }
  double var = 0.0;
  for (int s = t; s < tau; ++s) {
    const double v = marginal_std(model, s, tau);
    var += v * v;
  }
  return std::sqrt(var);
}

double sample_error(Distribution d, double std_dev, Rng& rng) {
  if (std_dev == 0.0) return 0.0;
  if (d == Distribution::Gaussian) {
    std::normal_distribution<double> n(0.0, std_dev);
    return n(rng);
  }
  // Inverse cdf on u in (-1/2, 1/2).
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng) - 0.5;
  while (std::abs(u) >= 0.5) u = u01(rng) - 0.5;
  const double b = std_dev * kLaplaceScale;
  return -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

MarginalError sample_marginal_error(const ErrorModel& model, int t, Rng& rng) {
  const int T = model.horizon();
  if (t < 0 || t >= T) throw ModelError("sample_marginal_error requires 0 <= t < T");
  MarginalError out{t, std::vector<double>(static_cast<std::size_t>(T - t))};
  for (int j = 0; j < T - t; ++j) {
    out.eps[static_cast<std::size_t>(j)] =
        sample_error(model.distribution(), marginal_std(model, t, t + 1 + j), rng);
  }
  return out;
}

ForecastState update_forecast(const ForecastState& state, const MarginalError& eps) {
  const int T = state.horizon();
  if (eps.stage != state.t) throw ModelError("marginal error stage does not match forecast stage");
  if (state.t >= T) throw ModelError("forecast already at terminal stage");
  if (static_cast<int>(eps.eps.size()) != T - state.t) {
    throw ModelError("marginal error has wrong length");
  }
  ForecastState next = state;
  next.t = state.t + 1;
  for (std::size_t j = 0; j < eps.eps.size(); ++j) {
    next.dhat[static_cast<std::size_t>(state.t) + 1 + j] += eps.eps[j];
  }
  return next;
}

Interval feasible_interval(double g_prev, const DispatchParams& params) {
  return {std::max(0.0, g_prev - params.r_down), g_prev + params.r_up};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ModelError("quantile level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double alpha_from_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ModelError("chance budget must lie in (0, 1)");
  return normal_quantile(1.0 - beta);
}

double standard_quantile(Distribution d, double p) {
  if (d == Distribution::Gaussian) return normal_quantile(p);
  if (!(p > 0.0 && p < 1.0)) throw ModelError("quantile level must lie in (0, 1)");
  return p < 0.5 ? kLaplaceScale * std::log(2.0 * p) : -kLaplaceScale * std::log(2.0 - 2.0 * p);
}

double standard_cdf(Distribution d, double x) {
  if (d == Distribution::Gaussian) return 0.5 * std::erfc(-x / std::numbers::sqrt2);
  return x < 0.0 ? 0.5 * std::exp(x / kLaplaceScale) : 1.0 - 0.5 * std::exp(-x / kLaplaceScale);
}

double standard_pdf(Distribution d, double x) {
  if (d == Distribution::Gaussian) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  }
  return std::exp(-std::abs(x) / kLaplaceScale) / (2.0 * kLaplaceScale);
}

}  // namespace rld
