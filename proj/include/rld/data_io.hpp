#pragma once

// Load/wind ingestion and the day-instance pipeline: 5-minute samples are
// averaged per hour, wind is rescaled to a target share of daily load, and
// ramp limits are calibrated on the resulting net demand.
//
// CSV schema: header "timestamp,load_mw,wind_mw", comma separated, UTF-8,
// timestamps ISO-8601 UTC ("YYYY-MM-DDTHH:MM[:SS][Z]" or with a space).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rld {

struct RawSeries {
  std::vector<std::int64_t> timestamps;  // seconds since the Unix epoch
  std::vector<double> load;
  std::vector<double> wind;

  std::size_t size() const { return timestamps.size(); }
};

// Throws DataError naming the first offending line.
RawSeries load_series(const std::string& path);
RawSeries parse_series(std::istream& in, const std::string& source = "<stream>");

// Seconds since the epoch; throws DataError on malformed input.
std::int64_t parse_timestamp(const std::string& text);
std::string format_date(std::int64_t seconds);

struct DayProfile {
  std::string date;  // YYYY-MM-DD
  std::vector<double> load;  // 24 hourly means
  std::vector<double> wind;
};

// Hourly means of complete days. Every hour must hold exactly 12 samples on
// the 5-minute grid; partial hours and partial days raise DataError.
std::vector<DayProfile> aggregate_hourly(const RawSeries& series);

// d_t = load_t - kappa wind_t with kappa = (p / 100) sum(load) / sum(wind).
std::vector<double> scale_wind(const std::vector<double>& load, const std::vector<double>& wind,
                               double p);

struct RampLimits {
  double r_down = 0.0;
  double r_up = 0.0;
};

// Both limits equal factor * mean |d_{t+1} - d_t|.
RampLimits calibrate_ramp(const std::vector<double>& d, double factor = 0.8);

struct DayInstance {
  std::string date;
  std::vector<double> d;  // net demand, 24 hourly values
  RampLimits ramp;
  double p = 0.0;
  double mean_wind = 0.0;  // mean scaled wind (MW)
};

DayInstance make_instance(const DayProfile& day, double p, double ramp_factor = 0.8);

// Uniform sample of k days without replacement, in original order.
std::vector<DayProfile> pick_days(const std::vector<DayProfile>& days, int k, std::uint64_t seed);

struct SynthConfig {
  int days = 100;
  std::uint64_t seed = 2011;
  double load_base = 6000.0;       // MW
  double load_swing = 0.15;        // relative diurnal amplitude
  double load_day_noise = 0.05;    // relative day-level noise
  double load_hour_noise = 0.01;   // relative hourly noise
  double wind_ar = 0.9;            // hourly AR(1) coefficient of the wind shape
  double wind_noise = 0.35;        // innovation std of the wind shape
  double wind_diurnal = 0.2;       // relative diurnal wind swing
};

// Sinusoidal daily load plus autocorrelated wind; shapes only, so the wind
// level is set per penetration by scale_wind.
std::vector<DayProfile> synth_profiles(const SynthConfig& cfg);
std::vector<DayInstance> synth_benchmark(const SynthConfig& cfg, double p, double ramp_factor = 0.8);

}  // namespace rld
