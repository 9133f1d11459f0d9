#include "rld/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <sstream>

#include "rld/core_model.hpp"
#include "rld/error.hpp"

namespace rld {

namespace {

constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kDay = 86400;
constexpr int kSamplesPerHour = 12;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size() && std::isfinite(out);
}

int parse_int(const std::string& s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw DataError("truncated timestamp '" + s + "'");
  int v = 0;
  const auto res = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (res.ec != std::errc() || res.ptr != s.data() + pos + len) {
    throw DataError("malformed timestamp '" + s + "'");
  }
  return v;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
  const std::string s = trim(raw);
  // YYYY-MM-DD[T ]HH:MM[:SS][Z|+00:00]
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
    throw DataError("malformed timestamp '" + s + "'");
  }
  const int year = parse_int(s, 0, 4);
  const int month = parse_int(s, 5, 2);
  const int day = parse_int(s, 8, 2);
  const int hour = parse_int(s, 11, 2);
  const int minute = parse_int(s, 14, 2);
  int second = 0;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    second = parse_int(s, pos + 1, 2);
    pos += 3;
  }
  const std::string zone = s.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00")) {
    throw DataError("timestamp '" + s + "' is not UTC");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59) {
    throw DataError("timestamp '" + s + "' is out of range");
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kDay + hour * kHour + minute * 60 + second;
}

std::string format_date(std::int64_t seconds) {
  const std::chrono::sys_days day{std::chrono::days{floor_div(seconds, kDay)}};
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

RawSeries parse_series(std::istream& in, const std::string& source) {
  RawSeries out;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(source + ":" + std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    fail("missing header");
  }
  lineno = 1;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (trim(line) != "timestamp,load_mw,wind_mw") fail("header must be 'timestamp,load_mw,wind_mw'");
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 3) fail("expected 3 fields, got " + std::to_string(fields.size()));
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(fields[0]);
    } catch (const DataError& e) {
      fail(e.what());
    }
    double load = 0.0;
    double wind = 0.0;
    if (!parse_double(fields[1], load)) fail("unparseable load_mw '" + trim(fields[1]) + "'");
    if (!parse_double(fields[2], wind)) fail("unparseable wind_mw '" + trim(fields[2]) + "'");
    if (load < 0.0) fail("negative load");
    if (wind < 0.0) fail("negative wind");
    if (!out.timestamps.empty() && ts <= out.timestamps.back()) {
      fail("timestamps are not strictly increasing");
    }
    out.timestamps.push_back(ts);
    out.load.push_back(load);
    out.wind.push_back(wind);
  }
  return out;
}

RawSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_series(in, path);
}

std::vector<DayProfile> aggregate_hourly(const RawSeries& series) {
  std::vector<DayProfile> days;
  std::size_t i = 0;
  const std::size_t n = series.size();
  while (i < n) {
    const std::int64_t day = floor_div(series.timestamps[i], kDay);
    DayProfile prof;
    prof.date = format_date(day * kDay);
    for (int h = 0; h < 24; ++h) {
      const std::int64_t hour_start = day * kDay + h * kHour;
      if (i >= n || series.timestamps[i] >= hour_start + kHour || series.timestamps[i] < hour_start) {
        throw DataError("incomplete day " + prof.date + ": hour " + std::to_string(h) + " has no samples");
      }
      double load = 0.0;
      double wind = 0.0;
      int count = 0;
      for (; i < n && series.timestamps[i] < hour_start + kHour; ++i, ++count) {
        load += series.load[i];
        wind += series.wind[i];
      }
      if (count != kSamplesPerHour) {
        throw DataError("incomplete hour " + prof.date + " " + std::to_string(h) + ":00 has " +
                        std::to_string(count) + " samples, expected 12");
      }
      prof.load.push_back(load / kSamplesPerHour);
      prof.wind.push_back(wind / kSamplesPerHour);
    }
    days.push_back(std::move(prof));
  }
  return days;
}

std::vector<double> scale_wind(const std::vector<double>& load, const std::vector<double>& wind,
                               double p) {
  if (load.size() != wind.size() || load.empty()) throw DataError("load and wind lengths differ");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("penetration must lie in [0, 100]");
  double total_load = 0.0;
  double total_wind = 0.0;
  for (std::size_t t = 0; t < load.size(); ++t) {
    total_load += load[t];
    total_wind += wind[t];
  }
  if (!(total_load > 0.0)) throw DataError("total load must be positive");
  std::vector<double> d(load);
  if (p == 0.0) return d;
  if (!(total_wind > 0.0)) throw DataError("zero total wind cannot reach a positive penetration");
  const double kappa = (p / 100.0) * total_load / total_wind;
  for (std::size_t t = 0; t < d.size(); ++t) d[t] -= kappa * wind[t];
  return d;
}

RampLimits calibrate_ramp(const std::vector<double>& d, double factor) {
  if (d.size() < 2) throw DataError("ramp calibration needs at least two periods");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < d.size(); ++t) total += std::abs(d[t + 1] - d[t]);
  const double r = factor * total / static_cast<double>(d.size() - 1);
  return {r, r};
}

DayInstance make_instance(const DayProfile& day, double p, double ramp_factor) {
  DayInstance inst;
  inst.date = day.date;
  inst.p = p;
  inst.d = scale_wind(day.load, day.wind, p);
  inst.ramp = calibrate_ramp(inst.d, ramp_factor);
  double wind_total = 0.0;
  for (std::size_t t = 0; t < inst.d.size(); ++t) wind_total += day.load[t] - inst.d[t];
  inst.mean_wind = wind_total / static_cast<double>(inst.d.size());
  return inst;
}

std::vector<DayProfile> pick_days(const std::vector<DayProfile>& days, int k, std::uint64_t seed) {
  if (k < 0 || k > static_cast<int>(days.size())) {
    throw ConfigError("cannot pick " + std::to_string(k) + " of " + std::to_string(days.size()) + " days");
  }
  std::vector<std::size_t> idx(days.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng = make_stream(seed, 0x9D);
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  std::vector<DayProfile> out;
  for (std::size_t i : idx) out.push_back(days[i]);
  return out;
}

std::vector<DayProfile> synth_profiles(const SynthConfig& cfg) {
  if (cfg.days < 1) throw ConfigError("synthetic benchmark needs at least one day");
  if (!(cfg.load_base > 0.0)) throw ConfigError("synthetic load base must be positive");
  if (!(std::abs(cfg.wind_ar) < 1.0)) throw ConfigError("wind AR coefficient must lie in (-1, 1)");
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<DayProfile> out;
  for (int k = 0; k < cfg.days; ++k) {
    Rng rng = make_stream(cfg.seed, 0x5E, static_cast<std::uint64_t>(k));
    std::normal_distribution<double> z(0.0, 1.0);
    DayProfile day;
    day.date = format_date((15340 + k) * kDay);  // from 2012-01-01
    const double level = cfg.load_base * (1.0 + cfg.load_day_noise * z(rng));
    const double stationary = cfg.wind_noise / std::sqrt(1.0 - cfg.wind_ar * cfg.wind_ar);
    double x = stationary * z(rng);
    for (int h = 0; h < 24; ++h) {
      const double phase = two_pi * (h - 8) / 24.0;
      const double shape = 1.0 + cfg.load_swing * (std::sin(phase) + 0.4 * std::sin(2.0 * phase));
      day.load.push_back(std::max(0.0, level * (shape + cfg.load_hour_noise * z(rng))));
      if (h > 0) x = cfg.wind_ar * x + cfg.wind_noise * z(rng);
      const double w = 1.0 + x + cfg.wind_diurnal * std::cos(two_pi * h / 24.0);
      day.wind.push_back(std::max(0.05, w));
    }
    out.push_back(std::move(day));
  }
  return out;
}

std::vector<DayInstance> synth_benchmark(const SynthConfig& cfg, double p, double ramp_factor) {
  std::vector<DayInstance> out;
  for (const DayProfile& day : synth_profiles(cfg)) out.push_back(make_instance(day, p, ramp_factor));
  return out;
}

}  // namespace rld
