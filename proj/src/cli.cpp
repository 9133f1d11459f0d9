#include "rld/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "rld/config.hpp"
#include "rld/error.hpp"
#include "rld/experiments.hpp"
#include "rld/sweep.hpp"

namespace rld {

namespace {

struct Flags {
  std::string config;
  std::string data;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::vector<double> penetration;
  std::vector<std::string> policies;
  std::optional<int> scenarios;
  std::optional<int> days;
  std::optional<int> jobs;
};

void setup_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_logger_mt("rld");
    spdlog::set_default_logger(logger);
    done = true;
  }
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("RLD_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

void add_common(CLI::App* cmd, Flags& f, bool sweep_flags) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--jobs", f.jobs, "worker threads (0 = all cores)");
  if (!sweep_flags) return;
  cmd->add_option("--data", f.data, "CSV path or 'synthetic'");
  cmd->add_option("--penetration", f.penetration, "wind penetration levels in percent")->delimiter(',');
  cmd->add_option("--policies", f.policies, "policy names")->delimiter(',');
  cmd->add_option("--scenarios", f.scenarios, "scenarios per day");
  cmd->add_option("--days", f.days, "number of days");
}

// Config file first, then flags on top.
RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.data.empty()) cfg.data = f.data;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.penetration.empty()) cfg.penetration = f.penetration;
  if (!f.policies.empty()) cfg.policies = f.policies;
  if (f.scenarios) cfg.scenarios = *f.scenarios;
  if (f.days) cfg.days = *f.days;
  if (f.jobs) cfg.jobs = *f.jobs;
  cfg.validate();
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
  if (!os) throw DataError("write failed for " + path.string());
}

std::filesystem::path prepare_out(const std::string& dir, const RunConfig& cfg) {
  std::filesystem::path out(dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  write_file(out / "resolved_config.json", config_to_json(cfg));
  return out;
}

void run_sweep(const RunConfig& cfg, const std::string& dir) {
  const std::filesystem::path out = prepare_out(dir, cfg);
  const std::vector<DayProfile> days = load_days(cfg);
  spdlog::info("{} days, {} penetration levels, {} scenarios per day", days.size(),
               cfg.penetration.size(), cfg.scenarios);
  const SweepResult res = penetration_sweep(days, cfg, is_synthetic(cfg));
  write_file(out / "results.csv", results_csv(res));
  write_file(out / "summary.json", summary_json(res, cfg));
  for (const SweepSummary& s : res.summary) {
    std::cout << "p=" << s.p << " " << s.policy << " ratio=" << s.ratio << " se=" << s.ratio_se;
    if (s.failed_days > 0) std::cout << " failed_days=" << s.failed_days;
    std::cout << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  setup_logging();
  CLI::App app{"Ramp-limited dispatch policies: evaluation and verification"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* eval = app.add_subcommand("run-eval", "evaluate policies at one penetration level");
  CLI::App* sweep = app.add_subcommand("sweep", "cost ratios over every penetration level");
  CLI::App* dp = app.add_subcommand("dp-check", "threshold-structure check on the dynamic program");
  CLI::App* bench = app.add_subcommand("solver-bench", "time the cone solver on affine-policy programs");
  CLI::App* emit = app.add_subcommand("emit-config", "print the resolved configuration");
  add_common(eval, f, true);
  add_common(sweep, f, true);
  add_common(dp, f, false);
  add_common(bench, f, false);
  add_common(emit, f, true);
  bool emit_to_out = false;
  emit->add_flag("--write", emit_to_out, "write resolved_config.json into --out instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n\n" << app.help();
    return static_cast<int>(ErrorCategory::Usage);
  }

  try {
    RunConfig cfg = resolve(f);
    if (eval->parsed()) {
      if (cfg.penetration.size() > 1) cfg.penetration.resize(1);
      run_sweep(cfg, f.out);
    } else if (sweep->parsed()) {
      run_sweep(cfg, f.out);
    } else if (dp->parsed()) {
      const std::filesystem::path out = prepare_out(f.out, cfg);
      const std::vector<DpCheckEntry> entries = run_dp_check(cfg);
      const std::string report = dp_report_json(entries, cfg);
      write_file(out / "dp_report.json", report);
      std::int64_t violations = 0;
      for (const DpCheckEntry& e : entries) {
        violations += e.report.clamp_violations + e.report.unimodal_violations;
      }
      std::cout << entries.size() << " programs checked, " << violations << " violations\n";
    } else if (bench->parsed()) {
      const std::filesystem::path out = prepare_out(f.out, cfg);
      const std::vector<BenchEntry> entries = run_solver_bench(cfg);
      write_file(out / "solver_bench.json", solver_bench_json(entries, cfg));
      for (const BenchEntry& e : entries) {
        std::cout << "T=" << e.horizon << " " << e.status << " iters=" << e.iterations
                  << " time=" << e.seconds << "s residual=" << e.max_residual << "\n";
      }
    } else if (emit->parsed()) {
      if (emit_to_out) {
        prepare_out(f.out, cfg);
      } else {
        std::cout << config_to_json(cfg);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error[" << e.category_name() << "]: " << e.what() << "\n";
    return static_cast<int>(e.category());
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rld
