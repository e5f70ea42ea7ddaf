// binctl: calibrate, run and benchmark influence-vector controllers on the
// simulated plants.
//
// Exit codes: 0 success, 2 validation error, 3 runtime abort.
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "binctl/scenario.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct ScenarioFlags {
  std::vector<std::string> scenarios;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool plot = false;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
  cmd->add_option("--scenario", f.scenarios, "scenario JSON file or bundled preset name (repeatable)")->required();
  cmd->add_option("--seed", f.seed, "override the master seed");
  cmd->add_option("--out", f.out, "output directory (one subdirectory per scenario when several are given)");
  cmd->add_flag("--plot", f.plot, "also write SVG plots");
}

int run_scenarios(const ScenarioFlags& f, binctl::RunMode mode) {
  std::vector<binctl::Scenario> loaded;
  for (const auto& path : f.scenarios) {
    binctl::Scenario s = binctl::load_scenario(path);
    if (f.seed) s.master_seed = *f.seed;
    loaded.push_back(std::move(s));
  }
  std::vector<std::string> dirs;
  for (const auto& s : loaded) {
    if (f.out.empty()) dirs.push_back(s.output);
    else if (loaded.size() == 1) dirs.push_back(f.out);
    else dirs.push_back(f.out + "/" + s.name);
  }

  // Scenarios share nothing, so a batch runs concurrently.
  std::vector<std::future<binctl::ScenarioOutcome>> jobs;
  for (std::size_t i = 0; i < loaded.size(); ++i)
    jobs.push_back(std::async(std::launch::async, [&, i] { return binctl::run_scenario(loaded[i], mode, dirs[i], f.plot); }));

  int status = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const binctl::ScenarioOutcome out = jobs[i].get();
    std::cout << loaded[i].name << ": " << out.artifacts.size() << " artifacts in " << dirs[i] << "\n";
    for (const auto& r : out.summary)
      std::cout << "  " << r.run << " target " << r.target << " [" << r.fault_scenario << "] n_f=" << r.n_f
                << " error=" << binctl::io::fmt(r.final_error) << (r.on_target ? " on-target" : "")
                << (r.limit_cycle ? " limit-cycle" : "") << "\n";
    if (out.abort_message) {
      std::cerr << loaded[i].name << ": aborted: " << *out.abort_message << "\n";
      status = kExitRuntime;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-vector control of binary-actuated robots (simulated plants)"};
  app.require_subcommand(1);

  ScenarioFlags cal_flags, static_flags, dyn_flags;
  auto* cal = app.add_subcommand("calibrate", "identify influence vectors and characterize dispersion");
  add_scenario_flags(cal, cal_flags);
  auto* stat = app.add_subcommand("static", "run the iterative point-to-point controller");
  add_scenario_flags(stat, static_flags);
  auto* dyn = app.add_subcommand("dynamic", "run the bang-bang motion controller");
  add_scenario_flags(dyn, dyn_flags);

  auto* bench = app.add_subcommand("bench-optimizer", "combined search against the brute-force optimum");
  std::vector<std::size_t> sizes{8, 10, 12};
  std::size_t instances = 100;
  std::uint64_t bench_seed = 1;
  std::string bench_out = "out/bench";
  std::string bench_cost = "penalized";
  bool no_oracle = false;
  bench->add_option("--sizes", sizes, "actuator counts")->delimiter(',');
  bench->add_option("--instances", instances, "instances per size");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--cost", bench_cost, "residual, penalized or probabilistic");
  bench->add_flag("--no-oracle", no_oracle, "skip the 2^m enumeration");

  auto* list = app.add_subcommand("list-presets", "print bundled scenarios and plant presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*cal) return run_scenarios(cal_flags, binctl::RunMode::calibrate);
    if (*stat) return run_scenarios(static_flags, binctl::RunMode::static_position);
    if (*dyn) return run_scenarios(dyn_flags, binctl::RunMode::dynamic_motion);
    if (*bench) {
      const auto rows = binctl::bench_optimizer(sizes, instances, bench_seed, !no_oracle, binctl::parse_cost_kind(bench_cost));
      std::ostringstream csv, timing;
      binctl::write_bench_csv(csv, rows);
      binctl::write_bench_timing_csv(timing, rows);
      binctl::io::write_file(bench_out + "/bench.csv", csv.str());
      binctl::io::write_file(bench_out + "/wall_time.csv", timing.str());
      for (auto m : sizes) {
        std::size_t count = 0, within = 0;
        double worst = 0.0, slowest = 0.0;
        for (const auto& r : rows) {
          if (r.m != m) continue;
          ++count;
          slowest = std::max(slowest, r.search_seconds);
          if (r.oracle_cost) {
            within += r.best_cost <= 1.05 * *r.oracle_cost;
            worst = std::max(worst, *r.oracle_cost > 0 ? r.best_cost / *r.oracle_cost - 1.0 : 0.0);
          }
        }
        std::cout << "m=" << m << ": " << count << " instances, slowest search " << slowest << " s";
        if (!no_oracle) std::cout << ", within 5% of optimum " << within << "/" << count << ", worst gap " << worst;
        std::cout << "\n";
      }
      return 0;
    }
    if (*list) {
      std::cout << "scenarios:\n";
      for (const auto& n : binctl::scenario_preset_names()) std::cout << "  " << n << "\n";
      std::cout << "plants:\n";
      for (const auto& n : binctl::plant_preset_names()) std::cout << "  " << n << "\n";
      return 0;
    }
  } catch (const binctl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const binctl::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
