// Scenario files and experiment orchestration behind the command-line tool.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "binctl/dynamic_controller.hpp"
#include "binctl/io.hpp"
#include "binctl/static_controller.hpp"

namespace binctl {

enum class ControllerKind { static_position, dynamic_motion };

struct PlantSource {
  std::string preset = "nonlinear20x4";
  std::optional<std::uint64_t> seed;  ///< defaults to a stream of the master seed
  std::string file;                   ///< plant JSON; overrides the preset when set
};

struct RunSpec {
  std::string id;
  std::optional<CostKind> cost;  ///< static only; falls back to the controller's cost
  std::string label;             ///< fault scenario column of the summary
  std::optional<double> control_period;  ///< dynamic only; overrides the controller value
  std::optional<double> lambda;          ///< dynamic only
  Schedule schedule;
  std::vector<bool> displacement_loads;  ///< per load: given as K^-1 f rather than f
};

struct RandomTargets {
  std::size_t count = 3;
  double on_probability = 0.5;
  bool respect_faults = true;  ///< stuck actuators keep their stuck value when drawing targets
};

struct TrajectorySpec {
  Trajectory::Kind kind = Trajectory::Kind::hold;
  std::optional<StateVector> center;  ///< empty: middle of the workspace
  double radius = 0.0;
  double period = 1.0;
  Eigen::Index dof_a = 0, dof_b = 1;
  std::vector<double> times;
  std::vector<StateVector> points;
};

struct Scenario {
  std::string name;
  std::uint64_t master_seed = 1;
  PlantSource plant;
  CalibrationOptions calibration;
  ControllerKind controller = ControllerKind::static_position;
  StaticConfig static_config;
  DynamicConfig dynamic_config;
  double duration = 10.0;  ///< dynamic runs, seconds
  Vector tolerance;        ///< empty: 0.5 on every DOF
  Vector weights;          ///< empty: translations only on 4-DOF plants, else all
  std::vector<StateVector> targets;
  std::optional<RandomTargets> random_targets;
  TrajectorySpec trajectory;
  std::vector<RunSpec> runs;
  std::string output = "out";
};

/// Parses and validates a scenario document. Errors carry the JSON path of the
/// offending field, or the line and column for syntax errors.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");

/// Loads a file, or a bundled preset when `path_or_preset` names one.
Scenario load_scenario(const std::string& path_or_preset);

std::vector<std::string> scenario_preset_names();
const std::string& scenario_preset_text(const std::string& name);

PlantModel build_plant(const Scenario& s);

/// Reachable targets drawn as noise-free steady states of random inputs.
std::vector<TargetSpec> draw_targets(const PlantModel& plant, const Scenario& s, const FaultState& faults);

/// Middle of the workspace: x_rest + sum_k d_k / 2.
StateVector workspace_center(const PlantModel& plant);

enum class RunMode { calibrate, static_position, dynamic_motion };

struct ScenarioOutcome {
  std::vector<io::SummaryRow> summary;
  std::vector<std::string> artifacts;
  std::optional<std::string> abort_message;
};

/// Calibrates and, depending on the mode, runs every RunSpec. Artifacts go to
/// `out_dir`. A runtime failure stops the scenario after writing whatever was
/// completed plus abort.txt; the message is returned, not thrown.
ScenarioOutcome run_scenario(const Scenario& s, RunMode mode, const std::string& out_dir, bool plot);

struct BenchRow {
  std::string instance;
  std::size_t m = 0;
  SearchStage stage = SearchStage::exhaustive;
  std::uint64_t evaluations = 0;
  double best_cost = 0.0;
  std::optional<double> oracle_cost;
  double search_seconds = 0.0;
  double oracle_seconds = 0.0;
};

/// Random static planning instance on a nonlinear<m>x4 plant.
CostFunction make_bench_instance(std::size_t m, std::uint64_t seed, std::size_t instance, CostKind kind);

/// Full 2^m enumeration; best under the optimizer's tie-break.
SearchResult brute_force_search(const CostFunction& cost, std::size_t m);

inline constexpr std::size_t kOracleMaxActuators = 12;

/// Combined search on seeded instances, with the brute-force optimum when
/// `oracle` is set (ConfigError if any size exceeds the oracle cap).
std::vector<BenchRow> bench_optimizer(const std::vector<std::size_t>& sizes, std::size_t instances,
                                      std::uint64_t seed, bool oracle, CostKind kind = CostKind::penalized);

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);
void write_bench_timing_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace binctl
