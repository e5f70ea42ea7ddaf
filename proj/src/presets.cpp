// Bundled scenarios, selectable by name wherever a scenario path is accepted.
#include <map>

#include "binctl/scenario.hpp"

namespace binctl {

namespace {

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> table = {
      {"table1_analogue", R"({
  "schema_version": 1,
  "name": "table1_analogue",
  "master_seed": 2011,
  "plant": {"preset": "nonlinear20x4", "seed": 1},
  "calibration": {"trials": 100},
  "controller": {"kind": "static", "max_iterations": 15, "tolerance": [0.5, 0.5, 0.5, 0.5], "weights": [1, 1, 0, 0]},
  "random_targets": {"count": 3},
  "runs": [
    {"id": "residual", "cost": "residual"},
    {"id": "probabilistic", "cost": "probabilistic"},
    {"id": "penalized", "cost": "penalized"}
  ],
  "output": "out/table1_analogue"
}
)"},
      {"perturbation", R"({
  "schema_version": 1,
  "name": "perturbation",
  "master_seed": 2011,
  "plant": {"preset": "nonlinear20x4", "seed": 1},
  "controller": {"kind": "static", "cost": "penalized", "hold_iterations": 10},
  "random_targets": {"count": 3},
  "runs": [
    {"id": "load", "loads": [{"at": 3, "displacement": [3.0, -2.0, 0.0, 0.0]}]}
  ],
  "output": "out/perturbation"
}
)"},
      {"static_faults", R"({
  "schema_version": 1,
  "name": "static_faults",
  "master_seed": 2011,
  "plant": {"preset": "nonlinear20x4", "seed": 1},
  "controller": {"kind": "static", "cost": "penalized"},
  "random_targets": {"count": 3},
  "runs": [
    {"id": "nominal"},
    {"id": "f3", "faults": [{"actuators": [2, 9, 15], "mode": "stuck_on"}]},
    {"id": "f3_detected", "faults": [{"actuators": [2, 9, 15], "mode": "stuck_on", "detected": true}]},
    {"id": "f6", "faults": [{"actuators": [2, 9, 15, 4, 12, 18], "mode": "stuck_on"}]},
    {"id": "f10", "faults": [{"actuators": [2, 9, 15, 4, 12, 18, 0, 7, 10, 17], "mode": "stuck_on"}]}
  ],
  "output": "out/static_faults"
}
)"},
      {"step_response", R"({
  "schema_version": 1,
  "name": "step_response",
  "master_seed": 2011,
  "plant": {"preset": "linear20x4", "seed": 1},
  "controller": {"kind": "dynamic", "lambda": 4.0, "control_period": 0.01, "duration": 4.0, "weights": [1, 1, 0, 0]},
  "trajectory": {"kind": "hold", "center": "workspace"},
  "output": "out/step_response"
}
)"},
      {"tracking_faults", R"({
  "schema_version": 1,
  "name": "tracking_faults",
  "master_seed": 2011,
  "plant": {"preset": "nonlinear20x4", "seed": 1},
  "controller": {"kind": "dynamic", "lambda": 8.0, "control_period": 0.01, "derivative_window": 3, "duration": 16.0,
                 "weights": [1, 1, 0, 0]},
  "trajectory": {"kind": "circle", "center": "workspace", "radius": 4.0, "period": 8.0, "dofs": [0, 1]},
  "runs": [
    {"id": "nominal"},
    {"id": "f4", "faults": [{"actuators": [1, 6, 11, 16], "mode": "stuck_off"}]},
    {"id": "f7", "faults": [{"actuators": [1, 6, 11, 16, 3, 8, 13], "mode": "stuck_off"}]},
    {"id": "f10", "faults": [{"actuators": [1, 6, 11, 16, 3, 8, 13, 18, 0, 5], "mode": "stuck_off"}]},
    {"id": "f14", "faults": [{"actuators": [1, 6, 11, 16, 3, 8, 13, 18, 0, 5, 10, 15, 2, 7], "mode": "stuck_off"}]}
  ],
  "output": "out/tracking_faults"
}
)"},
      {"chattering", R"({
  "schema_version": 1,
  "name": "chattering",
  "master_seed": 2011,
  "plant": {"preset": "linear20x4", "seed": 1},
  "controller": {"kind": "dynamic", "lambda": 4.0, "duration": 16.0, "weights": [1, 1, 0, 0]},
  "trajectory": {"kind": "circle", "center": "workspace", "radius": 2.0, "period": 4.0, "dofs": [0, 1]},
  "runs": [
    {"id": "T10ms", "control_period": 0.01},
    {"id": "T20ms", "control_period": 0.02},
    {"id": "T40ms", "control_period": 0.04},
    {"id": "T200ms", "control_period": 0.2}
  ],
  "output": "out/chattering"
}
)"},
  };
  return table;
}

}  // namespace

std::vector<std::string> scenario_preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, _] : presets()) names.push_back(k);
  return names;
}

const std::string& scenario_preset_text(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown scenario preset '" + name + "'");
  return it->second;
}

}  // namespace binctl
