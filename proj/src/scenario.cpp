#include "binctl/scenario.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "binctl/core.hpp"

namespace binctl {

namespace {

using Json = io::Json;

// Field access with the JSON path in every error message.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const Json& json() const { return *j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_->is_object()) fail("expected an object");
    for (const auto& [key, _] : j_->items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ConfigError(path_ + "." + key + ": unknown field");
    }
  }
  bool has(const char* key) const { return j_->contains(key); }
  Node at(const char* key) const {
    if (!has(key)) fail(std::string("missing field '") + key + "'");
    return Node(j_->at(key), path_ + "." + key);
  }
  Node at(std::size_t i) const { return Node(j_->at(i), path_ + "[" + std::to_string(i) + "]"); }
  std::size_t size() const { return j_->size(); }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  double number_in(double lo, double hi) const {
    const double v = number();
    if (!(v >= lo && v <= hi)) fail("value " + j_->dump() + " outside [" + io::fmt(lo) + ", " + io::fmt(hi) + "]");
    return v;
  }
  std::uint64_t unsigned_int() const {
    if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<long long>() >= 0))
      fail("expected a non-negative integer");
    return j_->get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  Vector vector(Eigen::Index expected = -1) const {
    if (!j_->is_array()) fail("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) v[static_cast<Eigen::Index>(i)] = at(i).number();
    if (expected >= 0 && v.size() != expected) fail("expected " + std::to_string(expected) + " values");
    return v;
  }
  std::vector<std::size_t> index_list() const {
    if (!j_->is_array()) fail("expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).unsigned_int());
    return out;
  }

 private:
  const Json* j_;
  std::string path_;
};

FaultMode parse_fault_mode(const Node& n) {
  const std::string s = n.string();
  if (s == "stuck_on") return FaultMode::stuck_on;
  if (s == "stuck_off") return FaultMode::stuck_off;
  if (s == "repaired") return FaultMode::repaired;
  n.fail("unknown fault mode '" + s + "' (stuck_on, stuck_off, repaired)");
}

void parse_calibration(const Node& n, CalibrationOptions& c) {
  n.expect_object({"repeats", "trials", "max_switches", "base"});
  if (n.has("repeats")) c.repeats = static_cast<int>(n.at("repeats").number_in(1, 1000));
  if (n.has("trials")) c.trials = static_cast<int>(n.at("trials").number_in(30, 100000));
  if (n.has("max_switches")) c.max_switches = static_cast<std::size_t>(n.at("max_switches").number_in(1, 64));
  if (n.has("base")) {
    const std::string b = n.at("base").string();
    if (b == "random") c.base = TrialBase::random;
    else if (b == "all_off") c.base = TrialBase::all_off;
    else n.at("base").fail("expected 'random' or 'all_off'");
  }
}

void parse_controller(const Node& n, Scenario& s) {
  n.expect_object({"kind", "cost", "penalty_beta", "max_iterations", "stop_rule", "p_conv_min", "settle_time",
                   "hold_iterations", "excluded_actuators", "tolerance", "weights", "ga", "lambda",
                   "control_period", "deadband", "derivative_window", "sim_dt", "duration",
                   "use_displacement_vectors", "mc_samples"});
  const std::string kind = n.at("kind").string();
  if (kind == "static") s.controller = ControllerKind::static_position;
  else if (kind == "dynamic") s.controller = ControllerKind::dynamic_motion;
  else n.at("kind").fail("expected 'static' or 'dynamic'");

  auto& sc = s.static_config;
  auto& dc = s.dynamic_config;
  try {
    if (n.has("cost")) sc.cost_kind = parse_cost_kind(n.at("cost").string());
    if (n.has("stop_rule")) sc.stop_rule = parse_stop_rule(n.at("stop_rule").string());
  } catch (const ConfigError& e) {
    n.fail(e.what());
  }
  if (n.has("penalty_beta")) sc.penalty_beta = n.at("penalty_beta").number_in(0, 1e6);
  if (n.has("max_iterations")) sc.max_iterations = static_cast<int>(n.at("max_iterations").number_in(1, 10000));
  if (n.has("p_conv_min")) sc.p_conv_min = n.at("p_conv_min").number_in(1e-9, 1 - 1e-9);
  if (n.has("settle_time")) sc.settle_time = n.at("settle_time").number_in(0, 1e6);
  if (n.has("hold_iterations")) sc.hold_iterations = static_cast<int>(n.at("hold_iterations").number_in(0, 10000));
  if (n.has("mc_samples")) sc.mc_samples = static_cast<int>(n.at("mc_samples").number_in(1, 1e8));
  if (n.has("excluded_actuators")) {
    for (auto k : n.at("excluded_actuators").index_list()) {
      sc.excluded_actuators.insert(k);
      dc.excluded_actuators.insert(k);
    }
  }
  if (n.has("tolerance")) s.tolerance = n.at("tolerance").vector();
  if (n.has("weights")) s.weights = n.at("weights").vector();
  if (n.has("ga")) {
    const Node g = n.at("ga");
    g.expect_object({"wide_population", "wide_generations", "local_population", "local_generations",
                     "crossover_segment_bits", "crossover_base_prob", "mutation_prob", "seed_min_switches",
                     "exhaustive_max_switches"});
    auto& p = sc.ga;
    if (g.has("wide_population")) p.wide_population = static_cast<int>(g.at("wide_population").number_in(2, 1e6));
    if (g.has("wide_generations")) p.wide_generations = static_cast<int>(g.at("wide_generations").number_in(0, 1e6));
    if (g.has("local_population")) p.local_population = static_cast<int>(g.at("local_population").number_in(2, 1e6));
    if (g.has("local_generations")) p.local_generations = static_cast<int>(g.at("local_generations").number_in(0, 1e6));
    if (g.has("crossover_segment_bits")) p.crossover_segment_bits = static_cast<int>(g.at("crossover_segment_bits").number_in(1, 64));
    if (g.has("crossover_base_prob")) p.crossover_base_prob = g.at("crossover_base_prob").number_in(0, 1);
    if (g.has("mutation_prob")) p.mutation_prob = g.at("mutation_prob").number_in(0, 1);
    if (g.has("seed_min_switches")) p.seed_min_switches = static_cast<int>(g.at("seed_min_switches").number_in(0, 64));
    if (g.has("exhaustive_max_switches")) p.exhaustive_max_switches = static_cast<int>(g.at("exhaustive_max_switches").number_in(0, 64));
  }
  if (n.has("lambda")) dc.lambda = n.at("lambda").number_in(1e-9, 1e6);
  if (n.has("control_period")) dc.control_period = n.at("control_period").number_in(1e-6, 1e3);
  if (n.has("deadband")) dc.deadband = n.at("deadband").number_in(0, 1e12);
  if (n.has("derivative_window")) dc.derivative_window = static_cast<int>(n.at("derivative_window").number());
  if (n.has("sim_dt")) dc.sim_dt = n.at("sim_dt").number_in(1e-7, 1);
  if (n.has("duration")) s.duration = n.at("duration").number_in(0, 1e6);
  if (n.has("use_displacement_vectors")) dc.use_displacement_vectors = n.at("use_displacement_vectors").boolean();
  try {
    sc.validate();
    dc.validate();
  } catch (const ConfigError& e) {
    n.fail(e.what());
  }
}

void parse_trajectory(const Node& n, TrajectorySpec& t) {
  n.expect_object({"kind", "center", "radius", "period", "dofs", "times", "points"});
  const std::string kind = n.at("kind").string();
  if (kind == "hold") t.kind = Trajectory::Kind::hold;
  else if (kind == "circle") t.kind = Trajectory::Kind::circle;
  else if (kind == "polyline") t.kind = Trajectory::Kind::polyline;
  else n.at("kind").fail("expected 'hold', 'circle' or 'polyline'");
  if (n.has("center")) {
    const Node c = n.at("center");
    if (c.json().is_string()) {
      if (c.string() != "workspace") c.fail("expected 'workspace' or an array");
    } else {
      t.center = c.vector();
    }
  }
  if (n.has("radius")) t.radius = n.at("radius").number_in(0, 1e6);
  if (n.has("period")) t.period = n.at("period").number_in(1e-6, 1e6);
  if (n.has("dofs")) {
    const auto d = n.at("dofs").index_list();
    if (d.size() != 2 || d[0] == d[1]) n.at("dofs").fail("expected two distinct DOF indices");
    t.dof_a = static_cast<Eigen::Index>(d[0]);
    t.dof_b = static_cast<Eigen::Index>(d[1]);
  }
  if (t.kind == Trajectory::Kind::polyline) {
    const Node times = n.at("times");
    const Node points = n.at("points");
    if (times.size() != points.size() || times.size() == 0) n.fail("times and points must have the same non-zero length");
    for (std::size_t i = 0; i < times.size(); ++i) {
      t.times.push_back(times.at(i).number());
      t.points.push_back(points.at(i).vector());
      if (i > 0 && !(t.times[i] > t.times[i - 1])) times.at(i).fail("times must be increasing");
    }
  }
}

RunSpec parse_run(const Node& n, std::size_t index) {
  n.expect_object({"id", "cost", "label", "faults", "loads", "control_period", "lambda"});
  RunSpec r;
  r.id = n.has("id") ? n.at("id").string() : "run" + std::to_string(index);
  if (r.id.empty() || r.id.find_first_of(",/\\ \t\n") != std::string::npos)
    n.at("id").fail("ids must be non-empty without commas, slashes or whitespace");
  if (n.has("cost")) {
    try {
      r.cost = parse_cost_kind(n.at("cost").string());
    } catch (const ConfigError& e) {
      n.at("cost").fail(e.what());
    }
  }
  if (n.has("label")) r.label = n.at("label").string();
  if (n.has("control_period")) r.control_period = n.at("control_period").number_in(1e-6, 1e3);
  if (n.has("lambda")) r.lambda = n.at("lambda").number_in(1e-9, 1e6);
  if (n.has("faults")) {
    const Node fs = n.at("faults");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const Node f = fs.at(i);
      f.expect_object({"at", "actuator", "actuators", "mode", "detected"});
      std::vector<std::size_t> which;
      if (f.has("actuator")) which.push_back(f.at("actuator").unsigned_int());
      if (f.has("actuators")) {
        const auto more = f.at("actuators").index_list();
        which.insert(which.end(), more.begin(), more.end());
      }
      if (which.empty()) f.fail("needs 'actuator' or 'actuators'");
      const double at = f.has("at") ? f.at("at").number() : 0.0;
      const FaultMode mode = parse_fault_mode(f.at("mode"));
      const bool detected = f.has("detected") && f.at("detected").boolean();
      for (auto k : which) r.schedule.faults.push_back({at, k, mode, detected});
    }
  }
  if (n.has("loads")) {
    const Node ls = n.at("loads");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const Node l = ls.at(i);
      l.expect_object({"at", "force", "displacement"});
      if (l.has("force") == l.has("displacement")) l.fail("give exactly one of 'force' or 'displacement'");
      LoadEvent e;
      e.at = l.has("at") ? l.at("at").number() : 0.0;
      // A displacement load is converted to force once the plant is known.
      e.force = l.has("force") ? l.at("force").vector() : l.at("displacement").vector();
      r.displacement_loads.push_back(l.has("displacement"));
      r.schedule.loads.push_back(std::move(e));
    }
  }
  if (r.label.empty()) {
    std::size_t on = 0, off = 0, det = 0;
    for (const auto& f : r.schedule.faults) {
      on += f.mode == FaultMode::stuck_on;
      off += f.mode == FaultMode::stuck_off;
      det += f.detected;
    }
    std::ostringstream os;
    if (on + off == 0) os << "none";
    if (on) os << on << " stuck_on";
    if (off) os << (on ? " " : "") << off << " stuck_off";
    if (det) os << " (" << det << " detected)";
    if (!r.schedule.loads.empty()) os << " +load";
    r.label = os.str();
  }
  return r;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // nlohmann reports the byte offset; convert it to line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON syntax error: " + e.what());
  }

  const Node root(doc, source);
  root.expect_object({"schema_version", "name", "master_seed", "plant", "calibration", "controller", "targets",
                      "random_targets", "trajectory", "runs", "output"});
  if (!root.has("schema_version")) root.fail("missing schema_version");
  if (root.at("schema_version").unsigned_int() != static_cast<std::uint64_t>(io::kSchemaVersion))
    root.at("schema_version").fail("unsupported schema_version (expected " + std::to_string(io::kSchemaVersion) + ")");

  Scenario s;
  s.name = root.at("name").string();
  if (s.name.empty() || s.name.find_first_of(",/\\") != std::string::npos) root.at("name").fail("invalid name");
  if (root.has("master_seed")) s.master_seed = root.at("master_seed").unsigned_int();
  if (root.has("plant")) {
    const Node p = root.at("plant");
    p.expect_object({"preset", "seed", "file"});
    if (p.has("preset")) s.plant.preset = p.at("preset").string();
    if (p.has("seed")) s.plant.seed = p.at("seed").unsigned_int();
    if (p.has("file")) s.plant.file = p.at("file").string();
  }
  if (root.has("calibration")) parse_calibration(root.at("calibration"), s.calibration);
  parse_controller(root.at("controller"), s);
  if (root.has("targets")) {
    const Node t = root.at("targets");
    for (std::size_t i = 0; i < t.size(); ++i) s.targets.push_back(t.at(i).vector());
  }
  if (root.has("random_targets")) {
    const Node r = root.at("random_targets");
    r.expect_object({"count", "on_probability", "respect_faults"});
    RandomTargets rt;
    if (r.has("count")) rt.count = static_cast<std::size_t>(r.at("count").number_in(1, 1e6));
    if (r.has("on_probability")) rt.on_probability = r.at("on_probability").number_in(0, 1);
    if (r.has("respect_faults")) rt.respect_faults = r.at("respect_faults").boolean();
    s.random_targets = rt;
  }
  if (root.has("trajectory")) parse_trajectory(root.at("trajectory"), s.trajectory);
  if (root.has("runs")) {
    const Node runs = root.at("runs");
    for (std::size_t i = 0; i < runs.size(); ++i) s.runs.push_back(parse_run(runs.at(i), i));
  }
  if (s.runs.empty()) s.runs.push_back(parse_run(Node(Json::object(), source + ".runs[0]"), 0));
  std::set<std::string> ids;
  for (const auto& r : s.runs)
    if (!ids.insert(r.id).second) root.at("runs").fail("duplicate run id '" + r.id + "'");
  if (root.has("output")) s.output = root.at("output").string();

  if (s.controller == ControllerKind::static_position && s.targets.empty() && !s.random_targets)
    root.fail("static scenarios need 'targets' or 'random_targets'");
  if (s.controller == ControllerKind::dynamic_motion && !root.has("trajectory"))
    root.fail("dynamic scenarios need a 'trajectory'");

  // Dimension checks against the plant are cheap for presets; do them now so
  // validation errors surface before any work starts.
  const PlantModel plant = build_plant(s);
  const Eigen::Index n = plant.dofs();
  const auto m = static_cast<std::size_t>(plant.actuators());
  auto check_dim = [&](const Vector& v, const std::string& what) {
    if (v.size() != 0 && v.size() != n) throw ConfigError(source + "." + what + ": expected " + std::to_string(n) + " values");
  };
  check_dim(s.tolerance, "controller.tolerance");
  check_dim(s.weights, "controller.weights");
  for (std::size_t i = 0; i < s.targets.size(); ++i) check_dim(s.targets[i], "targets[" + std::to_string(i) + "]");
  if (s.trajectory.center) check_dim(*s.trajectory.center, "trajectory.center");
  for (std::size_t i = 0; i < s.trajectory.points.size(); ++i)
    check_dim(s.trajectory.points[i], "trajectory.points[" + std::to_string(i) + "]");
  if (s.trajectory.dof_a >= n || s.trajectory.dof_b >= n) throw ConfigError(source + ".trajectory.dofs: index out of range");
  for (auto k : s.static_config.excluded_actuators)
    if (k >= m) throw ConfigError(source + ".controller.excluded_actuators: actuator " + std::to_string(k) + " >= m");
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    try {
      s.runs[i].schedule.validate(m, n);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ".runs[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path_or_preset) {
  for (const auto& name : scenario_preset_names())
    if (name == path_or_preset) return parse_scenario(scenario_preset_text(name), name);
  std::ifstream in(path_or_preset, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario '" + path_or_preset + "' (not a file or bundled preset)");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path_or_preset);
}

PlantModel build_plant(const Scenario& s) {
  if (!s.plant.file.empty()) return io::load_plant(s.plant.file);
  const std::uint64_t seed = s.plant.seed ? *s.plant.seed : derive_seed(s.master_seed, "plant");
  return make_reference_plant(s.plant.preset, seed);
}

namespace {

TargetSpec make_target(const Scenario& s, const StateVector& x_d) {
  const Eigen::Index n = x_d.size();
  TargetSpec t;
  t.x_d = x_d;
  t.tolerance = s.tolerance.size() ? s.tolerance : Vector(Vector::Constant(n, 0.5));
  if (s.weights.size()) {
    t.weights = s.weights;
  } else if (n == 4) {
    t.weights = Vector::Zero(4);
    t.weights.head(2).setOnes();
  } else {
    t.weights = Vector::Ones(n);
  }
  t.validate();
  return t;
}

}  // namespace

std::vector<TargetSpec> draw_targets(const PlantModel& plant, const Scenario& s, const FaultState& faults) {
  std::vector<TargetSpec> out;
  for (const auto& x : s.targets) out.push_back(make_target(s, x));
  if (s.random_targets) {
    Rng rng = make_stream(s.master_seed, "targets");
    const auto m = static_cast<std::size_t>(plant.actuators());
    for (std::size_t i = 0; i < s.random_targets->count; ++i) {
      InputVector u(m);
      for (std::size_t k = 0; k < m; ++k) u.set(k, bernoulli(rng, s.random_targets->on_probability));
      const FaultState none;
      out.push_back(make_target(s, steady_state_exact(plant, u, s.random_targets->respect_faults ? faults : none, {})));
    }
  }
  return out;
}

StateVector workspace_center(const PlantModel& plant) {
  return plant.params().x_rest + 0.5 * plant.displacement_influence().rowwise().sum();
}

namespace {

FaultState initial_faults(const Schedule& schedule) {
  FaultState f;
  LoadState l;
  std::set<std::size_t> ex;
  ScheduleCursor(schedule).advance(0.0, f, l, ex);
  return f;
}

Schedule resolve_loads(const RunSpec& run, const PlantModel& plant) {
  Schedule out = run.schedule;
  for (std::size_t i = 0; i < out.loads.size(); ++i)
    if (run.displacement_loads[i]) out.loads[i].force = plant.params().K * out.loads[i].force;
  return out;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

Trajectory build_trajectory(const TrajectorySpec& t, const PlantModel& plant) {
  const StateVector center = t.center ? *t.center : workspace_center(plant);
  switch (t.kind) {
    case Trajectory::Kind::hold: return Trajectory::hold(center);
    case Trajectory::Kind::circle: return Trajectory::circle(center, t.radius, t.period, t.dof_a, t.dof_b);
    case Trajectory::Kind::polyline: return Trajectory::polyline(t.times, t.points);
  }
  throw ContractError("unknown trajectory kind");
}

}  // namespace

ScenarioOutcome run_scenario(const Scenario& s, RunMode mode, const std::string& out_dir, bool plot) {
  if (mode == RunMode::static_position && s.controller != ControllerKind::static_position)
    throw ConfigError(s.name + ": scenario controller is not static");
  if (mode == RunMode::dynamic_motion && s.controller != ControllerKind::dynamic_motion)
    throw ConfigError(s.name + ": scenario controller is not dynamic");

  ScenarioOutcome outcome;
  std::ostringstream timing;
  timing << "scenario,stage,wall_seconds\n";
  auto emit = [&](const std::string& file, const std::string& content) {
    const std::string path = join(out_dir, file);
    io::write_file(path, content);
    outcome.artifacts.push_back(path);
  };
  auto flush_summary = [&] {
    std::ostringstream os;
    io::write_summary_csv(os, outcome.summary);
    emit("summary.csv", os.str());
    emit("wall_time.csv", timing.str());
  };

  try {
    const PlantModel plant = build_plant(s);
    auto t0 = std::chrono::steady_clock::now();
    Rng cal_rng = make_stream(s.master_seed, "calibration");
    const CalibrationReport cal = calibrate(plant, s.calibration, cal_rng);
    timing << s.name << ",calibration," << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << '\n';
    emit("calibration.json", io::calibration_to_json(cal).dump(2) + "\n");
    {
      std::ostringstream os;
      io::write_dispersion_csv(os, cal);
      emit("dispersion.csv", os.str());
    }
    if (plot) {
      io::Series pts{"|eps_a| on DOF 0", {}, {}};
      // Sorted by switch count so the polyline reads as a spread per count.
      std::vector<std::pair<double, double>> xy;
      for (const auto& smp : cal.samples) xy.emplace_back(static_cast<double>(smp.switches), std::abs(smp.eps_a[0]));
      std::sort(xy.begin(), xy.end());
      for (auto [x, y] : xy) {
        pts.x.push_back(x);
        pts.y.push_back(y);
      }
      io::Series law{"fitted sigma sqrt(s_n)", {}, {}};
      for (std::size_t k = 1; k <= s.calibration.max_switches; ++k) {
        law.x.push_back(static_cast<double>(k));
        law.y.push_back(cal.fitted_sigma.size() ? cal.fitted_sigma[0] * std::sqrt(static_cast<double>(k)) : 0.0);
      }
      emit("dispersion.svg", io::svg_plot(s.name + ": approximation error", "switching count", "|eps_a|", {pts, law}));
    }
    if (mode == RunMode::calibrate) {
      flush_summary();
      return outcome;
    }

    for (const auto& run : s.runs) {
      const Schedule schedule = resolve_loads(run, plant);
      const FaultState faults0 = initial_faults(schedule);
      t0 = std::chrono::steady_clock::now();
      if (mode == RunMode::static_position) {
        StaticConfig cfg = s.static_config;
        if (run.cost) cfg.cost_kind = *run.cost;
        const auto targets = draw_targets(plant, s, faults0);
        Rng opt = make_stream(s.master_seed, "optimizer");
        Rng noise = make_stream(s.master_seed, "noise");
        const StaticRun result = run_static(plant, cal, targets, cfg, opt, noise, schedule);
        io::Series err{run.id, {}, {}};
        double k = 0;
        for (std::size_t t = 0; t < result.targets.size(); ++t) {
          const auto& tr = result.targets[t];
          std::ostringstream os;
          io::write_static_trace_csv(os, tr, targets[t].weights);
          emit("trace_" + run.id + "_t" + std::to_string(t) + ".csv", os.str());
          outcome.summary.push_back({s.name, run.id, std::to_string(t), run.label, tr.n_f, tr.final_error, tr.on_target,
                                     tr.limit_cycle, tr.switch_activity, tr.sim_time});
          for (const auto& r : tr.records) {
            err.x.push_back(k++);
            err.y.push_back(r.error_norm);
          }
          err.x.push_back(k);
          err.y.push_back(tr.final_error);
          err.x.push_back(std::nan(""));  // pen up between targets
          err.y.push_back(std::nan(""));
        }
        if (plot) emit("static_" + run.id + ".svg", io::svg_plot(s.name + " / " + run.id, "iteration", "weighted error", {err}));
      } else {
        DynamicConfig cfg = s.dynamic_config;
        if (run.control_period) cfg.control_period = *run.control_period;
        if (run.lambda) cfg.lambda = *run.lambda;
        if (cfg.weights.size() == 0) cfg.weights = make_target(s, Vector::Zero(plant.dofs())).weights;
        const Trajectory traj = build_trajectory(s.trajectory, plant);
        Rng noise = make_stream(s.master_seed, "noise");
        const DynamicTrace trace = run_dynamic(plant, cal, traj, cfg, s.duration, noise, schedule);
        std::ostringstream os;
        io::write_dynamic_trace_csv(os, trace);
        emit("trace_" + run.id + ".csv", os.str());
        std::size_t toggles = 0;
        for (const auto& smp : trace.samples) toggles += smp.switches;
        const auto& last = trace.samples.back();
        const TargetSpec tol = make_target(s, last.x_d);
        outcome.summary.push_back({s.name, run.id, "trajectory", run.label, trace.samples.size(),
                                   weighted_norm(last.x_e, cfg.weights), tol.within(last.x_e), false, toggles, last.t});
        if (plot) {
          io::Series want{"desired", {}, {}}, got{"actual", {}, {}}, err{"weighted |x_e|", {}, {}};
          for (const auto& smp : trace.samples) {
            want.x.push_back(smp.x_d[s.trajectory.dof_a]);
            want.y.push_back(smp.x_d[s.trajectory.dof_b]);
            got.x.push_back(smp.x[s.trajectory.dof_a]);
            got.y.push_back(smp.x[s.trajectory.dof_b]);
            err.x.push_back(smp.t);
            err.y.push_back(weighted_norm(smp.x_e, cfg.weights));
          }
          emit("path_" + run.id + ".svg", io::svg_plot(s.name + " / " + run.id, "DOF " + std::to_string(s.trajectory.dof_a),
                                                       "DOF " + std::to_string(s.trajectory.dof_b), {want, got}));
          emit("error_" + run.id + ".svg", io::svg_plot(s.name + " / " + run.id, "time (s)", "weighted error", {err}));
        }
      }
      timing << s.name << ',' << run.id << ',' << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << '\n';
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractError&) {
    throw;
  } catch (const std::exception& e) {
    outcome.abort_message = e.what();
    emit("abort.txt", std::string(e.what()) + "\n");
  }
  flush_summary();
  return outcome;
}

CostFunction make_bench_instance(std::size_t m, std::uint64_t seed, std::size_t instance, CostKind kind) {
  const std::uint64_t s = derive_seed(seed, "bench/" + std::to_string(m) + "/" + std::to_string(instance));
  const PlantModel plant = make_reference_plant("nonlinear" + std::to_string(m) + "x4", s);
  const InfluenceMatrix J{plant.displacement_influence(), InfluenceKind::displacement};
  Rng rng = make_stream(s, "instance");
  InputVector u(m), u_goal(m);
  for (std::size_t k = 0; k < m; ++k) u.set(k, bernoulli(rng, 0.5));
  for (std::size_t k = 0; k < m; ++k) u_goal.set(k, bernoulli(rng, 0.5));
  const StateVector x = steady_state_exact(plant, u, {}, {});
  TargetSpec target;
  target.x_d = steady_state_exact(plant, u_goal, {}, {});
  target.tolerance = Vector::Constant(4, 0.5);
  target.weights = Vector::Zero(4);
  target.weights.head(2).setOnes();
  const StateVector x_e = state_error(target.x_d, x);
  const InfluenceMatrix Jt = updated_jacobian(J, u, x);
  return make_cost(kind, Jt, x_e, DispersionModel::shared(plant.params().dispersion_target, m), target, 0.2);
}

SearchResult brute_force_search(const CostFunction& cost, std::size_t m) {
  if (m > 30) throw ContractError("brute_force_search: m too large");
  SearchResult best;
  best.best_b = SwitchVector(m);
  best.best_cost = std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << m); ++code) {
    SwitchVector b(m);
    for (std::size_t k = 0; k < m; ++k) b.set(k, (code >> k) & 1U);
    const double c = cost(b);
    ++best.evaluations;
    if (better_candidate(c, b, best.best_cost, best.best_b)) {
      best.best_cost = c;
      best.best_b = b;
    }
  }
  return best;
}

std::vector<BenchRow> bench_optimizer(const std::vector<std::size_t>& sizes, std::size_t instances, std::uint64_t seed,
                                      bool oracle, CostKind kind) {
  for (auto m : sizes) {
    if (m < 1 || m > 64) throw ConfigError("bench: actuator count must be in [1, 64]");
    if (oracle && m > kOracleMaxActuators)
      throw ConfigError("bench: m = " + std::to_string(m) + " exceeds the brute-force cap of " +
                        std::to_string(kOracleMaxActuators) + "; pass --no-oracle");
  }
  std::vector<BenchRow> rows;
  for (auto m : sizes) {
    for (std::size_t i = 0; i < instances; ++i) {
      const CostFunction cost = make_bench_instance(m, seed, i, kind);
      Rng rng = make_stream(seed, "bench-optimizer/" + std::to_string(m) + "/" + std::to_string(i));
      BenchRow row;
      char id[32];
      std::snprintf(id, sizeof id, "m%zu-%04zu", m, i);
      row.instance = id;
      row.m = m;
      auto t0 = std::chrono::steady_clock::now();
      const SearchResult r = combined_search(cost, m, GAParams{}, rng);
      row.search_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.stage = r.source;
      row.evaluations = r.evaluations;
      row.best_cost = r.best_cost;
      if (oracle) {
        t0 = std::chrono::steady_clock::now();
        row.oracle_cost = brute_force_search(cost, m).best_cost;
        row.oracle_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "instance,m,stage,evaluations,best_cost,oracle_cost,gap\n";
  for (const auto& r : rows) {
    os << r.instance << ',' << r.m << ',' << to_string(r.stage) << ',' << r.evaluations << ',' << io::fmt(r.best_cost) << ',';
    if (r.oracle_cost) {
      const double gap = *r.oracle_cost > 0 ? r.best_cost / *r.oracle_cost - 1.0 : r.best_cost - *r.oracle_cost;
      os << io::fmt(*r.oracle_cost) << ',' << io::fmt(gap);
    } else {
      os << ',';
    }
    os << '\n';
  }
}

void write_bench_timing_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "instance,m,search_seconds,oracle_seconds\n";
  for (const auto& r : rows)
    os << r.instance << ',' << r.m << ',' << r.search_seconds << ',' << (r.oracle_cost ? std::to_string(r.oracle_seconds) : "")
       << '\n';
}

}  // namespace binctl
