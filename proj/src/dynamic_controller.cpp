#include "binctl/dynamic_controller.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

#include "binctl/core.hpp"
#include "binctl/stats.hpp"

namespace binctl {

void DynamicConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("dynamic: lambda must be > 0");
  if (!(control_period > 0.0)) throw ConfigError("dynamic: control_period must be > 0");
  if (!(deadband >= 0.0)) throw ConfigError("dynamic: deadband must be >= 0");
  if (derivative_window != 1 && derivative_window != 3) throw ConfigError("dynamic: derivative_window must be 1 or 3");
  if (!(sim_dt > 0.0)) throw ConfigError("dynamic: sim_dt must be > 0");
  const double ratio = control_period / sim_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 || std::round(ratio) < 1.0)
    throw ConfigError("dynamic: control_period must be an integer multiple of sim_dt");
  if (weights.size() != 0 && ((weights.array() < 0.0).any() || !(weights.array() > 0.0).any()))
    throw ConfigError("dynamic: weights must be >= 0 with at least one positive");
}

Trajectory Trajectory::hold(const StateVector& x_d) {
  Trajectory t;
  t.kind_ = Kind::hold;
  t.center_ = x_d;
  return t;
}

Trajectory Trajectory::polyline(std::vector<double> times, std::vector<StateVector> points) {
  if (times.empty() || times.size() != points.size()) throw ContractError("polyline: need matching times/points");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ContractError("polyline: times must be increasing");
    if (points[i].size() != points[0].size()) throw ContractError("polyline: point dimension mismatch");
  }
  Trajectory t;
  t.kind_ = Kind::polyline;
  t.center_ = points[0];
  t.times_ = std::move(times);
  t.points_ = std::move(points);
  return t;
}

Trajectory Trajectory::circle(const StateVector& center, double radius, double period, Eigen::Index dof_a,
                              Eigen::Index dof_b, double phase) {
  if (!(period > 0.0) || radius < 0.0) throw ContractError("circle: need radius >= 0 and period > 0");
  if (dof_a < 0 || dof_b < 0 || dof_a >= center.size() || dof_b >= center.size() || dof_a == dof_b)
    throw ContractError("circle: invalid DOF pair");
  Trajectory t;
  t.kind_ = Kind::circle;
  t.center_ = center;
  t.radius_ = radius;
  t.period_ = period;
  t.phase_ = phase;
  t.a_ = dof_a;
  t.b_ = dof_b;
  return t;
}

Trajectory::Sample Trajectory::sample(double t) const {
  Sample s{center_, Vector::Zero(center_.size())};
  switch (kind_) {
    case Kind::hold:
      break;
    case Kind::polyline: {
      if (t <= times_.front()) {
        s.x_d = points_.front();
        break;
      }
      if (t >= times_.back()) {
        s.x_d = points_.back();
        break;
      }
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
      const double span = times_[i + 1] - times_[i];
      const double w = (t - times_[i]) / span;
      s.x_d = (1.0 - w) * points_[i] + w * points_[i + 1];
      s.xdot_d = (points_[i + 1] - points_[i]) / span;
      break;
    }
    case Kind::circle: {
      const double omega = 2.0 * std::numbers::pi / period_;
      const double th = phase_ + omega * t;
      s.x_d[a_] += radius_ * std::cos(th);
      s.x_d[b_] += radius_ * std::sin(th);
      s.xdot_d[a_] = -radius_ * omega * std::sin(th);
      s.xdot_d[b_] = radius_ * omega * std::cos(th);
      break;
    }
  }
  return s;
}

Vector composite_error(const Vector& x_e, const Vector& x_e_dot, double lambda) {
  if (x_e.size() != x_e_dot.size()) throw ContractError("composite_error: dimension mismatch");
  return x_e_dot + lambda * x_e;
}

namespace {

double weighted_dot(const Vector& s, const Vector& f, const Vector& w) {
  return (w.array() * s.array() * f.array()).sum();
}

}  // namespace

bool recruit(const Vector& s, const Vector& f_k, double deadband, const Vector& weights) {
  return weighted_dot(s, f_k, weights) > deadband;
}

BangBangResult bang_bang(const Vector& s, const InfluenceMatrix& F, const InputVector& u, double deadband,
                         const Vector& weights, const std::set<std::size_t>& excluded) {
  const auto m = static_cast<std::size_t>(F.actuators());
  if (u.size() != m) throw ContractError("bang_bang: input length mismatch");
  if (s.size() != F.dofs() || weights.size() != F.dofs()) throw ContractError("bang_bang: dimension mismatch");

  BangBangResult r{SwitchVector(m), InputVector(m)};
  for (std::size_t k = 0; k < m; ++k) {
    const Vector f_k = F.columns.col(static_cast<Eigen::Index>(k));
    if (excluded.count(k)) {
      r.b.set(k, u[k]);  // release if ON, never recruit
      r.u_next.set(k, false);
      continue;
    }
    const double dot = weighted_dot(s, update_influence(f_k, u[k]), weights);
    r.b.set(k, dot > deadband);
    r.u_next.set(k, u[k] != r.b[k]);
    if (std::abs(weighted_dot(s, f_k, weights)) > deadband && r.u_next[k] != recruit(s, f_k, deadband, weights))
      throw std::logic_error("bang_bang: toggle form and direct form disagree for actuator " + std::to_string(k));
  }
  return r;
}

DynamicTrace run_dynamic(const PlantModel& plant, const CalibrationReport& calibration, const Trajectory& trajectory,
                         const DynamicConfig& config, double duration, Rng& noise_rng, const Schedule& schedule) {
  config.validate();
  const Eigen::Index n = plant.dofs();
  const auto m = static_cast<std::size_t>(plant.actuators());
  if (trajectory.dofs() != n) throw ContractError("run_dynamic: trajectory dimension mismatch");
  if (calibration.J.dofs() != n || calibration.J.actuators() != plant.actuators())
    throw ContractError("run_dynamic: calibration does not match plant");
  schedule.validate(m, n);

  InfluenceMatrix F;
  if (config.use_displacement_vectors) {
    if (!plant.params().isotropic)
      throw ConfigError("run_dynamic: displacement vectors may only replace force vectors on an isotropic plant");
    F = calibration.J;
  } else if (calibration.F) {
    F = *calibration.F;
  } else {
    throw ConfigError("run_dynamic: calibration has no force influence vectors");
  }
  const Vector weights = config.weights.size() ? config.weights : Vector(Vector::Ones(n));
  if (weights.size() != n) throw ConfigError("run_dynamic: weights dimension mismatch");

  const int substeps = static_cast<int>(std::lround(config.control_period / config.sim_dt));
  const auto ticks = static_cast<std::size_t>(std::floor(duration / config.control_period + 1e-9)) + 1;

  FaultState faults;
  LoadState load;
  std::set<std::size_t> excluded = config.excluded_actuators;
  ScheduleCursor cursor(schedule);

  MotionState state{plant.params().x_rest, Vector::Zero(n)};
  InputVector u(m);
  std::deque<Vector> history;  // recent x_e, newest last

  DynamicTrace trace;
  trace.weights = weights;
  trace.samples.reserve(ticks);
  for (std::size_t i = 0; i < ticks; ++i) {
    const double t = static_cast<double>(i) * config.control_period;
    cursor.advance(t, faults, load, excluded);
    const StateVector x = read_with_noise(plant, state.x, noise_rng);
    if (!x.allFinite()) throw RuntimeAbort("run_dynamic: non-finite state at t=" + std::to_string(t));
    const auto target = trajectory.sample(t);
    const StateVector x_e = state_error(target.x_d, x);

    history.push_back(x_e);
    if (history.size() > 3) history.pop_front();
    Vector x_e_dot = Vector::Zero(n);
    if (config.derivative_window == 3 && history.size() == 3) {
      x_e_dot = (history[2] - history[0]) / (2.0 * config.control_period);
    } else if (history.size() >= 2) {
      x_e_dot = (history.back() - history[history.size() - 2]) / config.control_period;
    }

    const Vector s = composite_error(x_e, x_e_dot, config.lambda);
    const BangBangResult bb = bang_bang(s, F, u, config.deadband, weights, excluded);
    u = bb.u_next;

    trace.samples.push_back({t, x, target.x_d, x_e, s, u, bb.b.count()});
    for (int k = 0; k < substeps; ++k) state = step(plant, state, u, faults, load, config.sim_dt);
  }
  return trace;
}

double chattering_amplitude(const DynamicTrace& trace, double t_from) {
  if (trace.samples.empty()) return 0.0;
  Vector mean = Vector::Zero(trace.samples.front().x_e.size());
  std::size_t count = 0;
  for (const auto& s : trace.samples)
    if (s.t >= t_from) {
      mean += s.x_e;
      ++count;
    }
  if (count == 0) return 0.0;
  mean /= static_cast<double>(count);
  double acc = 0.0;
  for (const auto& s : trace.samples)
    if (s.t >= t_from) acc += (trace.weights.array() * (s.x_e - mean).array().square()).sum();
  return std::sqrt(acc / static_cast<double>(count));
}

double fit_decay_rate(const DynamicTrace& trace, double t_from, double t_to, double floor) {
  std::vector<double> ts, logs;
  for (const auto& s : trace.samples) {
    if (s.t < t_from || s.t > t_to) continue;
    const double e = std::sqrt((trace.weights.array() * s.x_e.array().square()).sum());
    if (e <= floor) continue;
    ts.push_back(s.t);
    logs.push_back(std::log(e));
  }
  if (ts.size() < 3) throw ContractError("fit_decay_rate: fewer than 3 samples above the floor");
  return -stats::least_squares_line(ts, logs).slope;
}

double sliding_onset(const DynamicTrace& trace) {
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto& a = trace.samples[i - 1].s;
    const auto& b = trace.samples[i].s;
    if ((trace.weights.array() * a.array() * b.array()).sum() <= 0.0) return trace.samples[i].t;
  }
  return trace.samples.empty() ? 0.0 : trace.samples.back().t;
}

}  // namespace binctl
