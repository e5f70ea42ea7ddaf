// Bang-bang sliding-mode motion controller. Each actuator is recruited
// independently when its force influence vector points along the composite
// error s = de/dt + lambda * e.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "binctl/calibration.hpp"
#include "binctl/schedule.hpp"

namespace binctl {

struct DynamicConfig {
  double lambda = 1.0;           ///< 1/s, inverse time constant of the sliding surface
  double control_period = 0.01;  ///< s
  double deadband = 0.0;         ///< dot-product threshold
  bool use_displacement_vectors = false;
  int derivative_window = 1;     ///< 1: two-point backward difference, 3: slope over three samples
  double sim_dt = 0.001;         ///< plant integration step; must divide control_period
  Vector weights;                ///< per-DOF weights; empty means all ones
  std::set<std::size_t> excluded_actuators;

  void validate() const;
};

/// Desired state and its time derivative sampled at control ticks.
class Trajectory {
 public:
  enum class Kind { hold, polyline, circle };

  static Trajectory hold(const StateVector& x_d);
  /// Piecewise-linear through (times[i], points[i]); holds the end points.
  static Trajectory polyline(std::vector<double> times, std::vector<StateVector> points);
  /// Circle in the (dof_a, dof_b) plane around `center`, starting at angle `phase`.
  static Trajectory circle(const StateVector& center, double radius, double period, Eigen::Index dof_a,
                           Eigen::Index dof_b, double phase = 0.0);

  Kind kind() const { return kind_; }
  Eigen::Index dofs() const { return center_.size(); }

  struct Sample {
    StateVector x_d;
    Vector xdot_d;
  };
  Sample sample(double t) const;

 private:
  Kind kind_ = Kind::hold;
  StateVector center_;
  std::vector<double> times_;
  std::vector<StateVector> points_;
  double radius_ = 0.0, period_ = 1.0, phase_ = 0.0;
  Eigen::Index a_ = 0, b_ = 1;
};

/// s = x_e_dot + lambda * x_e.
Vector composite_error(const Vector& x_e, const Vector& x_e_dot, double lambda);

/// Direct per-actuator rule: ON iff (s . f_k)_w > deadband. Depends on nothing
/// but its arguments.
bool recruit(const Vector& s, const Vector& f_k, double deadband, const Vector& weights);

struct BangBangResult {
  SwitchVector b;
  InputVector u_next;
};

/// Toggle form on updated force vectors: b_k = 1 iff (s . f~_k)_w > deadband,
/// u_next = b XOR u. Outside the deadband this matches `recruit` for every
/// actuator, which is checked on each call (std::logic_error on mismatch).
/// Inside the band an ON actuator keeps its state. Excluded actuators are
/// forced OFF.
BangBangResult bang_bang(const Vector& s, const InfluenceMatrix& F, const InputVector& u, double deadband,
                         const Vector& weights, const std::set<std::size_t>& excluded = {});

struct DynamicSample {
  double t = 0.0;
  StateVector x;      ///< readout used by the controller
  StateVector x_d;
  StateVector x_e;
  Vector s;
  InputVector u;      ///< command held over the following period
  std::size_t switches = 0;
};

struct DynamicTrace {
  std::vector<DynamicSample> samples;
  Vector weights;
};

/// Closed-loop run from rest (all OFF). Schedule times are in seconds.
DynamicTrace run_dynamic(const PlantModel& plant, const CalibrationReport& calibration, const Trajectory& trajectory,
                         const DynamicConfig& config, double duration, Rng& noise_rng, const Schedule& schedule = {});

/// RMS of the weighted error about its mean over [t_from, end]; the steady
/// offset is excluded so only the oscillation counts.
double chattering_amplitude(const DynamicTrace& trace, double t_from);

/// Fitted exponential decay rate of the weighted error norm over samples in
/// [t_from, t_to] whose norm exceeds `floor`.
double fit_decay_rate(const DynamicTrace& trace, double t_from, double t_to, double floor);

/// First tick after t = 0 at which s reverses direction (s_prev . s <= 0).
double sliding_onset(const DynamicTrace& trace);

}  // namespace binctl
