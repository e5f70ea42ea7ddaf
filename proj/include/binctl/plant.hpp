// Ground-truth simulated robot used in place of hardware.
//
// Steady state:   x = x_rest + K^-1 (A u + f_ext) + gamma * q(u) + noise
// Dynamics:       M x'' + C x' + K (x - x_rest) = A u + f_ext + gamma * K q(u)
//
// q_i(u) = sum_{j != l} Q_i(j,l) u_j u_l is pure cross-coupling, so single
// actuator responses are exactly K^-1 f_k while multi-actuator moves deviate
// from superposition by an amount that grows with the number of switches.
#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "binctl/rng.hpp"
#include "binctl/types.hpp"

namespace binctl {

struct PlantParams {
  std::string name;
  Matrix A;                     ///< n x m true force influence columns
  Matrix K;                     ///< n x n stiffness (SPD)
  Matrix C;                     ///< n x n damping (SPD)
  Matrix M;                     ///< n x n inertia (SPD)
  double gamma = 0.0;           ///< cross-coupling gain
  std::vector<Matrix> coupling; ///< n symmetric m x m matrices (diagonal ignored); empty when gamma = 0
  Vector noise_sigma;           ///< per-DOF readout noise std
  StateVector x_rest;           ///< all-OFF equilibrium
  bool isotropic = false;       ///< displacement vectors may stand in for force vectors
  Vector dispersion_target;     ///< tuned sqrt(s_n) dispersion law (empty when untuned)
};

/// Validated, immutable plant with cached factorizations.
class PlantModel {
 public:
  explicit PlantModel(PlantParams params);

  const PlantParams& params() const { return p_; }
  Eigen::Index dofs() const { return p_.K.rows(); }
  Eigen::Index actuators() const { return p_.A.cols(); }

  /// Ground-truth displacement influence K^-1 A.
  const Matrix& displacement_influence() const { return d_; }
  /// Solves K y = f.
  Vector compliance(const Vector& f) const;
  /// gamma * q(u) for an effective input.
  Vector coupling_term(const InputVector& u_eff) const;
  /// Largest stable integration step (exclusive bound).
  double max_stable_dt() const { return max_dt_; }
  /// Spectral radius of the unforced one-step map at step h.
  double step_spectral_radius(double h) const;

 private:
  PlantParams p_;
  Eigen::LLT<Matrix> k_llt_;
  Matrix d_;
  double max_dt_ = 0.0;
};

struct FaultState {
  std::set<std::size_t> stuck_on;
  std::set<std::size_t> stuck_off;

  void validate(std::size_t m) const;
  bool empty() const { return stuck_on.empty() && stuck_off.empty(); }
  bool is_faulty(std::size_t k) const { return stuck_on.count(k) || stuck_off.count(k); }
};

struct LoadState {
  Vector f_ext;  ///< empty means zero load

  Vector force(Eigen::Index n) const { return f_ext.size() == 0 ? Vector(Vector::Zero(n)) : f_ext; }
};

/// Applies stuck-ON / stuck-OFF faults to the commanded input.
InputVector effective_input(const InputVector& u, const FaultState& faults);

/// Noise-free steady state for a commanded input.
StateVector steady_state_exact(const PlantModel& plant, const InputVector& u, const FaultState& faults,
                               const LoadState& load);

/// Steady-state readout; readout noise is drawn from rng.
StateVector steady_state(const PlantModel& plant, const InputVector& u, const FaultState& faults,
                         const LoadState& load, Rng& rng);

/// Adds per-DOF readout noise to a true state.
StateVector read_with_noise(const PlantModel& plant, const StateVector& x_true, Rng& rng);

struct MotionState {
  StateVector x;
  Vector v;
};

/// One semi-implicit step: velocity first (stiffness explicit, damping at the
/// velocity midpoint), then position with the new velocity.
MotionState step(const PlantModel& plant, const MotionState& s, const InputVector& u, const FaultState& faults,
                 const LoadState& load, double dt);

/// Modified energy 1/2 v'Mv + 1/2 y'Ky - dt/2 v'Ky (y = x - x_rest); never
/// increases across unforced steps of the scheme above.
double shadow_energy(const PlantModel& plant, const MotionState& s, double dt);

/// Named presets: linear20x4, nonlinear20x4, and linear<m>x<n>,
/// nonlinear<m>x<n>, iso<m>x<n> for small oracle plants.
PlantModel make_reference_plant(const std::string& preset, std::uint64_t seed);

std::vector<std::string> plant_preset_names();

/// Per-DOF scale used by the presets (mm for translations, degrees for rotations).
Vector preset_dof_scale(Eigen::Index n);

}  // namespace binctl
