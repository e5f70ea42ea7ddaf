// Iterative point-to-point controller: read the steady state, plan a switch
// vector against the influence-vector prediction, toggle, wait, repeat.
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "binctl/calibration.hpp"
#include "binctl/core.hpp"
#include "binctl/optimizer.hpp"
#include "binctl/schedule.hpp"

namespace binctl {

enum class CostKind { residual, penalized, probabilistic };
enum class StopRule { tolerance_met, convergence_probability };

std::string to_string(CostKind kind);
CostKind parse_cost_kind(const std::string& s);
std::string to_string(StopRule rule);
StopRule parse_stop_rule(const std::string& s);

struct StaticConfig {
  CostKind cost_kind = CostKind::penalized;
  double penalty_beta = 0.2;
  int max_iterations = 15;
  StopRule stop_rule = StopRule::tolerance_met;
  double p_conv_min = 0.5;
  double settle_time = 3.0;                 ///< simulated seconds per iteration
  std::set<std::size_t> excluded_actuators; ///< known-faulty actuators never recruited
  GAParams ga;
  Linearizer linearizer;                    ///< identity when empty
  double probability_cost_cap = 1e12;
  int mc_samples = 100'000;
  /// When > 0 every target gets exactly this many iterations and on-target
  /// iterations hold position instead of ending the target.
  int hold_iterations = 0;

  void validate() const;
};

/// sqrt(sum w_i v_i^2).
double weighted_norm(const Vector& v, const Vector& weights);

double cost_residual(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                     const Vector& weights);

double cost_penalized(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                      const Vector& weights, double beta);

/// Probability that the next state lands in the tolerance box on every
/// weighted DOF, with independent normal approximation errors.
double on_target_probability(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                             const DispersionModel& dispersion, const TargetSpec& target);

/// P(||eps_r + eps_a||_w < x_e_norm) with eps_a,i ~ N(0, sigma_i^2) on the
/// weighted DOFs. Closed form (noncentral chi-squared) when sqrt(w_i) sigma_i
/// is the same on every weighted DOF, seeded Monte Carlo otherwise.
double convergence_probability(const StateVector& eps_r, const Vector& sigma, double x_e_norm, const Vector& weights,
                               Rng& mc_rng, int mc_samples = 100'000);

CostFunction make_cost(CostKind kind, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                       const DispersionModel& dispersion, const TargetSpec& target, double beta, double cap = 1e12);

struct PlanResult {
  SwitchVector b;
  SearchResult search;
  StateVector predicted;  ///< a = J~ b
  StateVector eps_r;
  Vector sigma;           ///< predicted dispersion for b
  double cost = 0.0;
  std::string note;
};

PlanResult plan_correction(const StateVector& x_e, const InfluenceMatrix& J_tilde, const StaticConfig& config,
                           const DispersionModel& dispersion, const TargetSpec& target, Rng& rng);

struct IterationRecord {
  std::size_t index = 0;
  StateVector x;
  StateVector x_e;
  SwitchVector b;
  StateVector a;
  StateVector eps_r;
  Vector sigma;
  StateVector eps_a;     ///< realized x(n+1) - x(n) - a
  double cost = 0.0;
  std::uint64_t evaluations = 0;
  bool on_target = false;
  double error_norm = 0.0;  ///< weighted ||x_e||
  double p_conv = 1.0;      ///< only evaluated under the convergence-probability rule
  double sim_time = 0.0;    ///< simulated clock after the settle delay
};

struct TargetResult {
  std::size_t target_id = 0;
  std::vector<IterationRecord> records;
  std::size_t n_f = 0;           ///< corrections applied
  double final_error = 0.0;      ///< weighted ||x_e|| at the end
  StateVector final_x;
  bool on_target = false;
  bool limit_cycle = false;
  std::size_t switch_activity = 0;  ///< total toggles
  double sim_time = 0.0;
};

struct StaticRun {
  std::vector<TargetResult> targets;
  InputVector final_u;
};

/// Runs the targets in sequence from the all-OFF state. Schedule times are
/// global iteration indices (event at k fires before the k-th post-correction
/// readout; at 0 fires before the first readout).
StaticRun run_static(const PlantModel& plant, const CalibrationReport& calibration,
                     const std::vector<TargetSpec>& targets, const StaticConfig& config, Rng& optimizer_rng,
                     Rng& noise_rng, const Schedule& schedule = {});

}  // namespace binctl
