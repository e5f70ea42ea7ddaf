// Start-up identification of influence vectors and characterization of the
// approximation-error dispersion.
#pragma once

#include <optional>
#include <vector>

#include "binctl/plant.hpp"
#include "binctl/stats.hpp"
#include "binctl/types.hpp"

namespace binctl {

struct Identification {
  StateVector x0;     ///< mean all-OFF readout
  InfluenceMatrix J;  ///< displacement influence vectors
};

/// Activates each actuator alone, `repeats` times, and averages the readouts.
Identification identify_influence_vectors(const PlantModel& plant, int repeats, Rng& rng);

/// f_k = K d_k for every column.
InfluenceMatrix force_from_displacement(const InfluenceMatrix& J, const Matrix& K);

enum class TrialBase { random, all_off };

struct DispersionSample {
  std::size_t trial = 0;
  std::size_t switches = 0;
  SwitchVector b;
  std::size_t on_before = 0;
  double base_distance = 0.0;
  Vector eps_a;
};

/// Statistics of |eps_a| for one switching count.
struct ResidualBin {
  std::size_t switches = 0;
  std::size_t count = 0;
  Vector mean_abs;
  Vector rms;
};

struct DispersionResult {
  DispersionModel model;
  Vector fitted_sigma;         ///< shared sqrt(s_n) law per DOF
  Matrix per_actuator_sigma;   ///< n x m estimates
  bool per_actuator_mode = false;
  std::vector<stats::Correlation> vs_switches;   ///< per DOF
  std::vector<stats::Correlation> vs_distance;   ///< per DOF
  std::vector<stats::Correlation> vs_on_count;   ///< per DOF
  std::vector<ResidualBin> bins;
  std::vector<DispersionSample> samples;
};

/// Random corrections from random (or all-OFF) base inputs; eps_a is the gap
/// between the measured move and the superposition prediction.
DispersionResult characterize_dispersion(const PlantModel& plant, const StateVector& x0, const InfluenceMatrix& J,
                                         int trials, std::size_t max_switches, Rng& rng,
                                         TrialBase base = TrialBase::random);

struct CalibrationOptions {
  int repeats = 1;
  int trials = 100;
  std::size_t max_switches = 10;
  TrialBase base = TrialBase::random;
  bool with_force = true;
};

struct CalibrationReport {
  InfluenceMatrix J;
  std::optional<InfluenceMatrix> F;
  StateVector x0;
  DispersionModel dispersion;
  std::size_t sample_count = 0;
  std::vector<ResidualBin> residual_stats;
  Vector fitted_sigma;
  bool per_actuator_mode = false;
  std::vector<stats::Correlation> vs_switches;
  std::vector<stats::Correlation> vs_distance;
  std::vector<stats::Correlation> vs_on_count;
  std::vector<DispersionSample> samples;
};

/// Identification followed by dispersion characterization. The force map uses
/// the plant's stiffness, which is assumed known.
CalibrationReport calibrate(const PlantModel& plant, const CalibrationOptions& options, Rng& rng);

/// Random switch vector with exactly `count` ones.
SwitchVector random_switch(std::size_t m, std::size_t count, Rng& rng);

}  // namespace binctl
