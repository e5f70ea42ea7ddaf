#include <doctest.h>

#include <cmath>

#include "binctl/calibration.hpp"

using namespace binctl;

namespace {

PlantModel without_noise(const PlantModel& plant) {
  PlantParams p = plant.params();
  p.noise_sigma = Vector::Zero(plant.dofs());
  return PlantModel(p);
}

InputVector as_input(const SwitchVector& b) { return InputVector(b.raw()); }

}  // namespace

TEST_CASE("identification on a noise-free linear plant recovers K^-1 A and the rest state") {
  const PlantModel plant = make_reference_plant("linear20x4", 3);
  Rng rng(1);
  CalibrationOptions opt;
  const CalibrationReport r = calibrate(plant, opt, rng);
  const Matrix oracle = plant.params().K.ldlt().solve(plant.params().A);
  CHECK((r.J.columns - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((r.x0 - plant.params().x_rest).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(r.F.has_value());
  CHECK((r.F->columns - plant.params().A).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.F->kind == InfluenceKind::force);
  CHECK(r.fitted_sigma.cwiseAbs().maxCoeff() < 1e-9);
  CHECK_FALSE(r.per_actuator_mode);
}

TEST_CASE("approximation error from the all-OFF base is exactly the coupling of the switched set") {
  const PlantModel plant = without_noise(make_reference_plant("nonlinear12x4", 2));
  Rng rng(4);
  const Identification id = identify_influence_vectors(plant, 1, rng);
  const DispersionResult d = characterize_dispersion(plant, id.x0, id.J, 60, 8, rng, TrialBase::all_off);
  REQUIRE(d.samples.size() == 60);
  for (const auto& s : d.samples) {
    REQUIRE(s.on_before == 0);
    REQUIRE(s.b.count() == s.switches);
    REQUIRE((s.eps_a - plant.coupling_term(as_input(s.b))).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("single switches from rest carry no approximation error") {
  const PlantModel plant = without_noise(make_reference_plant("nonlinear12x4", 2));
  Rng rng(5);
  const Identification id = identify_influence_vectors(plant, 1, rng);
  const DispersionResult d = characterize_dispersion(plant, id.x0, id.J, 40, 1, rng, TrialBase::all_off);
  for (const auto& s : d.samples) REQUIRE(s.eps_a.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("dispersion fit on the nonlinear preset tracks the tuned law") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  Rng rng(6);
  CalibrationOptions opt;
  opt.trials = 400;
  const CalibrationReport r = calibrate(plant, opt, rng);
  const Vector& target = plant.params().dispersion_target;
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(r.fitted_sigma[i] == doctest::Approx(target[i]).epsilon(0.3));
    CHECK(r.vs_switches[static_cast<std::size_t>(i)].rho > 0.0);
    CHECK(r.vs_switches[static_cast<std::size_t>(i)].p_positive < 0.01);
  }
  // Bin RMS should grow with the switch count.
  REQUIRE(r.residual_stats.size() >= 2);
  CHECK(r.residual_stats.back().rms[0] > r.residual_stats.front().rms[0]);
}

TEST_CASE("repeated identification averages readout noise down") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  const Matrix& truth = plant.displacement_influence();
  double err1 = 0.0, err16 = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    Rng a(100 + rep), b(200 + rep);
    err1 += (identify_influence_vectors(plant, 1, a).J.columns - truth).squaredNorm();
    err16 += (identify_influence_vectors(plant, 16, b).J.columns - truth).squaredNorm();
  }
  // Variance scales as 1/repeats; allow generous slack around the factor 16.
  CHECK(err1 / err16 > 8.0);
  CHECK(err1 / err16 < 32.0);
}

TEST_CASE("calibration is reproducible from the seed") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  Rng a(9), b(9);
  const CalibrationReport ra = calibrate(plant, {}, a);
  const CalibrationReport rb = calibrate(plant, {}, b);
  CHECK(ra.J.columns == rb.J.columns);
  CHECK(ra.fitted_sigma == rb.fitted_sigma);
}

TEST_CASE("random_switch picks exactly count distinct actuators, uniformly") {
  Rng rng(12);
  std::vector<int> hits(10, 0);
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    const SwitchVector b = random_switch(10, 3, rng);
    REQUIRE(b.count() == 3);
    for (std::size_t k = 0; k < 10; ++k) hits[k] += b[k];
  }
  // Each position is chosen with probability 3/10.
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - 0.3 * n) * (h - 0.3 * n) / (0.3 * n);
  CHECK(chi2 < 27.9);  // chi-squared(9) at p = 0.001
  CHECK_THROWS_AS(random_switch(4, 5, rng), ContractError);
}

TEST_CASE("calibration input validation") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng rng(1);
  const Identification id = identify_influence_vectors(plant, 1, rng);
  CHECK_THROWS_AS(characterize_dispersion(plant, id.x0, id.J, 10, 5, rng), ContractError);
  CHECK_THROWS_AS(characterize_dispersion(plant, id.x0, id.J, 50, 0, rng), ContractError);
  CHECK_THROWS_AS(identify_influence_vectors(plant, 0, rng), ContractError);
  Matrix bad = Matrix::Identity(4, 4);
  bad(3, 3) = 0.0;
  CHECK_THROWS_AS(force_from_displacement(id.J, bad), ConfigError);
}
