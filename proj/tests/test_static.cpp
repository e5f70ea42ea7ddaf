#include <doctest.h>

#include <cmath>

#include "binctl/static_controller.hpp"

using namespace binctl;

namespace {

TargetSpec make_target(const StateVector& x_d, double tol = 0.5) {
  TargetSpec t;
  t.x_d = x_d;
  t.tolerance = Vector::Constant(x_d.size(), tol);
  t.weights = Vector::Zero(x_d.size());
  t.weights.head(std::min<Eigen::Index>(2, x_d.size())).setOnes();
  return t;
}

InfluenceMatrix random_jacobian(Eigen::Index n, Eigen::Index m, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  InfluenceMatrix J{Matrix(n, m), InfluenceKind::displacement};
  for (Eigen::Index i = 0; i < J.columns.size(); ++i) J.columns.data()[i] = g(rng);
  return J;
}

// Reachable target: noise-free steady state of a random input.
StateVector reachable(const PlantModel& plant, Rng& rng) {
  InputVector u(static_cast<std::size_t>(plant.actuators()));
  for (std::size_t k = 0; k < u.size(); ++k) u.set(k, bernoulli(rng, 0.5));
  return steady_state_exact(plant, u, {}, {});
}

}  // namespace

TEST_CASE("cost functions on a hand-worked example") {
  Matrix cols(2, 3);
  cols << 1, 0, 2, 0, 1, 2;
  const InfluenceMatrix J{cols, InfluenceKind::displacement};
  StateVector x_e(2);
  x_e << 1.0, 3.0;
  Vector w(2);
  w << 1.0, 4.0;
  // b = 110: residual (0, -2), weighted norm sqrt(4 * 4) = 4.
  const SwitchVector b{1, 1, 0};
  CHECK(cost_residual(b, J, x_e, w) == doctest::Approx(4.0));
  CHECK(cost_penalized(b, J, x_e, w, 0.2) == doctest::Approx(4.4));
  CHECK(weighted_norm(x_e, w) == doctest::Approx(std::sqrt(1.0 + 36.0)));
}

TEST_CASE("penalized cost adds beta per switch exactly") {
  Rng rng(1);
  const InfluenceMatrix J = random_jacobian(4, 10, rng);
  const StateVector x_e = random_jacobian(4, 1, rng).columns.col(0);
  const Vector w = Vector::Ones(4);
  for (std::uint64_t code = 0; code < 1024; code += 7) {
    SwitchVector b(10);
    for (std::size_t k = 0; k < 10; ++k) b.set(k, (code >> k) & 1U);
    REQUIRE(cost_penalized(b, J, x_e, w, 0.2) - cost_residual(b, J, x_e, w) ==
            doctest::Approx(0.2 * static_cast<double>(b.count())));
  }
}

TEST_CASE("on-target probability matches Monte Carlo over the dispersion model") {
  Rng rng(2);
  const InfluenceMatrix J = random_jacobian(4, 8, rng);
  Vector sigma(4);
  sigma << 0.35, 0.3, 0.02, 0.03;
  const DispersionModel disp = DispersionModel::shared(sigma, 8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    SwitchVector b(8);
    for (std::size_t k = 0; k < 8; ++k) b.set(k, bernoulli(rng, 0.4));
    const StateVector pred = superpose(J, b);
    StateVector x_e = pred;
    x_e[0] += 0.3 * g(rng);
    x_e[1] += 0.3 * g(rng);
    const TargetSpec target = make_target(Vector::Zero(4), 0.5);
    const Vector s = disp.sigma(b);
    int hit = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      bool in = true;
      for (Eigen::Index d = 0; d < 2; ++d) in = in && std::abs(pred[d] + s[d] * g(rng) - x_e[d]) < 0.5;
      hit += in;
    }
    CHECK(std::abs(on_target_probability(b, J, x_e, disp, target) - hit / double(n)) < 0.01);
  }
}

TEST_CASE("probabilistic cost is the reciprocal probability, capped") {
  Rng rng(3);
  const InfluenceMatrix J = random_jacobian(2, 4, rng);
  const DispersionModel disp = DispersionModel::shared(Vector::Constant(2, 0.3), 4);
  const TargetSpec target = make_target(Vector::Zero(2));
  StateVector x_e(2);
  x_e << 0.2, -0.1;
  const CostFunction c = make_cost(CostKind::probabilistic, J, x_e, disp, target, 0.2, 1e6);
  const SwitchVector none(4);
  CHECK(c(none) == doctest::Approx(1.0 / on_target_probability(none, J, x_e, disp, target)));
  StateVector far(2);
  far << 1e3, 1e3;
  CHECK(make_cost(CostKind::probabilistic, J, far, disp, target, 0.2, 1e6)(none) == 1e6);
}

TEST_CASE("convergence probability: chi-squared closed form and Monte Carlo agree") {
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  const Vector w = (Vector(3) << 1, 1, 0).finished();
  const Vector eps_r = (Vector(3) << 0.3, -0.2, 5.0).finished();
  // Isotropic: closed form path.
  const Vector iso = Vector::Constant(3, 0.4);
  const double closed = convergence_probability(eps_r, iso, 0.6, w, rng);
  int hit = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double a = eps_r[0] + 0.4 * g(rng), b = eps_r[1] + 0.4 * g(rng);
    hit += a * a + b * b < 0.36;
  }
  CHECK(std::abs(closed - hit / double(n)) < 0.005);
  // eps_r = 0, unit sigma, threshold 1: P(chi2_2 < 1) = 1 - exp(-1/2).
  CHECK(convergence_probability(Vector::Zero(2), Vector::Ones(2), 1.0, Vector::Ones(2), rng) ==
        doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-6));
  // Anisotropic: Monte Carlo path against an independent Monte Carlo.
  const Vector aniso = (Vector(3) << 0.4, 0.1, 0.0).finished();
  const double mc = convergence_probability(eps_r, aniso, 0.6, w, rng, 200000);
  hit = 0;
  for (int i = 0; i < n; ++i) {
    const double a = eps_r[0] + 0.4 * g(rng), b = eps_r[1] + 0.1 * g(rng);
    hit += a * a + b * b < 0.36;
  }
  CHECK(std::abs(mc - hit / double(n)) < 0.01);
  CHECK(convergence_probability(eps_r, Vector::Zero(3), 0.6, w, rng) == 1.0);
  CHECK(convergence_probability(eps_r, Vector::Zero(3), 0.3, w, rng) == 0.0);
}

TEST_CASE("excluded actuators are never recruited by the planner") {
  Rng rng(5);
  const InfluenceMatrix J = random_jacobian(4, 12, rng);
  StaticConfig cfg;
  cfg.excluded_actuators = {0, 3, 5, 8};
  const DispersionModel disp = DispersionModel::shared(Vector::Constant(4, 0.1), 12);
  for (int t = 0; t < 10; ++t) {
    const StateVector x_e = 3.0 * random_jacobian(4, 1, rng).columns.col(0);
    const PlanResult p = plan_correction(x_e, J, cfg, disp, make_target(Vector::Zero(4)), rng);
    for (auto k : cfg.excluded_actuators) REQUIRE_FALSE(p.b[k]);
    REQUIRE((p.eps_r - (superpose(J, p.b) - x_e)).norm() < 1e-12);
  }
  for (std::size_t k = 0; k < 12; ++k) cfg.excluded_actuators.insert(k);
  const PlanResult none = plan_correction(Vector::Ones(4), J, cfg, disp, make_target(Vector::Zero(4)), rng);
  CHECK(none.b.none());
}

TEST_CASE("static controller reaches reachable targets on the noise-free linear plant") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 5; ++i) targets.push_back(make_target(reachable(plant, tgt)));
  StaticConfig cfg;
  const StaticRun run = run_static(plant, cal, targets, cfg, opt, noise);
  REQUIRE(run.targets.size() == 5);
  for (const auto& r : run.targets) {
    CHECK(r.on_target);
    CHECK(r.n_f <= 3);
    // Linear plant: every realized move equals the prediction.
    for (const auto& rec : r.records) CHECK(rec.eps_a.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r.final_error == doctest::Approx(weighted_norm(r.final_x - targets[r.target_id].x_d, targets[r.target_id].weights)));
  }
}

TEST_CASE("a load event shows up as the compliance displacement in the realized move") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  StaticConfig cfg;
  cfg.hold_iterations = 4;
  Schedule sched;
  const Vector f = (Vector(4) << 2.0, -1.0, 0.0, 0.0).finished();
  sched.loads.push_back({2.0, f});
  const StaticRun run = run_static(plant, cal, {make_target(reachable(plant, tgt))}, cfg, opt, noise, sched);
  const auto& recs = run.targets[0].records;
  REQUIRE(recs.size() == 4);
  // The event at tick 2 fires before the readout that closes iteration 1.
  CHECK((recs[1].eps_a - plant.compliance(f)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(recs[0].eps_a.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(recs[2].eps_a.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("hold mode runs exactly the requested iterations") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  StaticConfig cfg;
  cfg.hold_iterations = 6;
  const StaticRun run = run_static(plant, cal, {make_target(reachable(plant, tgt)), make_target(reachable(plant, tgt))},
                                   cfg, opt, noise);
  for (const auto& r : run.targets) {
    CHECK(r.records.size() == 6);
    for (const auto& rec : r.records)
      if (rec.on_target) CHECK(rec.b.none());
  }
}

TEST_CASE("detected stuck actuators are excluded from planning after the event") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  Schedule sched;
  sched.faults.push_back({0.0, 4, FaultMode::stuck_off, true});
  sched.faults.push_back({0.0, 9, FaultMode::stuck_on, true});
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 4; ++i) targets.push_back(make_target(reachable(plant, tgt)));
  const StaticRun run = run_static(plant, cal, targets, StaticConfig{}, opt, noise, sched);
  for (const auto& r : run.targets)
    for (const auto& rec : r.records) {
      REQUIRE_FALSE(rec.b[4]);
      REQUIRE_FALSE(rec.b[9]);
    }
}

TEST_CASE("static runs are reproducible from their streams") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  Rng cal_rng(1), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  const std::vector<TargetSpec> targets{make_target(reachable(plant, tgt))};
  Rng o1(7), n1(8), o2(7), n2(8);
  const StaticRun a = run_static(plant, cal, targets, StaticConfig{}, o1, n1);
  const StaticRun b = run_static(plant, cal, targets, StaticConfig{}, o2, n2);
  REQUIRE(a.targets[0].records.size() == b.targets[0].records.size());
  for (std::size_t i = 0; i < a.targets[0].records.size(); ++i)
    CHECK(a.targets[0].records[i].x == b.targets[0].records[i].x);
}

TEST_CASE("schedule cursor applies events once and in order") {
  Schedule s;
  s.faults.push_back({1.0, 2, FaultMode::stuck_on, false});
  s.faults.push_back({3.0, 2, FaultMode::repaired, false});
  s.loads.push_back({2.0, Vector::Ones(2)});
  s.validate(4, 2);
  ScheduleCursor c(s);
  FaultState f;
  LoadState l;
  std::set<std::size_t> ex;
  CHECK_FALSE(c.advance(0.5, f, l, ex));
  CHECK(c.advance(1.0, f, l, ex));
  CHECK(f.stuck_on.count(2));
  CHECK_FALSE(c.advance(1.5, f, l, ex));
  CHECK(c.advance(10.0, f, l, ex));
  CHECK(f.empty());
  CHECK(l.f_ext.size() == 2);

  Schedule bad;
  bad.faults.push_back({2.0, 0, FaultMode::stuck_on, false});
  bad.faults.push_back({1.0, 0, FaultMode::stuck_on, false});
  CHECK_THROWS_AS(bad.validate(4, 2), ConfigError);
  Schedule range;
  range.faults.push_back({0.0, 9, FaultMode::stuck_on, false});
  CHECK_THROWS_AS(range.validate(4, 2), ConfigError);
}

TEST_CASE("config parsing and validation") {
  CHECK(parse_cost_kind("probabilistic") == CostKind::probabilistic);
  CHECK_THROWS_AS(parse_cost_kind("greedy"), ConfigError);
  CHECK(parse_stop_rule(to_string(StopRule::convergence_probability)) == StopRule::convergence_probability);
  StaticConfig c;
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("error recursion identity holds on every iteration record") {
  const PlantModel plant = make_reference_plant("nonlinear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 4; ++i) targets.push_back(make_target(reachable(plant, tgt)));
  const StaticRun run = run_static(plant, cal, targets, StaticConfig{}, opt, noise);
  for (const auto& r : run.targets)
    for (std::size_t i = 0; i + 1 < r.records.size(); ++i) {
      const auto& rec = r.records[i];
      REQUIRE((r.records[i + 1].x_e + rec.eps_r + rec.eps_a).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("weighted error strictly decreases on the noise-free linear plant") {
  const PlantModel plant = make_reference_plant("linear20x4", 2);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 10; ++i) targets.push_back(make_target(reachable(plant, tgt), 0.05));
  const StaticRun run = run_static(plant, cal, targets, StaticConfig{}, opt, noise);
  for (const auto& r : run.targets) {
    std::vector<double> e;
    for (const auto& rec : r.records) e.push_back(rec.error_norm);
    e.push_back(r.final_error);
    for (std::size_t i = 1; i < e.size(); ++i) REQUIRE(e[i] < e[i - 1]);
  }
}

TEST_CASE("undetected stuck actuators produce exactly their missing influence as approximation error") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng cal_rng(1), opt(2), noise(3), tgt(4);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  Schedule sched;
  for (std::size_t k : {2, 9, 15}) sched.faults.push_back({0.0, k, FaultMode::stuck_off, false});
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 6; ++i) targets.push_back(make_target(reachable(plant, tgt)));
  const StaticRun run = run_static(plant, cal, targets, StaticConfig{}, opt, noise, sched);
  InputVector u(20);
  std::size_t recruited = 0;
  for (const auto& r : run.targets)
    for (const auto& rec : r.records) {
      const InfluenceMatrix Jt = updated_jacobian(cal.J, u, rec.x);
      Vector lost = Vector::Zero(4);
      for (std::size_t k : {2, 9, 15})
        if (rec.b[k]) {
          lost -= Jt.columns.col(Eigen::Index(k));
          ++recruited;
        }
      REQUIRE((rec.eps_a - lost).cwiseAbs().maxCoeff() < 1e-9);
      u = apply_switch(u, rec.b);
    }
  CHECK(recruited > 0);
}

TEST_CASE("planner returns a constructed two-switch exact solution") {
  const PlantModel plant = make_reference_plant("linear20x4", 1);
  Rng cal_rng(1), rng(2);
  const CalibrationReport cal = calibrate(plant, {}, cal_rng);
  const InfluenceMatrix Jt = updated_jacobian(cal.J, InputVector(20), cal.x0);
  TargetSpec target = make_target(Vector::Zero(4));
  target.weights.setOnes();
  // Any candidate cheaper than 0.4 must have at most one switch, so a pair is
  // the unique optimum when no zero- or one-switch vector undercuts it.
  int checked = 0;
  for (std::size_t i = 0; i < 20 && checked < 5; ++i)
    for (std::size_t j = i + 1; j < 20 && checked < 5; ++j) {
      const StateVector x_e = Jt.columns.col(Eigen::Index(i)) + Jt.columns.col(Eigen::Index(j));
      bool unique = cost_penalized(SwitchVector(20), Jt, x_e, target.weights, 0.2) > 0.4 + 1e-6;
      for (std::size_t k = 0; k < 20 && unique; ++k)
        unique = cost_penalized(SwitchVector::unit(20, k), Jt, x_e, target.weights, 0.2) > 0.4 + 1e-6;
      if (!unique) continue;
      ++checked;
      SwitchVector want(20);
      want.set(i, true);
      want.set(j, true);
      const PlanResult p = plan_correction(x_e, Jt, StaticConfig{}, cal.dispersion, target, rng);
      CHECK(p.b == want);
      CHECK(p.cost == doctest::Approx(0.4).epsilon(1e-9));
    }
  CHECK(checked == 5);
  const PlanResult zero = plan_correction(Vector::Zero(4), Jt, StaticConfig{}, cal.dispersion, target, rng);
  CHECK(zero.b.none());
}

TEST_CASE("penalized planning never uses more switches than the minimal exact solution") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const PlantModel plant = make_reference_plant("linear10x2", 100 + t);
    const InfluenceMatrix J{plant.displacement_influence(), InfluenceKind::displacement};
    SwitchVector want(10);
    for (std::size_t k = 0; k < 10; ++k) want.set(k, bernoulli(rng, 0.4));
    const StateVector x_e = superpose(J, want);
    TargetSpec target = make_target(Vector::Zero(2));
    // Fewest switches among exact solutions, by scanning all 2^10 vectors.
    std::size_t fewest = 10;
    for (std::uint64_t code = 0; code < 1024; ++code) {
      SwitchVector b(10);
      for (std::size_t k = 0; k < 10; ++k) b.set(k, (code >> k) & 1U);
      if ((superpose(J, b) - x_e).norm() < 1e-12) fewest = std::min(fewest, b.count());
    }
    const PlanResult p = plan_correction(x_e, J, StaticConfig{}, DispersionModel::shared(Vector::Zero(2), 10), target, rng);
    if ((p.predicted - x_e).norm() < 1e-12) REQUIRE(p.b.count() <= fewest);
    REQUIRE(p.cost <= 0.2 * static_cast<double>(fewest) + 1e-12);
  }
}
