#include "binctl/static_controller.hpp"

#include <cmath>
#include <limits>

#include "binctl/stats.hpp"

namespace binctl {

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::residual: return "residual";
    case CostKind::penalized: return "penalized";
    case CostKind::probabilistic: return "probabilistic";
  }
  return "unknown";
}

CostKind parse_cost_kind(const std::string& s) {
  if (s == "residual") return CostKind::residual;
  if (s == "penalized") return CostKind::penalized;
  if (s == "probabilistic") return CostKind::probabilistic;
  throw ConfigError("unknown cost kind '" + s + "'");
}

std::string to_string(StopRule rule) {
  return rule == StopRule::tolerance_met ? "tolerance-met" : "convergence-probability";
}

StopRule parse_stop_rule(const std::string& s) {
  if (s == "tolerance-met") return StopRule::tolerance_met;
  if (s == "convergence-probability") return StopRule::convergence_probability;
  throw ConfigError("unknown stop rule '" + s + "'");
}

void StaticConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("static: max_iterations must be >= 1");
  if (!(penalty_beta >= 0.0)) throw ConfigError("static: penalty_beta must be >= 0");
  if (!(p_conv_min > 0.0 && p_conv_min < 1.0)) throw ConfigError("static: p_conv_min must be in (0,1)");
  if (!(settle_time >= 0.0)) throw ConfigError("static: settle_time must be >= 0");
  if (hold_iterations < 0) throw ConfigError("static: hold_iterations must be >= 0");
  if (mc_samples < 1) throw ConfigError("static: mc_samples must be >= 1");
  ga.validate();
}

double weighted_norm(const Vector& v, const Vector& weights) {
  return std::sqrt((weights.array() * v.array().square()).sum());
}

double cost_residual(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                     const Vector& weights) {
  return weighted_norm(residual(J_tilde, b, x_e), weights);
}

double cost_penalized(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                      const Vector& weights, double beta) {
  return cost_residual(b, J_tilde, x_e, weights) + beta * static_cast<double>(b.count());
}

double on_target_probability(const SwitchVector& b, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                             const DispersionModel& dispersion, const TargetSpec& target) {
  const StateVector mu = residual(J_tilde, b, x_e);
  const Vector sigma = dispersion.sigma(b);
  double p = 1.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!target.weighted(i)) continue;
    p *= stats::box_probability(mu[i], sigma[i], target.tolerance[i]);
    if (p == 0.0) break;
  }
  return p;
}

double convergence_probability(const StateVector& eps_r, const Vector& sigma, double x_e_norm, const Vector& weights,
                               Rng& mc_rng, int mc_samples) {
  if (eps_r.size() != sigma.size() || eps_r.size() != weights.size())
    throw ContractError("convergence_probability: dimension mismatch");
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0) active.push_back(i);
  if (active.empty()) throw ContractError("convergence_probability: no weighted DOF");

  bool all_zero = true;
  for (auto i : active) all_zero = all_zero && sigma[i] == 0.0;
  if (all_zero) return weighted_norm(eps_r, weights) < x_e_norm ? 1.0 : 0.0;

  // Standardized scale per weighted DOF.
  const double tau0 = std::sqrt(weights[active[0]]) * sigma[active[0]];
  bool isotropic = tau0 > 0.0;
  for (auto i : active) {
    const double tau = std::sqrt(weights[i]) * sigma[i];
    isotropic = isotropic && std::abs(tau - tau0) <= 1e-9 * tau0;
  }
  if (isotropic) {
    double lambda = 0.0;
    for (auto i : active) {
      const double z = std::sqrt(weights[i]) * eps_r[i] / tau0;
      lambda += z * z;
    }
    const double x = (x_e_norm / tau0) * (x_e_norm / tau0);
    return stats::noncentral_chi2_cdf(static_cast<double>(active.size()), lambda, x);
  }

  std::normal_distribution<double> g(0.0, 1.0);
  const double limit = x_e_norm * x_e_norm;
  int hits = 0;
  for (int s = 0; s < mc_samples; ++s) {
    double acc = 0.0;
    for (auto i : active) {
      const double e = eps_r[i] + sigma[i] * g(mc_rng);
      acc += weights[i] * e * e;
    }
    if (acc < limit) ++hits;
  }
  return static_cast<double>(hits) / mc_samples;
}

CostFunction make_cost(CostKind kind, const InfluenceMatrix& J_tilde, const StateVector& x_e,
                       const DispersionModel& dispersion, const TargetSpec& target, double beta, double cap) {
  switch (kind) {
    case CostKind::residual:
      return {[J_tilde, x_e, w = target.weights](const SwitchVector& b) { return cost_residual(b, J_tilde, x_e, w); }};
    case CostKind::penalized:
      return {[J_tilde, x_e, w = target.weights, beta](const SwitchVector& b) {
        return cost_penalized(b, J_tilde, x_e, w, beta);
      }};
    case CostKind::probabilistic:
      return {[J_tilde, x_e, dispersion, target, cap](const SwitchVector& b) {
        const double p = on_target_probability(b, J_tilde, x_e, dispersion, target);
        return p > 1.0 / cap ? 1.0 / p : cap;
      }};
  }
  throw ContractError("make_cost: unknown kind");
}

PlanResult plan_correction(const StateVector& x_e, const InfluenceMatrix& J_tilde, const StaticConfig& config,
                           const DispersionModel& dispersion, const TargetSpec& target, Rng& rng) {
  const auto m = static_cast<std::size_t>(J_tilde.actuators());
  if (x_e.size() != J_tilde.dofs()) throw ContractError("plan_correction: dimension mismatch");
  ActuatorMask mask(m, true);
  std::size_t free = m;
  for (auto k : config.excluded_actuators) {
    if (k >= m) throw ConfigError("plan_correction: excluded actuator out of range");
    if (mask[k]) --free;
    mask[k] = false;
  }

  const CostFunction cost =
      make_cost(config.cost_kind, J_tilde, x_e, dispersion, target, config.penalty_beta, config.probability_cost_cap);

  PlanResult plan;
  if (free == 0) {
    plan.b = SwitchVector(m);
    plan.cost = cost(plan.b);
    plan.search.best_b = plan.b;
    plan.search.best_cost = plan.cost;
    plan.search.evaluations = 1;
    plan.note = "no recruitable actuators";
  } else {
    plan.search = combined_search(cost, m, config.ga, rng, mask);
    plan.b = plan.search.best_b;
    plan.cost = plan.search.best_cost;
  }
  plan.predicted = superpose(J_tilde, plan.b);
  plan.eps_r = plan.predicted - x_e;
  plan.sigma = dispersion.sigma(plan.b);
  return plan;
}

namespace {

StateVector checked_read(const PlantModel& plant, const InputVector& u, const FaultState& faults,
                         const LoadState& load, Rng& noise) {
  StateVector x = steady_state(plant, u, faults, load, noise);
  if (!x.allFinite()) throw RuntimeAbort("static: non-finite state readout (faults: " +
                                         std::to_string(faults.stuck_on.size() + faults.stuck_off.size()) + ")");
  return x;
}

}  // namespace

StaticRun run_static(const PlantModel& plant, const CalibrationReport& calibration,
                     const std::vector<TargetSpec>& targets, const StaticConfig& config, Rng& optimizer_rng,
                     Rng& noise_rng, const Schedule& schedule) {
  config.validate();
  const Eigen::Index n = plant.dofs();
  const auto m = static_cast<std::size_t>(plant.actuators());
  if (calibration.J.dofs() != n || calibration.J.actuators() != plant.actuators())
    throw ContractError("run_static: calibration does not match plant dimensions");
  schedule.validate(m, n);
  for (const auto& t : targets) {
    t.validate();
    if (t.x_d.size() != n) throw ContractError("run_static: target dimension mismatch");
  }

  StaticConfig cfg = config;
  FaultState faults;
  LoadState load;
  ScheduleCursor cursor(schedule);
  Rng mc_rng = split(optimizer_rng);

  InputVector u(m);
  std::size_t tick = 0;
  double clock = 0.0;
  cursor.advance(0.0, faults, load, cfg.excluded_actuators);
  StateVector x = checked_read(plant, u, faults, load, noise_rng);

  StaticRun run;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const TargetSpec& target = targets[t];
    TargetResult res;
    res.target_id = t;
    const bool hold = cfg.hold_iterations > 0;
    const std::size_t budget = static_cast<std::size_t>(hold ? cfg.hold_iterations : cfg.max_iterations);
    std::size_t iter = 0;

    while (true) {
      const StateVector x_e = state_error(target.x_d, x);
      const bool on = target.within(x_e);
      if ((!hold && on) || iter >= budget) break;

      IterationRecord rec;
      rec.index = iter;
      rec.x = x;
      rec.x_e = x_e;
      rec.error_norm = weighted_norm(x_e, target.weights);
      rec.on_target = on;

      if (on) {
        rec.b = SwitchVector(m);
        rec.a = StateVector::Zero(n);
        rec.eps_r = -x_e;
        rec.sigma = Vector::Zero(n);
      } else {
        const InfluenceMatrix Jt = updated_jacobian(calibration.J, u, x, cfg.linearizer);
        PlanResult plan = plan_correction(x_e, Jt, cfg, calibration.dispersion, target, optimizer_rng);
        rec.b = plan.b;
        rec.a = plan.predicted;
        rec.eps_r = plan.eps_r;
        rec.sigma = plan.sigma;
        rec.cost = plan.cost;
        rec.evaluations = plan.search.evaluations;
        // Off target with nothing worth switching: the loop has reached a fixed point.
        if (!hold && plan.b.none()) {
          res.limit_cycle = true;
          break;
        }
        if (cfg.stop_rule == StopRule::convergence_probability) {
          rec.p_conv = convergence_probability(plan.eps_r, plan.sigma, rec.error_norm, target.weights, mc_rng,
                                               cfg.mc_samples);
          if (rec.p_conv < cfg.p_conv_min) {
            res.limit_cycle = true;
            break;
          }
        }
      }

      u = apply_switch(u, rec.b);
      ++tick;
      clock += cfg.settle_time;
      cursor.advance(static_cast<double>(tick), faults, load, cfg.excluded_actuators);
      const StateVector x_next = checked_read(plant, u, faults, load, noise_rng);
      rec.eps_a = (x_next - x) - rec.a;
      rec.sim_time = clock;
      if (!rec.b.none()) ++res.n_f;
      res.switch_activity += rec.b.count();
      res.records.push_back(std::move(rec));
      x = x_next;
      ++iter;
    }

    const StateVector x_e = state_error(target.x_d, x);
    res.on_target = target.within(x_e);
    res.final_error = weighted_norm(x_e, target.weights);
    res.final_x = x;
    res.sim_time = clock;
    run.targets.push_back(std::move(res));
  }
  run.final_u = u;
  return run;
}

}  // namespace binctl
