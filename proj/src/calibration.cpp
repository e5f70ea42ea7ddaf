#include "binctl/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "binctl/core.hpp"

namespace binctl {

namespace {

StateVector checked_readout(const PlantModel& plant, const InputVector& u, Rng& rng) {
  StateVector x = steady_state(plant, u, FaultState{}, LoadState{}, rng);
  if (!x.allFinite()) throw CalibrationError("calibration: non-finite readout");
  return x;
}

}  // namespace

SwitchVector random_switch(std::size_t m, std::size_t count, Rng& rng) {
  if (count > m) throw ContractError("random_switch: count exceeds length");
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  SwitchVector b(m);
  for (std::size_t j = 0; j < count; ++j) b.set(idx[j], true);
  return b;
}

Identification identify_influence_vectors(const PlantModel& plant, int repeats, Rng& rng) {
  if (repeats < 1) throw ContractError("identify: repeats must be >= 1");
  const Eigen::Index n = plant.dofs();
  const Eigen::Index m = plant.actuators();
  const auto mu = static_cast<std::size_t>(m);

  Vector x0 = Vector::Zero(n);
  Matrix xk = Matrix::Zero(n, m);
  const InputVector off(mu);
  for (int r = 0; r < repeats; ++r) {
    x0 += checked_readout(plant, off, rng);
    for (Eigen::Index k = 0; k < m; ++k)
      xk.col(k) += checked_readout(plant, InputVector::unit(mu, static_cast<std::size_t>(k)), rng);
  }
  const double inv = 1.0 / repeats;
  Identification id;
  id.x0 = x0 * inv;
  id.J.kind = InfluenceKind::displacement;
  id.J.columns = xk * inv;
  id.J.columns.colwise() -= id.x0;
  return id;
}

InfluenceMatrix force_from_displacement(const InfluenceMatrix& J, const Matrix& K) {
  if (K.rows() != J.dofs() || K.cols() != J.dofs()) throw ContractError("force_from_displacement: K must be n x n");
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success || !K.isApprox(K.transpose(), 1e-12))
    throw ConfigError("force_from_displacement: stiffness must be symmetric positive-definite (singular K?)");
  return InfluenceMatrix{K * J.columns, InfluenceKind::force};
}

DispersionResult characterize_dispersion(const PlantModel& plant, const StateVector& x0, const InfluenceMatrix& J,
                                         int trials, std::size_t max_switches, Rng& rng, TrialBase base) {
  if (trials < 30) throw ContractError("characterize_dispersion: insufficient trials (need >= 30)");
  const Eigen::Index n = plant.dofs();
  const Eigen::Index m = plant.actuators();
  const auto mu = static_cast<std::size_t>(m);
  if (J.dofs() != n || J.actuators() != m) throw ContractError("characterize_dispersion: J shape mismatch");
  if (max_switches < 1 || max_switches > mu) throw ContractError("characterize_dispersion: max_switches out of range");

  DispersionResult out;
  const std::uint64_t base_seed = rng();
  for (int t = 0; t < trials; ++t) {
    Rng trng(splitmix64(base_seed + static_cast<std::uint64_t>(t)));
    InputVector u(mu);
    if (base == TrialBase::random)
      for (std::size_t k = 0; k < mu; ++k) u.set(k, bernoulli(trng, 0.5));
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, max_switches)(trng);
    const SwitchVector b = random_switch(mu, s, trng);

    const StateVector x1 = checked_readout(plant, u, trng);
    const StateVector x2 = checked_readout(plant, apply_switch(u, b), trng);
    const InfluenceMatrix Jt = updated_jacobian(J, u, x1);

    DispersionSample sample;
    sample.trial = static_cast<std::size_t>(t);
    sample.switches = s;
    sample.b = b;
    sample.on_before = u.count();
    sample.base_distance = (x1 - x0).norm();
    sample.eps_a = (x2 - x1) - superpose(Jt, b);
    out.samples.push_back(std::move(sample));
  }

  std::vector<double> sw, dist, on;
  for (const auto& s : out.samples) {
    sw.push_back(static_cast<double>(s.switches));
    dist.push_back(s.base_distance);
    on.push_back(static_cast<double>(s.on_before));
  }

  out.fitted_sigma = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> abs_e;
    for (const auto& s : out.samples) abs_e.push_back(std::abs(s.eps_a[i]));
    out.fitted_sigma[i] = stats::fit_sqrt_law(abs_e, sw);
    out.vs_switches.push_back(stats::spearman(sw, abs_e));
    out.vs_distance.push_back(stats::spearman(dist, abs_e));
    out.vs_on_count.push_back(stats::spearman(on, abs_e));
  }

  // Per-actuator estimate: mean of eps^2 / s_n over trials that switched k.
  Matrix sum_sq = Matrix::Zero(n, m);
  std::vector<int> hits(mu, 0);
  for (const auto& sample : out.samples) {
    const double s = static_cast<double>(sample.switches);
    for (std::size_t k = 0; k < mu; ++k) {
      if (!sample.b[k]) continue;
      sum_sq.col(static_cast<Eigen::Index>(k)) += sample.eps_a.array().square().matrix() / s;
      ++hits[k];
    }
  }
  out.per_actuator_sigma = Matrix(n, m);
  for (std::size_t k = 0; k < mu; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (hits[k] > 0)
      out.per_actuator_sigma.col(kk) = (sum_sq.col(kk) / hits[k]).array().sqrt();
    else
      out.per_actuator_sigma.col(kk) = out.fitted_sigma;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = out.per_actuator_sigma.row(i).minCoeff();
    const double hi = out.per_actuator_sigma.row(i).maxCoeff();
    if (hi > 0.0 && (lo == 0.0 || hi / lo > 2.0)) out.per_actuator_mode = true;
  }
  // A zero-error plant has nothing to discriminate; rounding noise is not dispersion.
  if (out.fitted_sigma.maxCoeff() <= 1e-9 * std::max(1.0, J.columns.cwiseAbs().maxCoeff())) out.per_actuator_mode = false;
  out.model = out.per_actuator_mode ? DispersionModel::per_actuator(out.per_actuator_sigma)
                                    : DispersionModel::shared(out.fitted_sigma, mu);

  std::map<std::size_t, std::vector<const DispersionSample*>> by_count;
  for (const auto& s : out.samples) by_count[s.switches].push_back(&s);
  for (const auto& [count, group] : by_count) {
    ResidualBin bin;
    bin.switches = count;
    bin.count = group.size();
    bin.mean_abs = Vector::Zero(n);
    bin.rms = Vector::Zero(n);
    for (const auto* s : group) {
      bin.mean_abs += s->eps_a.cwiseAbs();
      bin.rms += s->eps_a.array().square().matrix();
    }
    bin.mean_abs /= static_cast<double>(group.size());
    bin.rms = (bin.rms / static_cast<double>(group.size())).array().sqrt();
    out.bins.push_back(std::move(bin));
  }
  return out;
}

CalibrationReport calibrate(const PlantModel& plant, const CalibrationOptions& options, Rng& rng) {
  CalibrationReport report;
  const Identification id = identify_influence_vectors(plant, options.repeats, rng);
  report.J = id.J;
  report.x0 = id.x0;
  if (options.with_force) report.F = force_from_displacement(id.J, plant.params().K);
  const auto max_sn = std::min<std::size_t>(options.max_switches, static_cast<std::size_t>(plant.actuators()));
  DispersionResult d = characterize_dispersion(plant, id.x0, id.J, options.trials, max_sn, rng, options.base);
  report.dispersion = d.model;
  report.sample_count = d.samples.size();
  report.residual_stats = std::move(d.bins);
  report.fitted_sigma = d.fitted_sigma;
  report.per_actuator_mode = d.per_actuator_mode;
  report.vs_switches = std::move(d.vs_switches);
  report.vs_distance = std::move(d.vs_distance);
  report.vs_on_count = std::move(d.vs_on_count);
  report.samples = std::move(d.samples);
  return report;
}

}  // namespace binctl
