#include "binctl/plant.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <regex>
#include <sstream>

#include "binctl/core.hpp"
#include "binctl/stats.hpp"

namespace binctl {

namespace {

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

// Damping SPD is required; symmetric part is what the energy argument uses.
bool is_pd(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

}  // namespace

PlantModel::PlantModel(PlantParams params) : p_(std::move(params)) {
  const Eigen::Index n = p_.K.rows();
  const Eigen::Index m = p_.A.cols();
  if (n < 1 || m < 1) throw ConfigError("plant: need n >= 1 DOF and m >= 1 actuator");
  if (p_.A.rows() != n) throw ConfigError("plant: A must have n rows");
  if (p_.C.rows() != n || p_.M.rows() != n) throw ConfigError("plant: K, C, M must be n x n");
  if (!p_.A.allFinite() || !p_.K.allFinite() || !p_.C.allFinite() || !p_.M.allFinite())
    throw ConfigError("plant: non-finite matrix entries");
  if (!is_spd(p_.K)) throw ConfigError("plant: stiffness K must be symmetric positive-definite (singular K?)");
  if (!is_pd(p_.C)) throw ConfigError("plant: damping C must be positive-definite");
  if (!is_spd(p_.M)) throw ConfigError("plant: inertia M must be symmetric positive-definite");
  if (!(p_.gamma >= 0.0) || !std::isfinite(p_.gamma)) throw ConfigError("plant: gamma must be >= 0");
  if (p_.gamma > 0.0 && static_cast<Eigen::Index>(p_.coupling.size()) != n)
    throw ConfigError("plant: need one coupling matrix per DOF when gamma > 0");
  for (const auto& q : p_.coupling) {
    if (q.rows() != m || q.cols() != m) throw ConfigError("plant: coupling matrices must be m x m");
    if (!q.allFinite() || !q.isApprox(q.transpose(), 1e-12)) throw ConfigError("plant: coupling must be symmetric");
  }
  if (p_.noise_sigma.size() == 0) p_.noise_sigma = Vector::Zero(n);
  if (p_.noise_sigma.size() != n || (p_.noise_sigma.array() < 0.0).any() || !p_.noise_sigma.allFinite())
    throw ConfigError("plant: noise_sigma must be n non-negative values");
  if (p_.x_rest.size() == 0) p_.x_rest = Vector::Zero(n);
  if (p_.x_rest.size() != n || !p_.x_rest.allFinite()) throw ConfigError("plant: x_rest must be n finite values");
  if (p_.dispersion_target.size() != 0 && p_.dispersion_target.size() != n)
    throw ConfigError("plant: dispersion_target must be empty or n values");

  k_llt_.compute(p_.K);
  d_ = k_llt_.solve(p_.A);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(p_.K, p_.M, Eigen::EigenvaluesOnly);
  const double omega_max = std::sqrt(ges.eigenvalues().maxCoeff());
  double lo = 0.0;
  double hi = 4.0 / omega_max;
  while (step_spectral_radius(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (step_spectral_radius(mid) < 1.0 ? lo : hi) = mid;
  }
  max_dt_ = lo;
}

Vector PlantModel::compliance(const Vector& f) const { return k_llt_.solve(f); }

Vector PlantModel::coupling_term(const InputVector& u_eff) const {
  const Eigen::Index n = dofs();
  Vector q = Vector::Zero(n);
  if (p_.gamma == 0.0) return q;
  const Vector uv = u_eff.as_real();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix& Q = p_.coupling[static_cast<std::size_t>(i)];
    q[i] = uv.dot(Q * uv) - uv.dot(Q.diagonal().cwiseProduct(uv));
  }
  return p_.gamma * q;
}

double PlantModel::step_spectral_radius(double h) const {
  const Eigen::Index n = dofs();
  const Matrix Mp = p_.M + 0.5 * h * p_.C;
  const Matrix Mm = p_.M - 0.5 * h * p_.C;
  Eigen::PartialPivLU<Matrix> lu(Mp);
  const Matrix PK = lu.solve(p_.K);
  const Matrix PM = lu.solve(Mm);
  Matrix T(2 * n, 2 * n);
  T.topLeftCorner(n, n) = Matrix::Identity(n, n) - h * h * PK;
  T.topRightCorner(n, n) = h * PM;
  T.bottomLeftCorner(n, n) = -h * PK;
  T.bottomRightCorner(n, n) = PM;
  Eigen::EigenSolver<Matrix> es(T, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void FaultState::validate(std::size_t m) const {
  for (auto k : stuck_on) {
    if (k >= m) throw ConfigError("fault: actuator index " + std::to_string(k) + " out of range");
    if (stuck_off.count(k)) throw ConfigError("fault: actuator " + std::to_string(k) + " both stuck on and off");
  }
  for (auto k : stuck_off)
    if (k >= m) throw ConfigError("fault: actuator index " + std::to_string(k) + " out of range");
}

InputVector effective_input(const InputVector& u, const FaultState& faults) {
  faults.validate(u.size());
  InputVector out = u;
  for (auto k : faults.stuck_on) out.set(k, true);
  for (auto k : faults.stuck_off) out.set(k, false);
  return out;
}

namespace {

Vector total_force(const PlantModel& plant, const InputVector& u_eff, const LoadState& load) {
  const auto& p = plant.params();
  const Vector f = load.force(plant.dofs());
  if (f.size() != plant.dofs() || !f.allFinite()) throw ContractError("load: f_ext must be n finite values");
  return p.A * u_eff.as_real() + f;
}

void check_input(const PlantModel& plant, const InputVector& u) {
  if (static_cast<Eigen::Index>(u.size()) != plant.actuators())
    throw ContractError("plant: input length does not match actuator count");
}

}  // namespace

StateVector steady_state_exact(const PlantModel& plant, const InputVector& u, const FaultState& faults,
                               const LoadState& load) {
  check_input(plant, u);
  const InputVector ue = effective_input(u, faults);
  return plant.params().x_rest + plant.compliance(total_force(plant, ue, load)) + plant.coupling_term(ue);
}

StateVector read_with_noise(const PlantModel& plant, const StateVector& x_true, Rng& rng) {
  StateVector x = x_true;
  const auto& sigma = plant.params().noise_sigma;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // Always draw so that the stream position does not depend on sigma.
    const double z = gauss(rng);
    x[i] += sigma[i] * z;
  }
  return x;
}

StateVector steady_state(const PlantModel& plant, const InputVector& u, const FaultState& faults,
                         const LoadState& load, Rng& rng) {
  return read_with_noise(plant, steady_state_exact(plant, u, faults, load), rng);
}

MotionState step(const PlantModel& plant, const MotionState& s, const InputVector& u, const FaultState& faults,
                 const LoadState& load, double dt) {
  check_input(plant, u);
  if (!(dt > 0.0) || !(dt < plant.max_stable_dt())) {
    std::ostringstream os;
    os << "step: dt=" << dt << " s is outside the stable range; use 0 < dt <= " << 0.9 * plant.max_stable_dt();
    throw ConfigError(os.str());
  }
  const auto& p = plant.params();
  const InputVector ue = effective_input(u, faults);
  Vector force = total_force(plant, ue, load);
  if (p.gamma > 0.0) force += p.K * plant.coupling_term(ue);
  const Vector rhs = (p.M - 0.5 * dt * p.C) * s.v + dt * (force - p.K * (s.x - p.x_rest));
  MotionState out;
  out.v = (p.M + 0.5 * dt * p.C).partialPivLu().solve(rhs);
  out.x = s.x + dt * out.v;
  return out;
}

double shadow_energy(const PlantModel& plant, const MotionState& s, double dt) {
  const auto& p = plant.params();
  const Vector y = s.x - p.x_rest;
  return 0.5 * s.v.dot(p.M * s.v) + 0.5 * y.dot(p.K * y) - 0.5 * dt * s.v.dot(p.K * y);
}

// ---------------------------------------------------------------------------
// Reference presets

Vector preset_dof_scale(Eigen::Index n) {
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = (i % 4) < 2 ? 1.0 : 1.0 / 14.0;
  return s;
}

namespace {

constexpr double kStiffness = 1.0;   // N/mm in normalized coordinates
constexpr double kMass = 0.1;  // omega ~ 3.2 rad/s, settles well inside the 3 s static wait
constexpr double kDampingRatio = 0.7;
constexpr double kTargetSigma = 0.35;  // mm per sqrt(switch) on translations
constexpr int kTuningTrials = 4000;
constexpr std::size_t kTuningMaxSwitches = 10;

Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

Matrix random_spd(Eigen::Index n, double lo, double hi, Rng& rng) {
  const Matrix q = random_orthogonal(n, rng);
  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig[i] = lo + (hi - lo) * uniform01(rng);
  Matrix k = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (k + k.transpose());
}

double max_abs_cosine(const Matrix& cols) {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < cols.cols(); ++a)
    for (Eigen::Index b = a + 1; b < cols.cols(); ++b) {
      const double c = cols.col(a).dot(cols.col(b)) / (cols.col(a).norm() * cols.col(b).norm());
      worst = std::max(worst, std::abs(c));
    }
  return worst;
}

double worst_pair_condition(const Matrix& d) {
  double worst = 1.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.rows(); ++j) {
      Matrix proj(2, d.cols());
      proj.row(0) = d.row(i);
      proj.row(1) = d.row(j);
      Eigen::JacobiSVD<Matrix> svd(proj);
      const auto sv = svd.singularValues();
      const double c = sv[1] > 0 ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
      worst = std::max(worst, c);
    }
  return worst;
}

// Displacement columns in normalized coordinates: random directions, magnitude
// in [1.5, 3.5], resampled until directions are diverse and every 2-DOF
// projection is well conditioned.
Matrix generate_influences(Eigen::Index n, Eigen::Index m, const Vector& scale, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double min_angle_cos = std::cos(5.0 * std::numbers::pi / 180.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Matrix dn(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Vector dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = g(rng);
      dn.col(k) = dir.normalized() * (1.5 + 2.0 * uniform01(rng));
    }
    if (m > 1 && max_abs_cosine(dn) >= min_angle_cos) continue;
    const Matrix d = scale.asDiagonal() * dn;
    if (n > 1 && m > 1 && worst_pair_condition(d) >= 50.0) continue;
    return d;
  }
  throw ConfigError("preset: could not generate a well-conditioned influence set");
}

// Random pure cross-coupling, tuned so that the sqrt(s_n) dispersion fit of
// the noise-free plant equals `target` per DOF.
void tune_coupling(PlantParams& p, const Vector& target, Rng& rng) {
  const Eigen::Index n = p.A.rows();
  const Eigen::Index m = p.A.cols();
  std::normal_distribution<double> g(0.0, 1.0);
  p.coupling.assign(static_cast<std::size_t>(n), Matrix::Zero(m, m));
  for (auto& q : p.coupling)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index l = j + 1; l < m; ++l) q(j, l) = q(l, j) = g(rng);

  const std::size_t max_sn = std::min<std::size_t>(kTuningMaxSwitches, static_cast<std::size_t>(m));
  std::vector<double> switches;
  std::vector<std::vector<double>> abs_err(static_cast<std::size_t>(n));
  auto q_of = [&](const Vector& u, Eigen::Index i) { return u.dot(p.coupling[static_cast<std::size_t>(i)] * u); };
  std::vector<std::size_t> idx(static_cast<std::size_t>(m));
  for (int t = 0; t < kTuningTrials; ++t) {
    Vector u(m);
    for (Eigen::Index k = 0; k < m; ++k) u[k] = bernoulli(rng, 0.5) ? 1.0 : 0.0;
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, max_sn)(rng);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Vector u2 = u;
    for (std::size_t j = 0; j < s; ++j) u2[static_cast<Eigen::Index>(idx[j])] = 1.0 - u2[static_cast<Eigen::Index>(idx[j])];
    switches.push_back(static_cast<double>(s));
    for (Eigen::Index i = 0; i < n; ++i) abs_err[static_cast<std::size_t>(i)].push_back(std::abs(q_of(u2, i) - q_of(u, i)));
  }
  p.gamma = target[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fit = stats::fit_sqrt_law(abs_err[static_cast<std::size_t>(i)], switches);
    p.coupling[static_cast<std::size_t>(i)] *= (target[i] / target[0]) / fit;
  }
  p.dispersion_target = target;
}

}  // namespace

std::vector<std::string> plant_preset_names() {
  return {"linear20x4", "nonlinear20x4", "linear<m>x<n>", "nonlinear<m>x<n>", "iso<m>x<n>"};
}

PlantModel make_reference_plant(const std::string& preset, std::uint64_t seed) {
  static const std::regex pattern(R"(^(linear|nonlinear|iso)(\d+)x(\d+)$)");
  std::smatch match;
  if (!std::regex_match(preset, match, pattern)) throw ConfigError("unknown plant preset '" + preset + "'");
  const std::string kind = match[1];
  const long m = std::stol(match[2]);
  const long n = std::stol(match[3]);
  if (m < 1 || m > 64 || n < 1 || n > 8) throw ConfigError("preset '" + preset + "': need 1 <= m <= 64, 1 <= n <= 8");

  Rng rng = make_stream(seed, "plant/" + preset);
  const bool iso = kind == "iso";
  const Vector scale = iso ? Vector(Vector::Ones(n)) : preset_dof_scale(n);
  const Matrix s_inv = scale.cwiseInverse().asDiagonal();

  PlantParams p;
  p.name = preset;
  const Matrix d = generate_influences(n, m, scale, rng);
  const Matrix kn = iso ? Matrix(kStiffness * Matrix::Identity(n, n)) : random_spd(n, 0.8 * kStiffness, 1.5 * kStiffness, rng);
  p.K = s_inv * kn * s_inv;
  p.K = 0.5 * (p.K + p.K.transpose());
  p.M = kMass * s_inv * s_inv;
  const double c0 = 2.0 * kDampingRatio * std::sqrt(kStiffness * kMass);
  p.C = c0 * s_inv * s_inv;
  p.A = p.K * d;
  p.x_rest = Vector::Zero(n);
  p.isotropic = iso;
  p.noise_sigma = Vector::Zero(n);
  if (kind == "nonlinear") {
    p.noise_sigma = 0.05 * scale;
    tune_coupling(p, kTargetSigma * scale, rng);
  }
  return PlantModel(std::move(p));
}

}  // namespace binctl
