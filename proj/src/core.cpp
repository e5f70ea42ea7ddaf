#include "binctl/core.hpp"

#include <cmath>
#include <string>

namespace binctl {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw ContractError(std::string(what) + " contains non-finite entries");
}

void TargetSpec::validate() const {
  if (x_d.size() < 1) throw ContractError("target: empty state");
  if (tolerance.size() != x_d.size() || weights.size() != x_d.size())
    throw ContractError("target: tolerance/weights must match state dimension");
  require_finite(x_d, "target x_d");
  bool any = false;
  for (Eigen::Index i = 0; i < x_d.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ContractError("target: weights must be >= 0");
    if (weights[i] > 0.0) {
      any = true;
      if (!(tolerance[i] > 0.0)) throw ContractError("target: tolerance must be > 0 on weighted DOFs");
    }
  }
  if (!any) throw ContractError("target: at least one weight must be positive");
}

Eigen::Index TargetSpec::weighted_count() const {
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) c += weights[i] > 0.0 ? 1 : 0;
  return c;
}

bool TargetSpec::within(const StateVector& x_e) const {
  for (Eigen::Index i = 0; i < x_e.size(); ++i)
    if (weighted(i) && !(std::abs(x_e[i]) < tolerance[i])) return false;
  return true;
}

DispersionModel DispersionModel::shared(const Vector& sigma, std::size_t actuators) {
  if (!sigma.allFinite() || (sigma.array() < 0.0).any())
    throw ContractError("dispersion: sigma must be finite and non-negative");
  DispersionModel d;
  d.shared_ = sigma;
  d.per_actuator_ = sigma.replicate(1, static_cast<Eigen::Index>(actuators));
  return d;
}

DispersionModel DispersionModel::per_actuator(const Matrix& sigma_by_actuator) {
  if (!sigma_by_actuator.allFinite() || (sigma_by_actuator.array() < 0.0).any())
    throw ContractError("dispersion: sigma must be finite and non-negative");
  DispersionModel d;
  d.per_actuator_ = sigma_by_actuator;
  return d;
}

Vector DispersionModel::sigma(const SwitchVector& b) const {
  if (static_cast<Eigen::Index>(b.size()) != actuators())
    throw ContractError("dispersion: switch vector length mismatch");
  if (shared_) return *shared_ * std::sqrt(static_cast<double>(b.count()));
  Vector var = Vector::Zero(dofs());
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k]) var += per_actuator_.col(static_cast<Eigen::Index>(k)).array().square().matrix();
  return var.array().sqrt();
}

Vector DispersionModel::sigma_for_count(std::size_t s_n) const {
  Vector base;
  if (shared_) {
    base = *shared_;
  } else {
    // RMS over actuators stands in for the shared contribution.
    base = (per_actuator_.array().square().rowwise().mean()).sqrt();
  }
  return base * std::sqrt(static_cast<double>(s_n));
}

StateVector state_error(const StateVector& x_d, const StateVector& x) {
  if (x_d.size() != x.size()) throw ContractError("state_error: dimension mismatch");
  return x_d - x;
}

InputVector apply_switch(const InputVector& u, const SwitchVector& b) {
  if (u.size() != b.size()) throw ContractError("apply_switch: length mismatch");
  InputVector out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out.set(k, u[k] != b[k]);
  return out;
}

Vector update_influence(const Vector& d_k, bool u_k) { return u_k ? Vector(-d_k) : d_k; }

InfluenceMatrix updated_jacobian(const InfluenceMatrix& J, const InputVector& u, const StateVector& x,
                                 const Linearizer& linearizer) {
  if (static_cast<Eigen::Index>(u.size()) != J.actuators())
    throw ContractError("updated_jacobian: input length does not match actuator count");
  if (x.size() != J.dofs()) throw ContractError("updated_jacobian: state dimension mismatch");
  InfluenceMatrix out{Matrix(J.dofs(), J.actuators()), J.kind};
  for (Eigen::Index k = 0; k < J.actuators(); ++k) {
    Vector col = J.columns.col(k);
    if (linearizer) {
      col = linearizer(k, col, u, x);
      if (col.size() != J.dofs() || !col.allFinite())
        throw CalibrationError("linearizer returned a non-finite or mis-sized influence vector for actuator " +
                               std::to_string(k));
    }
    out.columns.col(k) = update_influence(col, u[static_cast<std::size_t>(k)]);
  }
  return out;
}

StateVector superpose(const InfluenceMatrix& J_tilde, const SwitchVector& b) {
  if (static_cast<Eigen::Index>(b.size()) != J_tilde.actuators())
    throw ContractError("superpose: switch length does not match actuator count");
  StateVector a = StateVector::Zero(J_tilde.dofs());
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k]) a += J_tilde.columns.col(static_cast<Eigen::Index>(k));
  return a;
}

StateVector residual(const InfluenceMatrix& J_tilde, const SwitchVector& b, const StateVector& x_e) {
  if (x_e.size() != J_tilde.dofs()) throw ContractError("residual: state dimension mismatch");
  return superpose(J_tilde, b) - x_e;
}

}  // namespace binctl
