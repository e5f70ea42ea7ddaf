// Influence-vector algebra: state error, switch application, sign update of
// influence vectors, superposition and resolution error.
#pragma once

#include <functional>

#include "binctl/types.hpp"

namespace binctl {

/// x_e = x_d - x.
StateVector state_error(const StateVector& x_d, const StateVector& x);

/// u XOR b.
InputVector apply_switch(const InputVector& u, const SwitchVector& b);

/// +d_k while the actuator is OFF, -d_k once it is ON (the only move left).
Vector update_influence(const Vector& d_k, bool u_k);

/// Optional state/input dependent correction of column k, applied before the
/// sign update. Must return a vector of the same size.
using Linearizer =
    std::function<Vector(Eigen::Index k, const Vector& d_k, const InputVector& u, const StateVector& x)>;

InfluenceMatrix updated_jacobian(const InfluenceMatrix& J, const InputVector& u, const StateVector& x,
                                 const Linearizer& linearizer = {});

/// Linear prediction a = J~ b.
StateVector superpose(const InfluenceMatrix& J_tilde, const SwitchVector& b);

/// Resolution error J~ b - x_e.
StateVector residual(const InfluenceMatrix& J_tilde, const SwitchVector& b, const StateVector& x_e);

/// Throws ContractError unless every entry is finite.
void require_finite(const Vector& v, const char* what);

}  // namespace binctl
