// Shared domain types for binary-actuated robot control.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "binctl/errors.hpp"

namespace binctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Real-valued n-DOF output of the robot (mixed units allowed per DOF).
using StateVector = Eigen::VectorXd;

/// Fixed-length vector of 0/1 values. The tag keeps actuator inputs and
/// switch commands from being mixed up at call sites.
template <class Tag>
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t m) : bits_(m, 0) {}
  BitVector(std::initializer_list<int> values) {
    bits_.reserve(values.size());
    for (int v : values) push(v);
  }
  explicit BitVector(const std::vector<std::uint8_t>& values) {
    bits_.reserve(values.size());
    for (auto v : values) push(v);
  }

  static BitVector unit(std::size_t m, std::size_t k) {
    BitVector b(m);
    b.set(k, true);
    return b;
  }
  static BitVector ones(std::size_t m) {
    BitVector b(m);
    for (auto& v : b.bits_) v = 1;
    return b;
  }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t k) const { return bits_[k] != 0; }
  void set(std::size_t k, bool on) { bits_.at(k) = on ? 1 : 0; }
  void flip(std::size_t k) { bits_.at(k) ^= 1; }

  /// Number of ones (for a switch vector this is the switching count s_n).
  std::size_t count() const {
    std::size_t c = 0;
    for (auto v : bits_) c += v;
    return c;
  }
  bool none() const { return count() == 0; }

  const std::vector<std::uint8_t>& raw() const { return bits_; }

  /// "0110..." with bit 0 first.
  std::string str() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto v : bits_) s.push_back(v ? '1' : '0');
    return s;
  }
  static BitVector parse(const std::string& s) {
    BitVector b;
    for (char c : s) {
      if (c != '0' && c != '1') throw ContractError("bit string must contain only 0/1: " + s);
      b.bits_.push_back(c == '1' ? 1 : 0);
    }
    return b;
  }

  Vector as_real() const {
    Vector v(static_cast<Eigen::Index>(bits_.size()));
    for (std::size_t k = 0; k < bits_.size(); ++k) v[static_cast<Eigen::Index>(k)] = bits_[k];
    return v;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;
  friend auto operator<=>(const BitVector& a, const BitVector& b) { return a.bits_ <=> b.bits_; }

 private:
  void push(int v) {
    if (v != 0 && v != 1) throw ContractError("bit value must be 0 or 1");
    bits_.push_back(static_cast<std::uint8_t>(v));
  }

  std::vector<std::uint8_t> bits_;
};

struct InputTag {};
struct SwitchTag {};

/// Current ON/OFF state of the m actuators.
using InputVector = BitVector<InputTag>;
/// Toggle command applied to an InputVector by exclusive-or.
using SwitchVector = BitVector<SwitchTag>;

enum class InfluenceKind { displacement, force };

/// n x m matrix whose column k is actuator k's influence vector.
struct InfluenceMatrix {
  Matrix columns;
  InfluenceKind kind = InfluenceKind::displacement;

  Eigen::Index dofs() const { return columns.rows(); }
  Eigen::Index actuators() const { return columns.cols(); }
};

/// Desired state with per-DOF tolerance box and weighting. A zero weight
/// removes the DOF from costs, stopping tests and probabilities.
struct TargetSpec {
  StateVector x_d;
  Vector tolerance;
  Vector weights;

  void validate() const;
  bool weighted(Eigen::Index i) const { return weights[i] > 0.0; }
  Eigen::Index weighted_count() const;
  /// True when every weighted DOF satisfies |x_e,i| < tolerance_i.
  bool within(const StateVector& x_e) const;
};

/// Approximation-error dispersion. The shared form scales one sigma vector by
/// sqrt(s_n); the per-actuator form sums the selected variances.
class DispersionModel {
 public:
  DispersionModel() = default;
  static DispersionModel shared(const Vector& sigma, std::size_t actuators);
  static DispersionModel per_actuator(const Matrix& sigma_by_actuator);

  bool is_shared() const { return shared_.has_value(); }
  const std::optional<Vector>& shared_sigma() const { return shared_; }
  /// n x m, column k is sigma_eps,k.
  const Matrix& per_actuator_sigma() const { return per_actuator_; }
  Eigen::Index dofs() const { return per_actuator_.rows(); }
  Eigen::Index actuators() const { return per_actuator_.cols(); }

  /// Predicted per-DOF standard deviation for switch vector b.
  Vector sigma(const SwitchVector& b) const;
  /// Predicted per-DOF standard deviation for a switch count (shared form).
  Vector sigma_for_count(std::size_t s_n) const;

 private:
  std::optional<Vector> shared_;
  Matrix per_actuator_;
};

}  // namespace binctl
