#include <doctest.h>

#include "binctl/core.hpp"
#include "binctl/rng.hpp"

using namespace binctl;

namespace {

template <class Bits>
Bits from_code(std::uint64_t code, std::size_t m) {
  Bits b(m);
  for (std::size_t k = 0; k < m; ++k) b.set(k, (code >> k) & 1U);
  return b;
}

Matrix random_matrix(Eigen::Index n, Eigen::Index m, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(n, m);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a;
}

}  // namespace

TEST_CASE("state error is desired minus measured") {
  StateVector x_d(2), x(2);
  x_d << 1.0, 2.0;
  x << 0.5, 3.0;
  const StateVector e = state_error(x_d, x);
  CHECK(e[0] == doctest::Approx(0.5));
  CHECK(e[1] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(state_error(x_d, StateVector::Zero(3)), ContractError);
}

TEST_CASE("apply_switch is an involution (exhaustive for m <= 8)") {
  for (std::size_t m = 1; m <= 8; ++m) {
    const std::uint64_t count = std::uint64_t{1} << m;
    for (std::uint64_t cu = 0; cu < count; ++cu)
      for (std::uint64_t cb = 0; cb < count; ++cb) {
        const auto u = from_code<InputVector>(cu, m);
        const auto b = from_code<SwitchVector>(cb, m);
        const InputVector once = apply_switch(u, b);
        REQUIRE(apply_switch(once, b) == u);
        // Bitwise XOR against an independent integer oracle.
        REQUIRE(once == from_code<InputVector>(cu ^ cb, m));
      }
  }
}

TEST_CASE("apply_switch is an involution (randomized, m = 40)") {
  Rng rng(17);
  for (int t = 0; t < 500; ++t) {
    InputVector u(40);
    SwitchVector b(40);
    for (std::size_t k = 0; k < 40; ++k) {
      u.set(k, bernoulli(rng, 0.5));
      b.set(k, bernoulli(rng, 0.3));
    }
    REQUIRE(apply_switch(apply_switch(u, b), b) == u);
  }
}

TEST_CASE("apply_switch examples") {
  CHECK(apply_switch(InputVector{0, 0, 0}, SwitchVector{0, 1, 1}) == InputVector{0, 1, 1});
  CHECK(apply_switch(InputVector{1, 0, 1}, SwitchVector{1, 1, 0}) == InputVector{0, 1, 1});
  CHECK(apply_switch(InputVector{1, 1}, SwitchVector{0, 0}) == InputVector{1, 1});
  CHECK_THROWS_AS(apply_switch(InputVector{1, 1}, SwitchVector{0, 0, 1}), ContractError);
}

TEST_CASE("update_influence flips the sign of ON actuators only") {
  Vector d(3);
  d << 1.0, -2.0, 0.5;
  CHECK(update_influence(d, false) == d);
  CHECK(update_influence(d, true) == -d);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vector v = random_matrix(4, 1, rng).col(0);
    for (bool on : {false, true}) REQUIRE(update_influence(v, on).cwiseAbs() == v.cwiseAbs());
  }
}

TEST_CASE("updated_jacobian applies the sign update column by column") {
  Rng rng(5);
  const InfluenceMatrix J{random_matrix(4, 6, rng), InfluenceKind::displacement};
  const StateVector x = StateVector::Zero(4);

  const InfluenceMatrix all_on = updated_jacobian(J, InputVector::ones(6), x);
  CHECK(all_on.columns == -J.columns);
  CHECK(updated_jacobian(J, InputVector(6), x).columns == J.columns);

  const InputVector u{1, 0, 0, 1, 0, 1};
  const InfluenceMatrix Jt = updated_jacobian(J, u, x);
  for (Eigen::Index k = 0; k < 6; ++k)
    CHECK(Jt.columns.col(k) == update_influence(J.columns.col(k), u[static_cast<std::size_t>(k)]));
}

TEST_CASE("updated_jacobian applies the linearizer before the sign flip") {
  Matrix cols(2, 2);
  cols << 1.0, 2.0, 3.0, 4.0;
  const InfluenceMatrix J{cols, InfluenceKind::displacement};
  const Linearizer scale_by_index = [](Eigen::Index k, const Vector& d, const InputVector&, const StateVector&) {
    return Vector((static_cast<double>(k) + 2.0) * d);
  };
  const InfluenceMatrix Jt = updated_jacobian(J, InputVector{0, 1}, StateVector::Zero(2), scale_by_index);
  CHECK(Jt.columns(0, 0) == doctest::Approx(2.0));
  CHECK(Jt.columns(1, 0) == doctest::Approx(6.0));
  CHECK(Jt.columns(0, 1) == doctest::Approx(-6.0));
  CHECK(Jt.columns(1, 1) == doctest::Approx(-12.0));

  const Linearizer broken = [](Eigen::Index, const Vector& d, const InputVector&, const StateVector&) {
    return Vector(d * std::numeric_limits<double>::quiet_NaN());
  };
  CHECK_THROWS_AS(updated_jacobian(J, InputVector{0, 0}, StateVector::Zero(2), broken), CalibrationError);
}

TEST_CASE("superpose examples") {
  Matrix cols(2, 3);
  cols << 1, 0, 1, 0, 1, 1;
  const InfluenceMatrix J{cols, InfluenceKind::displacement};
  const StateVector a = superpose(J, SwitchVector{1, 0, 1});
  CHECK(a[0] == 2.0);
  CHECK(a[1] == 1.0);
  CHECK(superpose(J, SwitchVector{0, 0, 0}).isZero(0.0));
  CHECK(superpose(J, SwitchVector::unit(3, 1)) == J.columns.col(1));
}

TEST_CASE("superpose is additive over disjoint switch vectors") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const InfluenceMatrix J{random_matrix(4, 12, rng), InfluenceKind::displacement};
    SwitchVector b1(12), b2(12), both(12);
    for (std::size_t k = 0; k < 12; ++k) {
      const int pick = std::uniform_int_distribution<int>(0, 2)(rng);
      b1.set(k, pick == 1);
      b2.set(k, pick == 2);
      both.set(k, pick != 0);
    }
    REQUIRE((superpose(J, both) - superpose(J, b1) - superpose(J, b2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("residual is superpose minus x_e on the same arithmetic path") {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const InfluenceMatrix J{random_matrix(4, 10, rng), InfluenceKind::displacement};
    SwitchVector b(10);
    for (std::size_t k = 0; k < 10; ++k) b.set(k, bernoulli(rng, 0.5));
    const StateVector x_e = random_matrix(4, 1, rng).col(0);
    REQUIRE(residual(J, b, x_e) == superpose(J, b) - x_e);
  }
}

TEST_CASE("bit vectors parse, print and count") {
  const auto b = SwitchVector::parse("01101");
  CHECK(b.size() == 5);
  CHECK(b.count() == 3);
  CHECK(b.str() == "01101");
  CHECK_THROWS_AS(SwitchVector::parse("0120"), ContractError);
  CHECK_THROWS_AS((SwitchVector{0, 2}), ContractError);
}

TEST_CASE("target spec validation and tolerance test") {
  TargetSpec t;
  t.x_d = StateVector::Zero(3);
  t.tolerance = Vector::Constant(3, 0.5);
  t.weights = Vector::Zero(3);
  CHECK_THROWS_AS(t.validate(), ContractError);
  t.weights << 1, 1, 0;
  CHECK_NOTHROW(t.validate());
  StateVector e(3);
  e << 0.4, -0.49, 10.0;
  CHECK(t.within(e));
  e[1] = -0.5;
  CHECK_FALSE(t.within(e));
  t.tolerance[0] = 0.0;
  CHECK_THROWS_AS(t.validate(), ContractError);
}

TEST_CASE("dispersion model: shared law and per-actuator variance sum agree when contributions are equal") {
  Vector sigma(2);
  sigma << 0.35, 0.025;
  const auto shared = DispersionModel::shared(sigma, 6);
  const auto per = DispersionModel::per_actuator(sigma.replicate(1, 6));
  Rng rng(19);
  for (int t = 0; t < 50; ++t) {
    SwitchVector b(6);
    for (std::size_t k = 0; k < 6; ++k) b.set(k, bernoulli(rng, 0.5));
    const double s = static_cast<double>(b.count());
    const Vector expect = sigma * std::sqrt(s);
    REQUIRE((shared.sigma(b) - expect).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((per.sigma(b) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(shared.sigma_for_count(4)[0] == doctest::Approx(0.7));
}
