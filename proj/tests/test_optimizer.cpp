#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>

#include "binctl/optimizer.hpp"

using namespace binctl;

namespace {

SwitchVector from_code(std::uint64_t code, std::size_t m) {
  SwitchVector b(m);
  for (std::size_t k = 0; k < m; ++k) b.set(k, (code >> k) & 1U);
  return b;
}

// Random quadratic-plus-linear cost; minimum is generally not at low switch counts.
CostFunction random_cost(std::size_t m, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix Jm(4, static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < Jm.size(); ++i) Jm.data()[i] = g(rng);
  Vector target(4);
  for (Eigen::Index i = 0; i < 4; ++i) target[i] = 2.0 * g(rng);
  return CostFunction{[Jm, target](const SwitchVector& b) { return (Jm * b.as_real() - target).norm(); }};
}

struct Oracle {
  SwitchVector b;
  double cost = std::numeric_limits<double>::infinity();
};

// Plain scan over all codes, tie-broken by (cost, popcount, bit string).
Oracle scan(const CostFunction& cost, std::size_t m, std::size_t max_on = 64, std::uint64_t forbidden = 0) {
  Oracle best;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << m); ++code) {
    if (static_cast<std::size_t>(std::popcount(code)) > max_on || (code & forbidden)) continue;
    const SwitchVector b = from_code(code, m);
    const double c = cost(b);
    const bool take = c < best.cost ||
                      (c == best.cost && (b.count() < best.b.count() || (b.count() == best.b.count() && b < best.b)));
    if (take) best = {b, c};
  }
  return best;
}

}  // namespace

TEST_CASE("binomial_sum against Pascal's triangle") {
  std::vector<std::vector<std::uint64_t>> pascal(41, std::vector<std::uint64_t>(41, 0));
  for (std::size_t n = 0; n <= 40; ++n) {
    pascal[n][0] = 1;
    for (std::size_t k = 1; k <= n; ++k) pascal[n][k] = pascal[n - 1][k - 1] + (k <= n - 1 ? pascal[n - 1][k] : 0);
  }
  for (std::size_t n = 0; n <= 40; ++n)
    for (std::size_t k = 0; k <= n + 2; ++k) {
      std::uint64_t s = 0;
      for (std::size_t j = 0; j <= std::min(k, n); ++j) s += pascal[n][j];
      REQUIRE(binomial_sum(n, k) == s);
    }
  CHECK(binomial_sum(20, 3) == 1 + 20 + 190 + 1140);
  CHECK(binomial_sum(200, 100) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("better_candidate is a strict total order") {
  const SwitchVector a{1, 0, 0}, b{0, 1, 0}, c{1, 1, 0};
  CHECK(better_candidate(1.0, a, 2.0, SwitchVector{0, 0, 0}));
  CHECK(better_candidate(1.0, a, 1.0, c));   // fewer switches
  CHECK(better_candidate(1.0, b, 1.0, a));   // "010" < "100"
  CHECK_FALSE(better_candidate(1.0, a, 1.0, a));
  CHECK_FALSE(better_candidate(1.0, a, 1.0, b));
}

TEST_CASE("exhaustive search equals a scan over the same low-switch set") {
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = 6 + static_cast<std::size_t>(t % 5);
    const CostFunction cost = random_cost(m, rng);
    for (std::size_t k : {0, 1, 2, 3}) {
      const SearchResult r = exhaustive_low_switch(cost, m, k);
      const Oracle o = scan(cost, m, k);
      REQUIRE(r.best_b == o.b);
      REQUIRE(r.best_cost == o.cost);
      REQUIRE(r.evaluations == binomial_sum(m, k));
    }
  }
}

TEST_CASE("exhaustive search honours the actuator mask and budget") {
  Rng rng(2);
  const CostFunction cost = random_cost(8, rng);
  ActuatorMask mask(8, true);
  mask[1] = mask[4] = false;
  const SearchResult r = exhaustive_low_switch(cost, 8, 3, mask);
  CHECK_FALSE(r.best_b[1]);
  CHECK_FALSE(r.best_b[4]);
  CHECK(r.evaluations == binomial_sum(6, 3));
  CHECK(r.best_cost == scan(cost, 8, 3, (1U << 1) | (1U << 4)).cost);
  CHECK_THROWS_AS(exhaustive_low_switch(cost, 8, 3, {}, 10), BudgetError);
  CHECK_THROWS_AS(exhaustive_low_switch(cost, 8, 3, ActuatorMask(5, true)), ContractError);
}

TEST_CASE("GA best-so-far is monotone and masked bits stay clear") {
  Rng rng(3);
  GAParams p;
  for (int t = 0; t < 20; ++t) {
    const CostFunction cost = random_cost(16, rng);
    ActuatorMask mask(16, true);
    mask[3] = mask[7] = mask[11] = false;
    const SearchResult r = ga_search(cost, 16, 30, 20, p, rng, {}, mask);
    for (std::size_t g = 1; g < r.best_history.size(); ++g) REQUIRE(r.best_history[g] <= r.best_history[g - 1]);
    REQUIRE(r.best_history.size() == 21);
    REQUIRE(r.best_cost == doctest::Approx(cost(r.best_b)));
    REQUIRE_FALSE(r.best_b[3]);
    REQUIRE_FALSE(r.best_b[7]);
    REQUIRE_FALSE(r.best_b[11]);
  }
}

TEST_CASE("an injected optimum survives by elitism") {
  Rng rng(4);
  GAParams p;
  for (int t = 0; t < 10; ++t) {
    const CostFunction cost = random_cost(10, rng);
    const Oracle o = scan(cost, 10);
    const SearchResult r = ga_search(cost, 10, 20, 30, p, rng, {o.b});
    REQUIRE(r.best_b == o.b);
  }
}

TEST_CASE("combined search is never worse than its exhaustive stage and is reproducible") {
  Rng rng(5);
  GAParams p;
  for (int t = 0; t < 10; ++t) {
    const CostFunction cost = random_cost(12, rng);
    const SearchResult ex = exhaustive_low_switch(cost, 12, 3);
    Rng r1(77 + t), r2(77 + t);
    const SearchResult a = combined_search(cost, 12, p, r1);
    const SearchResult b = combined_search(cost, 12, p, r2);
    REQUIRE(a.best_cost <= ex.best_cost);
    REQUIRE(a.best_b == b.best_b);
    REQUIRE(a.evaluations == b.evaluations);
    REQUIRE(a.best_cost >= scan(cost, 12).cost);
  }
}

TEST_CASE("search rejects bad costs and parameters") {
  const CostFunction negative{[](const SwitchVector&) { return -1.0; }};
  Rng rng(6);
  CHECK_THROWS_AS(exhaustive_low_switch(negative, 4, 1), ContractError);
  const CostFunction nan{[](const SwitchVector&) { return std::nan(""); }};
  CHECK_THROWS_AS(combined_search(nan, 4, GAParams{}, rng), ContractError);
  GAParams bad;
  bad.mutation_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = GAParams{};
  bad.wide_population = 1;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("exhaustive stage on 20 actuators: evaluation count and trivial optima") {
  const CostFunction count{[](const SwitchVector& b) { return static_cast<double>(b.count()); }};
  const SearchResult r = exhaustive_low_switch(count, 20, 3);
  CHECK(r.evaluations == 1351);
  CHECK(r.best_b.none());

  Rng rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix cols(4, 20);
  for (Eigen::Index i = 0; i < cols.size(); ++i) cols.data()[i] = g(rng);
  const Vector target = cols.col(7);
  const CostFunction exact{[cols, target](const SwitchVector& b) { return (cols * b.as_real() - target).norm(); }};
  const SearchResult e = exhaustive_low_switch(exact, 20, 3);
  CHECK(e.best_b == SwitchVector::unit(20, 7));
  CHECK(e.best_cost == doctest::Approx(0.0));
}

TEST_CASE("a single wide GA gets within 10% of the optimum on small instances") {
  Rng rng(10);
  GAParams p;
  int good = 0;
  for (int t = 0; t < 100; ++t) {
    const CostFunction cost = random_cost(8, rng);
    const SearchResult r = ga_search(cost, 8, p.wide_population, p.wide_generations, p, rng);
    good += r.best_cost <= 1.1 * scan(cost, 8).cost;
  }
  CHECK(good >= 90);
}
