// Binary search over switch vectors: exhaustive enumeration of low-switch
// candidates, a wide genetic algorithm, and a local genetic algorithm seeded
// with the winners of the first two.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "binctl/rng.hpp"
#include "binctl/types.hpp"

namespace binctl {

/// Pure map from switch vector to a non-negative cost; lower is better.
struct CostFunction {
  std::function<double(const SwitchVector&)> evaluate;

  double operator()(const SwitchVector& b) const { return evaluate(b); }
};

struct GAParams {
  int wide_population = 400;
  int wide_generations = 5;
  int local_population = 60;
  int local_generations = 150;
  int crossover_segment_bits = 5;
  double crossover_base_prob = 0.1;
  double mutation_prob = 0.025;
  int seed_min_switches = 4;
  int exhaustive_max_switches = 3;
  std::uint64_t exhaustive_budget = 50'000'000;  ///< candidate cap for enumeration

  void validate() const;
};

enum class SearchStage { exhaustive, wide_ga, local_ga };

std::string to_string(SearchStage stage);

struct SearchResult {
  SwitchVector best_b;
  double best_cost = 0.0;
  std::uint64_t evaluations = 0;
  SearchStage source = SearchStage::exhaustive;
  /// Best-ever cost after initialization and after each generation (GA only).
  std::vector<double> best_history;
};

/// Actuators that may be switched; empty means all.
using ActuatorMask = std::vector<bool>;

/// Strict ordering used for every comparison between candidates: lower cost,
/// then fewer switches, then lexicographically smaller bit pattern.
bool better_candidate(double cost_a, const SwitchVector& a, double cost_b, const SwitchVector& b);

/// Sum_{j=0..k} C(m, j), saturating at UINT64_MAX.
std::uint64_t binomial_sum(std::size_t m, std::size_t k);

/// Evaluates every switch vector with at most `max_switches` ones.
SearchResult exhaustive_low_switch(const CostFunction& cost, std::size_t m, std::size_t max_switches = 3,
                                   const ActuatorMask& mask = {}, std::uint64_t budget = 50'000'000);

/// Roulette-wheel GA with segment crossover, per-bit mutation and elitism of
/// one. `injected` members are placed first in the initial population.
SearchResult ga_search(const CostFunction& cost, std::size_t m, int population, int generations,
                       const GAParams& params, Rng& rng, const std::vector<SwitchVector>& injected = {},
                       const ActuatorMask& mask = {});

/// Exhaustive + wide GA, then a local GA seeded with both winners.
SearchResult combined_search(const CostFunction& cost, std::size_t m, const GAParams& params, Rng& rng,
                             const ActuatorMask& mask = {});

}  // namespace binctl
