#include "binctl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace binctl {

namespace {

constexpr double kFitnessDelta = 1e-9;

bool allowed(const ActuatorMask& mask, std::size_t k) { return mask.empty() || mask[k]; }

std::vector<std::size_t> allowed_indices(const ActuatorMask& mask, std::size_t m) {
  if (!mask.empty() && mask.size() != m) throw ContractError("search: mask length does not match actuator count");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < m; ++k)
    if (allowed(mask, k)) idx.push_back(k);
  return idx;
}

double checked_eval(const CostFunction& cost, const SwitchVector& b) {
  const double c = cost(b);
  if (std::isnan(c) || c < 0.0) throw ContractError("cost function returned a negative or NaN value");
  return c;
}

struct Member {
  SwitchVector b;
  double cost = 0.0;
};

SwitchVector random_seed_member(std::size_t m, const std::vector<std::size_t>& free_bits, std::size_t min_on,
                                Rng& rng) {
  const std::size_t need = std::min(min_on, free_bits.size());
  SwitchVector b(m);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    b = SwitchVector(m);
    for (auto k : free_bits) b.set(k, bernoulli(rng, 0.5));
    if (b.count() >= need) return b;
  }
  // Sparse search spaces: top up with randomly chosen free bits.
  std::vector<std::size_t> off;
  for (auto k : free_bits)
    if (!b[k]) off.push_back(k);
  std::shuffle(off.begin(), off.end(), rng);
  for (std::size_t j = 0; b.count() < need && j < off.size(); ++j) b.set(off[j], true);
  return b;
}

std::size_t roulette(const std::vector<double>& cumulative, Rng& rng) {
  const double r = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

void crossover(SwitchVector& a, SwitchVector& b, const GAParams& params, Rng& rng) {
  const std::size_t m = a.size();
  const auto seg = static_cast<std::size_t>(params.crossover_segment_bits);
  for (std::size_t i = 0; i < m; ++i) {
    if (!bernoulli(rng, params.crossover_base_prob)) continue;
    const std::size_t end = std::min(m, i + seg);  // clipped at the vector end
    for (std::size_t j = i; j < end; ++j) {
      const bool t = a[j];
      a.set(j, b[j]);
      b.set(j, t);
    }
  }
}

void mutate(SwitchVector& b, const GAParams& params, const ActuatorMask& mask, Rng& rng) {
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (bernoulli(rng, params.mutation_prob)) b.flip(k);
    if (!allowed(mask, k)) b.set(k, false);
  }
}

bool better(const Member& a, const Member& b) { return better_candidate(a.cost, a.b, b.cost, b.b); }

}  // namespace

void GAParams::validate() const {
  if (wide_population < 2 || local_population < 2) throw ContractError("GA: populations must be >= 2");
  if (wide_generations < 0 || local_generations < 0) throw ContractError("GA: generations must be >= 0");
  if (crossover_segment_bits < 1) throw ContractError("GA: crossover segment must be >= 1 bit");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(crossover_base_prob) || !prob(mutation_prob)) throw ContractError("GA: probabilities must be in [0,1]");
  if (seed_min_switches < 0 || exhaustive_max_switches < 0) throw ContractError("GA: switch counts must be >= 0");
}

std::string to_string(SearchStage stage) {
  switch (stage) {
    case SearchStage::exhaustive: return "exhaustive";
    case SearchStage::wide_ga: return "wide_ga";
    case SearchStage::local_ga: return "local_ga";
  }
  return "unknown";
}

bool better_candidate(double cost_a, const SwitchVector& a, double cost_b, const SwitchVector& b) {
  if (cost_a != cost_b) return cost_a < cost_b;
  const auto ca = a.count(), cb = b.count();
  if (ca != cb) return ca < cb;
  return a < b;
}

std::uint64_t binomial_sum(std::size_t m, std::size_t k) {
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 0;
  std::uint64_t c = 1;  // C(m, j)
  for (std::size_t j = 0; j <= std::min(k, m); ++j) {
    if (j > 0) {
      // c = c * (m - j + 1) / j, exact because C(m, j-1) * (m-j+1) is divisible by j.
      const std::uint64_t num = m - j + 1;
      if (c > cap / num) return cap;
      c = c * num / j;
    }
    if (total > cap - c) return cap;
    total += c;
  }
  return total;
}

SearchResult exhaustive_low_switch(const CostFunction& cost, std::size_t m, std::size_t max_switches,
                                   const ActuatorMask& mask, std::uint64_t budget) {
  if (m < 1) throw ContractError("exhaustive: m must be >= 1");
  if (max_switches > m) throw ContractError("exhaustive: max_switches exceeds m");
  const auto free_bits = allowed_indices(mask, m);
  const std::size_t k_max = std::min(max_switches, free_bits.size());
  const std::uint64_t candidates = binomial_sum(free_bits.size(), k_max);
  if (candidates > budget)
    throw BudgetError("exhaustive: " + std::to_string(candidates) + " candidates exceed budget " +
                      std::to_string(budget));

  SearchResult res;
  res.source = SearchStage::exhaustive;
  res.best_b = SwitchVector(m);
  res.best_cost = checked_eval(cost, res.best_b);
  res.evaluations = 1;

  std::vector<std::size_t> pick;
  for (std::size_t s = 1; s <= k_max; ++s) {
    pick.resize(s);
    for (std::size_t j = 0; j < s; ++j) pick[j] = j;
    while (true) {
      SwitchVector b(m);
      for (auto j : pick) b.set(free_bits[j], true);
      const double c = checked_eval(cost, b);
      ++res.evaluations;
      if (better_candidate(c, b, res.best_cost, res.best_b)) {
        res.best_cost = c;
        res.best_b = std::move(b);
      }
      // Next combination of s indices out of free_bits.size().
      std::size_t i = s;
      while (i > 0 && pick[i - 1] == free_bits.size() - s + (i - 1)) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < s; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return res;
}

SearchResult ga_search(const CostFunction& cost, std::size_t m, int population, int generations,
                       const GAParams& params, Rng& rng, const std::vector<SwitchVector>& injected,
                       const ActuatorMask& mask) {
  params.validate();
  if (population < 2) throw ContractError("GA: population must be >= 2");
  if (m < 1) throw ContractError("GA: m must be >= 1");
  const auto free_bits = allowed_indices(mask, m);
  const auto pop_size = static_cast<std::size_t>(population);

  SearchResult res;
  std::vector<Member> pop;
  pop.reserve(pop_size);
  for (const auto& b : injected) {
    if (pop.size() == pop_size) break;
    if (b.size() != m) throw ContractError("GA: injected member has wrong length");
    SwitchVector masked = b;
    for (std::size_t k = 0; k < m; ++k)
      if (!allowed(mask, k)) masked.set(k, false);
    pop.push_back({std::move(masked), 0.0});
  }
  while (pop.size() < pop_size)
    pop.push_back({random_seed_member(m, free_bits, static_cast<std::size_t>(params.seed_min_switches), rng), 0.0});
  for (auto& mem : pop) {
    mem.cost = checked_eval(cost, mem.b);
    ++res.evaluations;
  }

  Member best = *std::min_element(pop.begin(), pop.end(), better);
  res.best_history.push_back(best.cost);

  std::vector<double> cumulative(pop_size);
  for (int g = 0; g < generations; ++g) {
    const Member elite = *std::min_element(pop.begin(), pop.end(), better);
    double acc = 0.0;
    for (std::size_t i = 0; i < pop_size; ++i) {
      acc += 1.0 / (pop[i].cost + kFitnessDelta);
      cumulative[i] = acc;
    }
    std::vector<Member> next;
    next.reserve(pop_size);
    next.push_back(elite);
    while (next.size() < pop_size) {
      SwitchVector c1 = pop[roulette(cumulative, rng)].b;
      SwitchVector c2 = pop[roulette(cumulative, rng)].b;
      crossover(c1, c2, params, rng);
      mutate(c1, params, mask, rng);
      mutate(c2, params, mask, rng);
      next.push_back({std::move(c1), 0.0});
      if (next.size() < pop_size) next.push_back({std::move(c2), 0.0});
    }
    for (std::size_t i = 1; i < next.size(); ++i) {
      next[i].cost = checked_eval(cost, next[i].b);
      ++res.evaluations;
      if (better(next[i], best)) best = next[i];
    }
    pop = std::move(next);
    res.best_history.push_back(best.cost);
  }

  res.best_b = best.b;
  res.best_cost = best.cost;
  return res;
}

SearchResult combined_search(const CostFunction& cost, std::size_t m, const GAParams& params, Rng& rng,
                             const ActuatorMask& mask) {
  params.validate();
  // Streams are split up front so stage order does not change results.
  Rng wide_rng = split(rng);
  Rng local_rng = split(rng);

  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(params.exhaustive_max_switches), m);
  SearchResult ex = exhaustive_low_switch(cost, m, k, mask, params.exhaustive_budget);
  SearchResult wide = ga_search(cost, m, params.wide_population, params.wide_generations, params, wide_rng, {}, mask);
  wide.source = SearchStage::wide_ga;
  SearchResult local = ga_search(cost, m, params.local_population, params.local_generations, params, local_rng,
                                 {ex.best_b, wide.best_b}, mask);
  local.source = SearchStage::local_ga;

  SearchResult out = ex;
  if (better_candidate(wide.best_cost, wide.best_b, out.best_cost, out.best_b)) out = wide;
  if (better_candidate(local.best_cost, local.best_b, out.best_cost, out.best_b)) out = local;
  out.evaluations = ex.evaluations + wide.evaluations + local.evaluations;
  out.best_history = local.best_history;
  return out;
}

}  // namespace binctl
