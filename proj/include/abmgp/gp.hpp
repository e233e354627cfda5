#pragma once

// Generational GP over Rules: ramped half-and-half initialisation,
// roulette-wheel selection, reproduction / subtree mutation / subtree
// crossover, elitism, and three stopping conditions.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abmgp/expr.hpp"

namespace abmgp {

struct GPConfig {
  int population_size = 200;
  int max_generations = 50;  // generations scored and logged, the initial one included
  double p_reproduce = 0.1;
  double p_mutate = 0.2;
  double p_crossover = 0.7;
  int elitism = 1;
  int max_depth = 8;
  std::uint64_t seed = 1;
  std::optional<double> target_fitness;
  std::optional<int> stagnation_limit;
  int hall_of_fame_size = 10;
  int workers = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Bare: the rule is a single expression. Conditional: IF c THEN a ELSE b.
enum class RuleShape { Bare, Conditional };

struct Individual {
  Rule rule;
  std::optional<double> fitness;
};

using Population = std::vector<Individual>;

struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  std::string best_rule;
};

struct ScoredRule {
  Rule rule;
  double fitness = 0.0;
};

enum class GeneticOp { Reproduce = 0, Mutate = 1, Crossover = 2 };

struct EvolutionResult {
  std::vector<GenerationRecord> log;
  std::vector<ScoredRule> hall_of_fame;  // best first, distinct rule text
  Rule best_raw;
  Rule best_pruned;
  double best_fitness = 0.0;
  std::uint64_t seed = 0;
  long long evaluations = 0;  // fitness function calls (repeats are cached)
  std::string stop_reason;    // max_generations | target_fitness | stagnation
  std::array<long long, 3> operator_counts{};  // indexed by GeneticOp
  Population final_population;
};

/// Must be deterministic and safe to call concurrently. Values must be
/// finite and >= 0; larger is better.
using FitnessFn = std::function<double(const Rule&)>;
using Pruner = std::function<Rule(const Rule&)>;

Rule random_rule(const Grammar& grammar, RuleShape shape, Rng& rng);

/// Individual i is drawn from the stream derive_seed(seed, {0, i}).
Population init_population(const GPConfig& config, const Grammar& grammar, RuleShape shape);

/// Roulette wheel; uniform when every fitness is 0. Throws ConfigError on
/// an empty span.
std::size_t select_proportional(std::span<const double> fitness, Rng& rng);

/// Replaces one uniformly chosen node's subtree with a grown random tree
/// that fits the remaining depth budget of grammar.max_depth.
Individual mutate(const Individual& ind, const Grammar& grammar, Rng& rng);

/// Swaps a uniformly chosen subtree of `a` with one from the same rule slot
/// of `b`. Children deeper than max_depth cause a retry; after 10 failed
/// tries the parents are returned unchanged.
std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, Rng& rng, int max_depth);

EvolutionResult evolve(const GPConfig& config, const Grammar& grammar, RuleShape shape, const FitnessFn& fitness,
                       const Pruner& pruner = {});

}  // namespace abmgp
