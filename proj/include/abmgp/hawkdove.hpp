#pragma once

// Hawk-dove resource contention. Agents sit at locations holding at most two
// agents, each demands an amount of the location's resource, and if the
// joint demand exceeds the resource nobody there gets anything. An agent
// that received nothing moves to a random location with room next tick.

#include <cstdint>
#include <string>
#include <vector>

#include "abmgp/expr.hpp"
#include "abmgp/refdata.hpp"

namespace abmgp {

struct HDConfig {
  int n_agents = 60;
  int n_locations = 31;
  double resource = 9.0;  // per location, replenished every tick
  int ticks = 100;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Variables a hawk-dove rule may read, in binding order.
const std::vector<std::string>& hawkdove_variables();

/// Sorted ascending final totals, one per agent.
using WealthDistribution = std::vector<double>;

struct HDRun {
  std::vector<double> totals;                 // by agent id
  std::vector<std::vector<double>> receipts;  // [tick][agent]
  int max_occupancy = 0;
  long long conflicts = 0;  // location-ticks with joint demand above supply
};

/// Full record of one run. Throws DataError (with the rule text) if the
/// rule reads anything outside hawkdove_variables().
HDRun run_detailed(const HDConfig& config, const Rule& rule);
WealthDistribution run(const HDConfig& config, const Rule& rule);

/// 1 / (1 + mean MSE) over `repeats` runs seeded derive_seed(config.seed, {r}).
double hd_fitness(const Rule& rule, const WealthDistribution& reference, const HDConfig& config, int repeats = 3);

enum class ReferenceKind { Equality, TwoTier, ParetoLike };

struct ReferenceParams {
  std::optional<double> value;  // equality level; default ticks
  double split = 0.5;           // two-tier: fraction of agents at `low`
  double low = 100.0;
  double high = 900.0;
  double shape = 1.16;          // pareto-like tail index
  std::optional<double> mean;   // pareto-like mean; default ticks
};

/// Throws ConfigError on invalid parameters.
WealthDistribution make_reference(ReferenceKind kind, const HDConfig& config, const ReferenceParams& params = {});
ReferenceKind reference_kind_from_name(const std::string& name);

/// Reachable ranges of the rule variables, with the ordering facts
/// totalResource >= previousTook, resource >= previousTook and
/// resource >= previousResource.
VarRanges hawkdove_ranges(const HDConfig& config);

/// Terminals = the seven variables, constants 0..9, every operator.
Grammar hawkdove_grammar(const HDConfig& config, int max_depth = 8);

ReferenceDataset distribution_dataset(const WealthDistribution& wealth, const std::string& provenance);
WealthDistribution distribution_from_dataset(const ReferenceDataset& data);

}  // namespace abmgp
