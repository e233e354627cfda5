#pragma once

// Civil-violence (Rebellion) model on a torus grid. Citizens riot when
// grievance minus risk-weighted arrest probability exceeds a threshold and
// cops jail rioters. Every tick runs three steps over all agents in a fresh
// random order: M (move), A (activate), C (enforce). Each agent's variables
// are captured just before it acts in each step, producing one dataset row
// per agent per tick.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abmgp/expr.hpp"
#include "abmgp/refdata.hpp"

namespace abmgp {

struct RebConfig {
  int width = 33;
  int height = 33;
  double citizen_density = 0.70;
  double cop_density = 0.04;
  double legitimacy = 0.82;
  int max_jail_term = 30;
  int vision = 7;
  double threshold = 0.1;
  double arrest_constant = 2.3;
  int ticks = 40;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

struct Trace {
  std::vector<long long> quiet;
  std::vector<long long> active;
  std::vector<long long> jailed;

  std::size_t ticks() const noexcept { return active.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

enum class RebStep { M = 0, A = 1, C = 2 };

/// Dataset schema: identifiers, the 38 variables, then the 3 labels.
const std::vector<std::pair<std::string, ColumnKind>>& rebellion_schema();
/// The 38 non-label, non-identifier variables.
const std::vector<std::string>& rebellion_variables();
/// Names a rule for `step` may read: the variables captured up to that
/// step plus the per-tick ones, and breed.
const std::vector<std::string>& rebellion_terminals(RebStep step);
std::string label_for(RebStep step);

struct RebRun {
  Trace trace;
  ReferenceDataset rows;  // schema rebellion_schema()
};

/// Ground-truth rules. `run_id` fills the runId column.
RebRun run_original(const RebConfig& config, int run_id = 1);

/// Same engine with the three decisions taken by rules. Throws DataError if
/// a rule reads a name outside rebellion_terminals() for its step.
RebRun run_evolved(const RebConfig& config, const Rule& rule_m, const Rule& rule_a, const Rule& rule_c,
                   int run_id = 1);

/// Rows of every config's run_original, runId = position + 1. Throws
/// ConfigError on an empty list.
ReferenceDataset record_dataset(const std::vector<RebConfig>& configs);

/// The three settings used for recording: legitimacy 0.82, 0.86 and 0.90,
/// seeds derived from `seed`.
std::vector<RebConfig> default_record_configs(std::uint64_t seed, const RebConfig& base = {});

enum class BreedFilter { All, Citizens, Cops };
BreedFilter default_filter(RebStep step);

/// Rows the filter keeps.
std::vector<std::size_t> filter_rows(const ReferenceDataset& data, BreedFilter filter);

/// Balanced accuracy (or plain accuracy when `plain`) of truthy(rule) vs
/// `label` on the filtered rows. Throws DataError on unknown variables.
double classify_fitness(const Rule& rule, const ReferenceDataset& data, const std::string& label,
                        BreedFilter filter, bool plain = false, int workers = 1);

/// Ground-truth rules in rule-text form.
Rule ground_truth_rule(RebStep step);

/// Terminal set for evolving `step`, ranges taken from the data; integer
/// constants 0..9 and reals 0..1 in 0.01 steps.
Grammar rebellion_grammar(RebStep step, const ReferenceDataset& data, int max_depth = 8);

struct SeriesComparison {
  double mean_abs_diff = 0.0;
  int peaks_a = 0;
  int peaks_b = 0;
  double max_cross_correlation = 0.0;
};

struct TraceComparison {
  SeriesComparison active;
  SeriesComparison jailed;
  SeriesComparison quiet;
};

/// Local maxima (plateaus count once) strictly above twice the median.
int count_peaks(const std::vector<long long>& series);
/// Throws DataError on length mismatch.
TraceComparison compare_traces(const Trace& a, const Trace& b);

ReferenceDataset trace_dataset(const Trace& t, const std::string& provenance);
Trace trace_from_dataset(const ReferenceDataset& data);

}  // namespace abmgp
