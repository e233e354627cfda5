#include "abmgp/hawkdove.hpp"

#include <algorithm>
#include <cmath>

#include "abmgp/errors.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/rng.hpp"

namespace abmgp {

namespace {

enum Var { kResource, kAgents, kPreviousTook, kPreviousResource, kPreviousAgents, kTotalAgents, kTotalResource, kVarCount };

struct Agent {
  int home = -1;
  bool relocate = true;  // true at tick 1 and after receiving zero
  double total = 0.0;
  double previous_took = 0.0;
  double previous_resource = 0.0;
  double previous_agents = 0.0;
};

}  // namespace

void HDConfig::validate() const {
  if (n_agents < 1) throw ConfigError("nAgents must be >= 1");
  if (n_locations < 1) throw ConfigError("nLocations must be >= 1");
  if (2LL * n_locations < n_agents) throw ConfigError("nLocations x 2 must be >= nAgents (two agents per location)");
  if (!(resource >= 0.0) || !std::isfinite(resource)) throw ConfigError("resourcePerLocation must be finite and >= 0");
  if (ticks < 1) throw ConfigError("ticks must be >= 1");
}

const std::vector<std::string>& hawkdove_variables() {
  static const std::vector<std::string> names = {"resource",       "agents",      "previousTook", "previousResource",
                                                 "previousAgents", "totalAgents", "totalResource"};
  return names;
}

HDRun run_detailed(const HDConfig& config, const Rule& rule) {
  config.validate();
  std::optional<RuleProgram> prog;
  try {
    prog.emplace(rule, hawkdove_variables());
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (rule: " + render(rule) + ")");
  }

  const std::size_t n = static_cast<std::size_t>(config.n_agents);
  const std::size_t m = static_cast<std::size_t>(config.n_locations);
  const double R = config.resource;
  Rng rng(config.seed);

  std::vector<Agent> agents(n);
  std::vector<int> occupancy(m, 0);
  std::vector<double> demand(n), joint(m);
  std::vector<int> spare;
  HDRun out;
  out.receipts.reserve(static_cast<std::size_t>(config.ticks));
  double vars[kVarCount];

  for (int tick = 0; tick < config.ticks; ++tick) {
    // Phase 1: placement. Agents keeping their home go first, then movers
    // in id order each take a uniformly random location with room.
    std::fill(occupancy.begin(), occupancy.end(), 0);
    for (const Agent& a : agents)
      if (!a.relocate) ++occupancy[static_cast<std::size_t>(a.home)];
    for (Agent& a : agents) {
      if (!a.relocate) continue;
      spare.clear();
      for (std::size_t l = 0; l < m; ++l)
        if (occupancy[l] < 2 && static_cast<int>(l) != a.home) spare.push_back(static_cast<int>(l));
      if (spare.empty()) {
        // only the old location has room
        ++occupancy[static_cast<std::size_t>(a.home)];
        continue;
      }
      a.home = spare[uniform_int<std::size_t>(rng, 0, spare.size() - 1)];
      ++occupancy[static_cast<std::size_t>(a.home)];
    }
    for (int o : occupancy) out.max_occupancy = std::max(out.max_occupancy, o);

    // Phase 2: decisions.
    std::fill(joint.begin(), joint.end(), 0.0);
    vars[kResource] = R;
    vars[kTotalAgents] = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Agent& a = agents[i];
      vars[kAgents] = occupancy[static_cast<std::size_t>(a.home)];
      vars[kPreviousTook] = a.previous_took;
      vars[kPreviousResource] = a.previous_resource;
      vars[kPreviousAgents] = a.previous_agents;
      vars[kTotalResource] = a.total;
      demand[i] = std::clamp(std::round(prog->eval(vars)), 0.0, R);
      joint[static_cast<std::size_t>(a.home)] += demand[i];
    }

    // Phase 3: conflict. Phase 4: bookkeeping and replenishment.
    for (std::size_t l = 0; l < m; ++l)
      if (joint[l] > R) ++out.conflicts;
    std::vector<double>& got = out.receipts.emplace_back(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      Agent& a = agents[i];
      const std::size_t l = static_cast<std::size_t>(a.home);
      got[i] = joint[l] > R ? 0.0 : demand[i];
      a.total += got[i];
      a.previous_took = got[i];
      a.previous_resource = R;
      a.previous_agents = occupancy[l];
      a.relocate = got[i] == 0.0;
    }
  }

  out.totals.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.totals[i] = agents[i].total;
  return out;
}

WealthDistribution run(const HDConfig& config, const Rule& rule) {
  WealthDistribution w = run_detailed(config, rule).totals;
  std::sort(w.begin(), w.end());
  return w;
}

double hd_fitness(const Rule& rule, const WealthDistribution& reference, const HDConfig& config, int repeats) {
  if (repeats < 1) throw ConfigError("fitness repeats must be >= 1");
  if (reference.size() != static_cast<std::size_t>(config.n_agents))
    throw DataError("reference has " + std::to_string(reference.size()) + " entries, nAgents is " + std::to_string(config.n_agents));
  WealthDistribution ref = reference;
  std::sort(ref.begin(), ref.end());
  double sum = 0.0;
  for (int r = 0; r < repeats; ++r) {
    HDConfig c = config;
    c.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(r)});
    sum += mse(run(c, rule), ref);
  }
  return 1.0 / (1.0 + sum / repeats);
}

WealthDistribution make_reference(ReferenceKind kind, const HDConfig& config, const ReferenceParams& p) {
  if (config.n_agents < 1) throw ConfigError("nAgents must be >= 1");
  const std::size_t n = static_cast<std::size_t>(config.n_agents);
  WealthDistribution w(n);
  switch (kind) {
    case ReferenceKind::Equality: {
      const double v = p.value.value_or(static_cast<double>(config.ticks));
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("equality value must be finite and >= 0");
      std::fill(w.begin(), w.end(), v);
      break;
    }
    case ReferenceKind::TwoTier: {
      if (!(p.split >= 0.0 && p.split <= 1.0)) throw ConfigError("two-tier split must lie in [0, 1]");
      if (!(p.low >= 0.0) || !(p.high >= p.low) || !std::isfinite(p.high))
        throw ConfigError("two-tier needs 0 <= low <= high");
      const std::size_t n_low = static_cast<std::size_t>(std::llround(p.split * static_cast<double>(n)));
      for (std::size_t i = 0; i < n; ++i) w[i] = i < n_low ? p.low : p.high;
      break;
    }
    case ReferenceKind::ParetoLike: {
      if (!(p.shape > 1.0) || !std::isfinite(p.shape)) throw ConfigError("pareto shape must be > 1");
      const double mean = p.mean.value_or(static_cast<double>(config.ticks));
      if (!(mean > 0.0) || !std::isfinite(mean)) throw ConfigError("pareto mean must be > 0");
      // Quantiles of a unit Pareto at the midpoints of n equal-probability
      // cells, rescaled to the requested mean.
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        w[i] = std::pow(1.0 - q, -1.0 / p.shape);
        sum += w[i];
      }
      const double scale = mean * static_cast<double>(n) / sum;
      for (double& v : w) v *= scale;
      break;
    }
  }
  std::sort(w.begin(), w.end());
  return w;
}

ReferenceKind reference_kind_from_name(const std::string& name) {
  if (name == "equality") return ReferenceKind::Equality;
  if (name == "twoTier") return ReferenceKind::TwoTier;
  if (name == "paretoLike") return ReferenceKind::ParetoLike;
  throw ConfigError("unknown reference kind '" + name + "' (expected equality, twoTier or paretoLike)");
}

VarRanges hawkdove_ranges(const HDConfig& config) {
  config.validate();
  const double R = config.resource;
  const double n = static_cast<double>(config.n_agents);
  // Demands are rounded, so every quantity is an integer when R is.
  const bool integral = std::nearbyint(R) == R;
  VarRanges r;
  r.vars["resource"] = {R, R, integral};
  r.vars["agents"] = {1.0, std::min(2.0, n), true};
  r.vars["previousTook"] = {0.0, R, integral};
  r.vars["previousResource"] = {0.0, R, integral};
  r.vars["previousAgents"] = {0.0, std::min(2.0, n), true};
  r.vars["totalAgents"] = {n, n, true};
  r.vars["totalResource"] = {0.0, R * (config.ticks - 1), integral};
  r.facts = {{"totalResource", "previousTook"}, {"resource", "previousTook"}, {"resource", "previousResource"}};
  return r;
}

Grammar hawkdove_grammar(const HDConfig& config, int max_depth) {
  const VarRanges ranges = hawkdove_ranges(config);
  Grammar g;
  for (const auto& name : hawkdove_variables()) {
    const VarRange& r = ranges.vars.at(name);
    g.terminals.push_back(VarSpec{name, r.lo, r.hi, r.integral});
  }
  g.constants.integers = std::pair{0, 9};
  g.operators = all_operators();
  g.max_depth = max_depth;
  return g;
}

ReferenceDataset distribution_dataset(const WealthDistribution& wealth, const std::string& provenance) {
  ReferenceDataset d;
  d.add_column("total_resource", ColumnKind::Numeric, wealth);
  d.provenance = provenance;
  return d;
}

WealthDistribution distribution_from_dataset(const ReferenceDataset& data) {
  WealthDistribution w = data.require("total_resource").values;
  for (double v : w)
    if (v < 0.0) throw DataError("negative total_resource in reference distribution");
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace abmgp
