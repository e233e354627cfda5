#include "abmgp/rebellion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "abmgp/errors.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/rng.hpp"

namespace abmgp {

namespace {

constexpr const char* kStepNames[] = {"jailTerm",           "active",
                                      "movementTracker",    "freeNeighborhood",
                                      "copsOnNeighborhood", "activesOnNeighborhood",
                                      "estimatedArrestProbability", "jailedOnNeighborhood"};
constexpr const char* kStaticNames[] = {"grievance",      "perceivedHardship", "riskAversion", "governmentLegitimacy",
                                        "threshold",      "vision",            "maxJailTerm",  "arrestConstant",
                                        "citizenDensity", "copDensity",        "xcor",         "ycor",
                                        "activeBinary",   "neighborhoodSize"};
constexpr std::size_t kNumStepNames = std::size(kStepNames);
constexpr std::size_t kNumStatic = std::size(kStaticNames);

// Column layout: 4 identifiers, 8 step variables x 3 steps, 14 per-tick
// variables, 3 labels.
enum : std::size_t { kRunId, kTick, kAgentId, kBreed, kFirstStep };
enum StepVar : std::size_t { sJail, sActive, sTracker, sFree, sCops, sActives, sProb, sJailed };
enum StaticVar : std::size_t {
  vGrievance, vHardship, vRisk, vLegitimacy, vThreshold, vVision, vMaxJail, vArrestK,
  vCitizenDensity, vCopDensity, vX, vY, vActiveBinary, vNeighborhoodSize
};
constexpr std::size_t kFirstStatic = kFirstStep + 3 * kNumStepNames;
constexpr std::size_t kMovedLabel = kFirstStatic + kNumStatic;
constexpr std::size_t kActiveLabel = kMovedLabel + 1;
constexpr std::size_t kEnforcedLabel = kMovedLabel + 2;
constexpr std::size_t kColumns = kMovedLabel + 3;

constexpr std::size_t col(StepVar v, int step) { return kFirstStep + 3 * v + static_cast<std::size_t>(step); }
constexpr std::size_t col(StaticVar v) { return kFirstStatic + v; }

struct Agent {
  bool cop = false;
  double hardship = 0.0;
  double risk = 0.0;
  double grievance = 0.0;
  bool active = false;
  int jail = 0;
  int patch = -1;  // last patch while jailed
  bool moved = false;
};

struct Neighbourhood {
  int free = 0;
  int cops = 0;
  int actives = 0;  // active citizens other than self
  int jailed = 0;
};

class Decider {
 public:
  virtual ~Decider() = default;
  virtual bool move(const double* row) const = 0;
  virtual bool activate(const double* row) const = 0;
  virtual bool enforce(const double* row) const = 0;
};

class OriginalRules final : public Decider {
 public:
  bool move(const double* row) const override { return row[col(sJail, 0)] == 0.0 && row[col(sFree, 0)] > 0.0; }
  // Same operation order as the rule text so the recorded row reproduces it.
  bool activate(const double* row) const override {
    return row[col(sJail, 1)] == 0.0 &&
           finite_or_zero(row[col(vGrievance)] - finite_or_zero(row[col(vRisk)] * row[col(sProb, 1)])) > row[col(vThreshold)];
  }
  bool enforce(const double* row) const override { return row[kBreed] == 1.0 && row[col(sActives, 2)] > 0.0; }
};

std::vector<std::string> rule_variable_names() {
  std::vector<std::string> names;
  for (const auto& [name, kind] : rebellion_schema())
    if (kind != ColumnKind::Label) names.push_back(name);
  return names;
}

class RuleDecider final : public Decider {
 public:
  RuleDecider(const Rule& m, const Rule& a, const Rule& c)
      : m_(checked(m, RebStep::M)), a_(checked(a, RebStep::A)), c_(checked(c, RebStep::C)) {}
  bool move(const double* row) const override { return truthy(m_.eval(row)); }
  bool activate(const double* row) const override { return truthy(a_.eval(row)); }
  bool enforce(const double* row) const override { return truthy(c_.eval(row)); }

 private:
  static RuleProgram checked(const Rule& rule, RebStep step) {
    const auto& allowed = rebellion_terminals(step);
    for (const auto& v : rule.variables()) {
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw DataError("rule " + label_for(step).substr(0, 1) + " reads '" + v + "', not available at that step; allowed: " +
                        list + " (rule: " + render(rule) + ")");
      }
    }
    // Slots follow the schema order with the labels removed; labels sit at
    // the end, so slot i is column i.
    static const std::vector<std::string> names = rule_variable_names();
    return RuleProgram(rule, names);
  }

  RuleProgram m_, a_, c_;
};

class World {
 public:
  World(const RebConfig& config, int run_id) : c_(config), run_id_(run_id), rng_(config.seed) {
    c_.validate();
    c_.legitimacy = quantize9(c_.legitimacy);
    c_.threshold = quantize9(c_.threshold);
    c_.arrest_constant = quantize9(c_.arrest_constant);
    c_.citizen_density = quantize9(c_.citizen_density);
    c_.cop_density = quantize9(c_.cop_density);

    const int patches = c_.width * c_.height;
    build_neighbours();
    occupant_.assign(static_cast<std::size_t>(patches), -1);
    jailed_at_.assign(static_cast<std::size_t>(patches), 0);

    const int n_cops = static_cast<int>(std::lround(c_.cop_density * patches));
    const int n_citizens = static_cast<int>(std::lround(c_.citizen_density * patches));
    std::vector<int> order(static_cast<std::size_t>(patches));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    agents_.resize(static_cast<std::size_t>(n_cops + n_citizens));
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      a.cop = static_cast<int>(i) < n_cops;
      a.patch = order[i];
      occupant_[static_cast<std::size_t>(a.patch)] = static_cast<int>(i);
      if (!a.cop) {
        a.hardship = quantize9(uniform_real(rng_, 0.0, 1.0));
        a.risk = quantize9(uniform_real(rng_, 0.0, 1.0));
        a.grievance = quantize9(a.hardship * (1.0 - c_.legitimacy));
        ++citizens_;
      }
    }
  }

  RebRun run(const Decider& rules) {
    RebRun out;
    const std::size_t n = agents_.size();
    std::vector<double> rows(n * static_cast<std::size_t>(c_.ticks) * kColumns, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int tick = 1; tick <= c_.ticks; ++tick) {
      double* block = rows.data() + static_cast<std::size_t>(tick - 1) * n * kColumns;
      auto row_of = [&](std::size_t i) { return block + i * kColumns; };

      // M
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t i : order) {
        Agent& a = agents_[i];
        double* row = row_of(i);
        capture_static(i, tick, row);
        const Neighbourhood nb = capture(i, 0, row);
        a.moved = false;
        if ((a.cop || a.jail == 0) && rules.move(row) && nb.free > 0) {
          move_to(i, random_free_neighbour(a.patch));
          a.moved = true;
        }
        row[kMovedLabel] = a.moved ? 1.0 : 0.0;
      }
      // A
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t i : order) {
        Agent& a = agents_[i];
        double* row = row_of(i);
        capture(i, 1, row);
        if (!a.cop && a.jail == 0) a.active = rules.activate(row);
        row[kActiveLabel] = (!a.cop && a.active) ? 1.0 : 0.0;
      }
      // C
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t i : order) {
        Agent& a = agents_[i];
        double* row = row_of(i);
        const Neighbourhood nb = capture(i, 2, row);
        bool arrested = false;
        if (a.cop && rules.enforce(row) && nb.actives > 0) {
          arrest(random_active_neighbour(a.patch));
          arrested = true;
        }
        row[kEnforcedLabel] = arrested ? 1.0 : 0.0;
      }
      release();

      long long active = 0, jailed = 0;
      for (const Agent& a : agents_) {
        if (a.cop) continue;
        if (a.jail > 0) ++jailed;
        else if (a.active) ++active;
      }
      out.trace.active.push_back(active);
      out.trace.jailed.push_back(jailed);
      out.trace.quiet.push_back(citizens_ - active - jailed);
    }

    const std::size_t total = n * static_cast<std::size_t>(c_.ticks);
    ReferenceDataset data;
    const auto& schema = rebellion_schema();
    for (std::size_t c = 0; c < kColumns; ++c) {
      std::vector<double> values(total);
      for (std::size_t r = 0; r < total; ++r) values[r] = rows[r * kColumns + c];
      data.add_column(schema[c].first, schema[c].second, std::move(values));
    }
    data.provenance = "rebellion run " + std::to_string(run_id_) + " seed " + std::to_string(c_.seed);
    out.rows = std::move(data);
    return out;
  }

 private:
  void build_neighbours() {
    const int w = c_.width, h = c_.height, r = c_.vision;
    neighbours_.resize(static_cast<std::size_t>(w * h));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::set<int> seen;
        auto& list = neighbours_[static_cast<std::size_t>(y * w + x)];
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy > r * r) continue;
            const int q = ((y + dy) % h + h) % h * w + ((x + dx) % w + w) % w;
            if (q == y * w + x || !seen.insert(q).second) continue;
            list.push_back(q);
          }
        }
      }
    }
    neighbourhood_size_ = static_cast<double>(neighbours_.empty() ? 0 : neighbours_.front().size());
  }

  Neighbourhood look(std::size_t self) const {
    Neighbourhood nb;
    for (int q : neighbours_[static_cast<std::size_t>(agents_[self].patch)]) {
      nb.jailed += jailed_at_[static_cast<std::size_t>(q)];
      const int o = occupant_[static_cast<std::size_t>(q)];
      if (o < 0) {
        ++nb.free;
        continue;
      }
      const Agent& other = agents_[static_cast<std::size_t>(o)];
      if (other.cop) ++nb.cops;
      else if (other.active) ++nb.actives;
    }
    return nb;
  }

  double arrest_probability(const Neighbourhood& nb) const {
    const double ratio = std::floor(static_cast<double>(nb.cops) / static_cast<double>(1 + nb.actives));
    return quantize9(1.0 - std::exp(-c_.arrest_constant * ratio));
  }

  void capture_static(std::size_t i, int tick, double* row) const {
    const Agent& a = agents_[i];
    row[kRunId] = run_id_;
    row[kTick] = tick;
    row[kAgentId] = static_cast<double>(i);
    row[kBreed] = a.cop ? 1.0 : 0.0;
    row[col(vGrievance)] = a.grievance;
    row[col(vHardship)] = a.hardship;
    row[col(vRisk)] = a.risk;
    row[col(vLegitimacy)] = c_.legitimacy;
    row[col(vThreshold)] = c_.threshold;
    row[col(vVision)] = c_.vision;
    row[col(vMaxJail)] = c_.max_jail_term;
    row[col(vArrestK)] = c_.arrest_constant;
    row[col(vCitizenDensity)] = c_.citizen_density;
    row[col(vCopDensity)] = c_.cop_density;
    row[col(vX)] = a.patch % c_.width;
    row[col(vY)] = a.patch / c_.width;
    row[col(vActiveBinary)] = a.active ? 1.0 : 0.0;
    row[col(vNeighborhoodSize)] = neighbourhood_size_;
  }

  Neighbourhood capture(std::size_t i, int step, double* row) const {
    const Agent& a = agents_[i];
    const Neighbourhood nb = look(i);
    row[col(sJail, step)] = a.jail;
    row[col(sActive, step)] = a.active ? 1.0 : 0.0;
    row[col(sTracker, step)] = a.moved ? 1.0 : 0.0;
    row[col(sFree, step)] = nb.free;
    row[col(sCops, step)] = nb.cops;
    row[col(sActives, step)] = nb.actives;
    row[col(sProb, step)] = a.cop ? 0.0 : arrest_probability(nb);
    row[col(sJailed, step)] = nb.jailed;
    return nb;
  }

  int random_free_neighbour(int patch) {
    std::vector<int>& options = scratch_;
    options.clear();
    for (int q : neighbours_[static_cast<std::size_t>(patch)])
      if (occupant_[static_cast<std::size_t>(q)] < 0) options.push_back(q);
    return options[uniform_int<std::size_t>(rng_, 0, options.size() - 1)];
  }

  int random_active_neighbour(int patch) {
    std::vector<int>& options = scratch_;
    options.clear();
    for (int q : neighbours_[static_cast<std::size_t>(patch)]) {
      const int o = occupant_[static_cast<std::size_t>(q)];
      if (o >= 0 && !agents_[static_cast<std::size_t>(o)].cop && agents_[static_cast<std::size_t>(o)].active) options.push_back(o);
    }
    return options[uniform_int<std::size_t>(rng_, 0, options.size() - 1)];
  }

  void move_to(std::size_t i, int patch) {
    occupant_[static_cast<std::size_t>(agents_[i].patch)] = -1;
    agents_[i].patch = patch;
    occupant_[static_cast<std::size_t>(patch)] = static_cast<int>(i);
  }

  void arrest(int id) {
    Agent& a = agents_[static_cast<std::size_t>(id)];
    a.active = false;
    a.jail = uniform_int(rng_, 1, c_.max_jail_term);
    occupant_[static_cast<std::size_t>(a.patch)] = -1;
    ++jailed_at_[static_cast<std::size_t>(a.patch)];
  }

  // End of tick: terms count down; released citizens return to their last
  // patch, or to a random free patch if it was taken.
  void release() {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      if (a.cop || a.jail == 0) continue;
      if (--a.jail > 0) continue;
      --jailed_at_[static_cast<std::size_t>(a.patch)];
      if (occupant_[static_cast<std::size_t>(a.patch)] >= 0) {
        std::vector<int>& options = scratch_;
        options.clear();
        for (std::size_t q = 0; q < occupant_.size(); ++q)
          if (occupant_[q] < 0) options.push_back(static_cast<int>(q));
        a.patch = options[uniform_int<std::size_t>(rng_, 0, options.size() - 1)];
      }
      occupant_[static_cast<std::size_t>(a.patch)] = static_cast<int>(i);
    }
  }

  RebConfig c_;
  int run_id_;
  Rng rng_;
  std::vector<Agent> agents_;
  std::vector<int> occupant_;
  std::vector<int> jailed_at_;
  std::vector<std::vector<int>> neighbours_;
  std::vector<int> scratch_;
  double neighbourhood_size_ = 0.0;
  long long citizens_ = 0;
};

}  // namespace

void RebConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("grid width and height must be >= 1");
  if (!(citizen_density >= 0.0) || !(cop_density >= 0.0)) throw ConfigError("densities must be >= 0");
  if (!(citizen_density + cop_density < 1.0)) throw ConfigError("citizenDensity + copDensity must be < 1");
  if (!(legitimacy >= 0.0 && legitimacy <= 1.0)) throw ConfigError("governmentLegitimacy must lie in [0, 1]");
  if (max_jail_term < 1) throw ConfigError("maxJailTerm must be >= 1");
  if (vision < 1) throw ConfigError("vision must be >= 1");
  if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
  if (!(arrest_constant >= 0.0) || !std::isfinite(arrest_constant)) throw ConfigError("arrestConstant must be >= 0");
  if (ticks < 1) throw ConfigError("ticks must be >= 1");
}

const std::vector<std::pair<std::string, ColumnKind>>& rebellion_schema() {
  static const auto schema = [] {
    std::vector<std::pair<std::string, ColumnKind>> s = {{"runId", ColumnKind::Identifier},
                                                         {"tick", ColumnKind::Identifier},
                                                         {"agentId", ColumnKind::Identifier},
                                                         {"breed", ColumnKind::Identifier}};
    for (const char* name : kStepNames)
      for (int step = 0; step < 3; ++step) s.emplace_back(std::string(name) + std::to_string(step), ColumnKind::Numeric);
    for (const char* name : kStaticNames) s.emplace_back(name, ColumnKind::Numeric);
    s.emplace_back("movedLabel", ColumnKind::Label);
    s.emplace_back("activeLabel", ColumnKind::Label);
    s.emplace_back("enforcedLabel", ColumnKind::Label);
    return s;
  }();
  return schema;
}

const std::vector<std::string>& rebellion_variables() {
  static const auto vars = [] {
    std::vector<std::string> v;
    for (const auto& [name, kind] : rebellion_schema())
      if (kind == ColumnKind::Numeric) v.push_back(name);
    return v;
  }();
  return vars;
}

const std::vector<std::string>& rebellion_terminals(RebStep step) {
  static const auto sets = [] {
    std::array<std::vector<std::string>, 3> out;
    for (int s = 0; s < 3; ++s) {
      for (const char* name : kStepNames)
        for (int k = 0; k <= s; ++k) out[s].push_back(std::string(name) + std::to_string(k));
      for (const char* name : kStaticNames) out[s].push_back(name);
      out[s].push_back("breed");
    }
    return out;
  }();
  return sets[static_cast<std::size_t>(step)];
}

std::string label_for(RebStep step) {
  switch (step) {
    case RebStep::M: return "movedLabel";
    case RebStep::A: return "activeLabel";
    default: return "enforcedLabel";
  }
}

RebRun run_original(const RebConfig& config, int run_id) {
  World world(config, run_id);
  return world.run(OriginalRules());
}

RebRun run_evolved(const RebConfig& config, const Rule& rule_m, const Rule& rule_a, const Rule& rule_c, int run_id) {
  const RuleDecider rules(rule_m, rule_a, rule_c);
  World world(config, run_id);
  return world.run(rules);
}

ReferenceDataset record_dataset(const std::vector<RebConfig>& configs) {
  if (configs.empty()) throw ConfigError("recordDataset needs at least one config");
  std::vector<std::vector<double>> columns(kColumns);
  std::string provenance = "rebellion";
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const RebConfig& c = configs[k];
    RebRun r = run_original(c, static_cast<int>(k + 1));
    for (std::size_t j = 0; j < kColumns; ++j) {
      const auto& v = r.rows.column(j).values;
      columns[j].insert(columns[j].end(), v.begin(), v.end());
    }
    provenance += " | run " + std::to_string(k + 1) + ": seed=" + std::to_string(c.seed) + " legitimacy=" + format9(c.legitimacy) +
                  " grid=" + std::to_string(c.width) + "x" + std::to_string(c.height) + " ticks=" + std::to_string(c.ticks);
  }
  ReferenceDataset data;
  const auto& schema = rebellion_schema();
  for (std::size_t j = 0; j < kColumns; ++j) data.add_column(schema[j].first, schema[j].second, std::move(columns[j]));
  data.provenance = provenance;
  return data;
}

std::vector<RebConfig> default_record_configs(std::uint64_t seed, const RebConfig& base) {
  std::vector<RebConfig> out;
  const double legitimacies[] = {0.82, 0.86, 0.90};
  for (std::uint64_t k = 0; k < 3; ++k) {
    RebConfig c = base;
    c.legitimacy = legitimacies[k];
    c.seed = derive_seed(seed, {k});
    out.push_back(c);
  }
  return out;
}

BreedFilter default_filter(RebStep step) { return step == RebStep::C ? BreedFilter::All : BreedFilter::Citizens; }

std::vector<std::size_t> filter_rows(const ReferenceDataset& data, BreedFilter filter) {
  std::vector<std::size_t> rows;
  if (filter == BreedFilter::All) {
    rows.resize(data.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  const auto& breed = data.require("breed").values;
  const double want = filter == BreedFilter::Cops ? 1.0 : 0.0;
  for (std::size_t r = 0; r < breed.size(); ++r)
    if (breed[r] == want) rows.push_back(r);
  return rows;
}

double classify_fitness(const Rule& rule, const ReferenceDataset& data, const std::string& label, BreedFilter filter,
                        bool plain, int workers) {
  const auto rows = filter_rows(data, filter);
  const Confusion c = confusion_batched(rule, data, label, rows, workers);
  return plain ? plain_accuracy(c) : balanced_accuracy(c);
}

Rule ground_truth_rule(RebStep step) {
  switch (step) {
    case RebStep::M: return parse_rule("jailTerm0 == 0 AND freeNeighborhood0 > 0");
    case RebStep::A: return parse_rule("jailTerm1 == 0 AND grievance - riskAversion * estimatedArrestProbability1 > threshold");
    default: return parse_rule("breed == 1 AND activesOnNeighborhood2 > 0");
  }
}

Grammar rebellion_grammar(RebStep step, const ReferenceDataset& data, int max_depth) {
  Grammar g;
  for (const auto& name : rebellion_terminals(step)) {
    const auto& v = data.require(name).values;
    VarSpec spec{name, 0.0, 0.0, true};
    if (!v.empty()) {
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      spec.lo = *mn;
      spec.hi = *mx;
    }
    spec.integral = std::all_of(v.begin(), v.end(), [](double x) { return std::nearbyint(x) == x; });
    g.terminals.push_back(spec);
  }
  g.constants.integers = std::pair{0, 9};
  g.constants.reals = std::pair{0.0, 1.0};
  g.operators = all_operators();
  g.max_depth = max_depth;
  return g;
}

int count_peaks(const std::vector<long long>& series) {
  if (series.empty()) return 0;
  std::vector<long long> sorted = series;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? static_cast<double>(sorted[n / 2]) : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  // Collapse runs of equal values, then look for runs higher than both
  // neighbouring runs (series ends count as lower).
  std::vector<long long> runs;
  for (long long v : series)
    if (runs.empty() || runs.back() != v) runs.push_back(v);
  int peaks = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const bool left = i == 0 || runs[i] > runs[i - 1];
    const bool right = i + 1 == runs.size() || runs[i] > runs[i + 1];
    if (left && right && static_cast<double>(runs[i]) > 2.0 * median) ++peaks;
  }
  return peaks;
}

namespace {

double max_cross_correlation(const std::vector<long long>& a, const std::vector<long long>& b) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  auto mean = [](const std::vector<long long>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return a == b ? 1.0 : 0.0;
  double best = -1.0;
  const long long nn = static_cast<long long>(n);
  for (long long lag = -(nn - 1); lag <= nn - 1; ++lag) {
    double s = 0.0;
    for (long long i = 0; i < nn; ++i) {
      const long long j = i + lag;
      if (j < 0 || j >= nn) continue;
      s += (a[static_cast<std::size_t>(i)] - ma) * (b[static_cast<std::size_t>(j)] - mb);
    }
    best = std::max(best, s / std::sqrt(va * vb));
  }
  return best;
}

SeriesComparison compare_series(const std::vector<long long>& a, const std::vector<long long>& b) {
  SeriesComparison s;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::fabs(static_cast<double>(a[i] - b[i]));
  s.mean_abs_diff = a.empty() ? 0.0 : diff / static_cast<double>(a.size());
  s.peaks_a = count_peaks(a);
  s.peaks_b = count_peaks(b);
  s.max_cross_correlation = max_cross_correlation(a, b);
  return s;
}

}  // namespace

TraceComparison compare_traces(const Trace& a, const Trace& b) {
  if (a.ticks() != b.ticks())
    throw DataError("trace lengths differ (" + std::to_string(a.ticks()) + " vs " + std::to_string(b.ticks()) + ")");
  return {compare_series(a.active, b.active), compare_series(a.jailed, b.jailed), compare_series(a.quiet, b.quiet)};
}

ReferenceDataset trace_dataset(const Trace& t, const std::string& provenance) {
  ReferenceDataset d({{"tick", ColumnKind::Identifier},
                      {"quiet", ColumnKind::Numeric},
                      {"active", ColumnKind::Numeric},
                      {"jailed", ColumnKind::Numeric}});
  for (std::size_t i = 0; i < t.ticks(); ++i) {
    const double row[] = {static_cast<double>(i + 1), static_cast<double>(t.quiet[i]), static_cast<double>(t.active[i]),
                          static_cast<double>(t.jailed[i])};
    d.append_row(row);
  }
  d.provenance = provenance;
  return d;
}

Trace trace_from_dataset(const ReferenceDataset& data) {
  Trace t;
  auto as_counts = [&](const char* name) {
    std::vector<long long> out;
    for (double v : data.require(name).values) {
      if (v < 0.0 || std::nearbyint(v) != v) throw DataError(std::string("trace column '") + name + "' must hold counts");
      out.push_back(static_cast<long long>(v));
    }
    return out;
  };
  t.quiet = as_counts("quiet");
  t.active = as_counts("active");
  t.jailed = as_counts("jailed");
  return t;
}

}  // namespace abmgp
