#include "abmgp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>

#include "abmgp/errors.hpp"
#include "abmgp/gp.hpp"
#include "abmgp/hawkdove.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/prune.hpp"
#include "abmgp/rebellion.hpp"
#include "abmgp/refdata.hpp"

namespace abmgp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Configuration

struct Settings {
  std::string task = "hawkdove";     // evolve: hawkdove | rebellion:M | rebellion:A | rebellion:C
  std::string target = "rebellion";  // record: rebellion | hawkdove
  std::string dataset;               // empty: none
  std::string ranges;                // prune: "", "hawkdove" or a JSON file
  std::uint64_t seed = 1;

  GPConfig gp;
  bool gp_target_given = false;

  HDConfig hd;
  int repeats = 3;
  std::string reference_kind = "equality";
  ReferenceParams reference;
  int histogram_bins = 20;

  RebConfig reb;
  std::vector<double> legitimacies = {0.82, 0.86, 0.90};
  std::string breed_filter;  // empty: default for the step
  bool plain_accuracy = false;
};

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
  throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + (section.empty() ? std::string(key) : section + "." + key) + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v, section);
  out = v;
}

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad_key(section, it.key());
  }
}

void apply_config(const json& root_in, Settings& s) {
  // A run manifest can be used as a config: its "config" member holds the
  // effective settings of that run.
  const json& root = root_in.contains("config") && root_in.contains("command") ? root_in.at("config") : root_in;
  only_keys(root, {"task", "target", "dataset", "ranges", "seed", "gp", "hawkdove", "rebellion"}, "");
  read(root, "task", s.task, "");
  read(root, "target", s.target, "");
  read(root, "dataset", s.dataset, "");
  read(root, "ranges", s.ranges, "");
  read(root, "seed", s.seed, "");
  if (auto it = root.find("gp"); it != root.end()) {
    const json& g = *it;
    only_keys(g, {"populationSize", "maxGenerations", "pReproduce", "pMutate", "pCrossover", "elitism", "maxDepth",
                  "targetFitness", "stagnationLimit", "hallOfFameSize"},
              "gp");
    read(g, "populationSize", s.gp.population_size, "gp");
    read(g, "maxGenerations", s.gp.max_generations, "gp");
    read(g, "pReproduce", s.gp.p_reproduce, "gp");
    read(g, "pMutate", s.gp.p_mutate, "gp");
    read(g, "pCrossover", s.gp.p_crossover, "gp");
    read(g, "elitism", s.gp.elitism, "gp");
    read(g, "maxDepth", s.gp.max_depth, "gp");
    if (g.contains("targetFitness")) s.gp_target_given = true;
    read_opt(g, "targetFitness", s.gp.target_fitness, "gp");
    read_opt(g, "stagnationLimit", s.gp.stagnation_limit, "gp");
    read(g, "hallOfFameSize", s.gp.hall_of_fame_size, "gp");
  }
  if (auto it = root.find("hawkdove"); it != root.end()) {
    const json& h = *it;
    only_keys(h, {"nAgents", "nLocations", "resourcePerLocation", "ticks", "repeats", "histogramBins", "reference"}, "hawkdove");
    read(h, "nAgents", s.hd.n_agents, "hawkdove");
    read(h, "nLocations", s.hd.n_locations, "hawkdove");
    read(h, "resourcePerLocation", s.hd.resource, "hawkdove");
    read(h, "ticks", s.hd.ticks, "hawkdove");
    read(h, "repeats", s.repeats, "hawkdove");
    read(h, "histogramBins", s.histogram_bins, "hawkdove");
    if (auto r = h.find("reference"); r != h.end()) {
      const std::string sec = "hawkdove.reference";
      only_keys(*r, {"kind", "value", "split", "low", "high", "shape", "mean"}, sec);
      read(*r, "kind", s.reference_kind, sec);
      read_opt(*r, "value", s.reference.value, sec);
      read(*r, "split", s.reference.split, sec);
      read(*r, "low", s.reference.low, sec);
      read(*r, "high", s.reference.high, sec);
      read(*r, "shape", s.reference.shape, sec);
      read_opt(*r, "mean", s.reference.mean, sec);
    }
  }
  if (auto it = root.find("rebellion"); it != root.end()) {
    const json& r = *it;
    only_keys(r, {"gridWidth", "gridHeight", "citizenDensity", "copDensity", "governmentLegitimacy", "maxJailTerm", "vision",
                  "threshold", "arrestConstant", "ticks", "legitimacies", "breedFilter", "plainAccuracy"},
              "rebellion");
    read(r, "gridWidth", s.reb.width, "rebellion");
    read(r, "gridHeight", s.reb.height, "rebellion");
    read(r, "citizenDensity", s.reb.citizen_density, "rebellion");
    read(r, "copDensity", s.reb.cop_density, "rebellion");
    read(r, "governmentLegitimacy", s.reb.legitimacy, "rebellion");
    read(r, "maxJailTerm", s.reb.max_jail_term, "rebellion");
    read(r, "vision", s.reb.vision, "rebellion");
    read(r, "threshold", s.reb.threshold, "rebellion");
    read(r, "arrestConstant", s.reb.arrest_constant, "rebellion");
    read(r, "ticks", s.reb.ticks, "rebellion");
    read(r, "legitimacies", s.legitimacies, "rebellion");
    read(r, "breedFilter", s.breed_filter, "rebellion");
    read(r, "plainAccuracy", s.plain_accuracy, "rebellion");
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json settings_json(const Settings& s) {
  json j;
  j["task"] = s.task;
  j["target"] = s.target;
  j["dataset"] = s.dataset;
  j["ranges"] = s.ranges;
  j["seed"] = s.seed;
  j["gp"] = {{"populationSize", s.gp.population_size},
             {"maxGenerations", s.gp.max_generations},
             {"pReproduce", s.gp.p_reproduce},
             {"pMutate", s.gp.p_mutate},
             {"pCrossover", s.gp.p_crossover},
             {"elitism", s.gp.elitism},
             {"maxDepth", s.gp.max_depth},
             {"targetFitness", optional_json(s.gp.target_fitness)},
             {"stagnationLimit", s.gp.stagnation_limit ? json(*s.gp.stagnation_limit) : json(nullptr)},
             {"hallOfFameSize", s.gp.hall_of_fame_size}};
  j["hawkdove"] = {{"nAgents", s.hd.n_agents},
                   {"nLocations", s.hd.n_locations},
                   {"resourcePerLocation", s.hd.resource},
                   {"ticks", s.hd.ticks},
                   {"repeats", s.repeats},
                   {"histogramBins", s.histogram_bins},
                   {"reference",
                    {{"kind", s.reference_kind},
                     {"value", optional_json(s.reference.value)},
                     {"split", s.reference.split},
                     {"low", s.reference.low},
                     {"high", s.reference.high},
                     {"shape", s.reference.shape},
                     {"mean", optional_json(s.reference.mean)}}}};
  j["rebellion"] = {{"gridWidth", s.reb.width},
                    {"gridHeight", s.reb.height},
                    {"citizenDensity", s.reb.citizen_density},
                    {"copDensity", s.reb.cop_density},
                    {"governmentLegitimacy", s.reb.legitimacy},
                    {"maxJailTerm", s.reb.max_jail_term},
                    {"vision", s.reb.vision},
                    {"threshold", s.reb.threshold},
                    {"arrestConstant", s.reb.arrest_constant},
                    {"ticks", s.reb.ticks},
                    {"legitimacies", s.legitimacies},
                    {"breedFilter", s.breed_filter},
                    {"plainAccuracy", s.plain_accuracy}};
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output helpers

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {
    if (dir_.empty()) return;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create output directory " + dir_ + ": " + ec.message());
  }

  bool enabled() const { return !dir_.empty(); }

  std::ofstream open(const std::string& name) {
    const std::string path = (fs::path(dir_) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    files_.push_back(name);
    return f;
  }

  void manifest(const std::string& command, const Settings& s, const std::string& started, const json& extra) {
    json m;
    m["command"] = command;
    m["toolVersion"] = ABMGP_VERSION;
    m["seed"] = s.seed;
    m["startedAt"] = started;
    m["finishedAt"] = timestamp();
    m["config"] = settings_json(s);
    m["outputs"] = files_;
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    const std::string path = (fs::path(dir_) / "manifest.json").string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << m.dump(2) << '\n';
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

void write_rules(std::ostream& out, const std::vector<ScoredRule>& rules, const Pruner* pruner) {
  for (std::size_t k = 0; k < rules.size(); ++k) {
    out << "# rank " << k + 1 << " fitness " << fmt(rules[k].fitness) << '\n';
    out << render(pruner ? (*pruner)(rules[k].rule) : rules[k].rule) << '\n';
  }
}

RebStep step_from_task(const std::string& task) {
  if (task == "rebellion:M") return RebStep::M;
  if (task == "rebellion:A") return RebStep::A;
  if (task == "rebellion:C") return RebStep::C;
  throw ConfigError("unknown task '" + task + "' (expected hawkdove, rebellion:M, rebellion:A or rebellion:C)");
}

BreedFilter parse_filter(const std::string& name, RebStep step) {
  if (name.empty()) return default_filter(step);
  if (name == "all") return BreedFilter::All;
  if (name == "citizens") return BreedFilter::Citizens;
  if (name == "cops") return BreedFilter::Cops;
  throw ConfigError("breedFilter must be all, citizens or cops");
}

HDConfig hd_config(const Settings& s) {
  HDConfig c = s.hd;
  c.seed = s.seed;
  c.validate();
  return c;
}

RebConfig reb_config(const Settings& s) {
  RebConfig c = s.reb;
  c.seed = s.seed;
  c.validate();
  return c;
}

WealthDistribution hd_reference(const Settings& s, const HDConfig& hc) {
  if (!s.dataset.empty()) return distribution_from_dataset(load_csv(s.dataset));
  return make_reference(reference_kind_from_name(s.reference_kind), hc, s.reference);
}

VarRanges ranges_from_json(const json& j) {
  VarRanges r;
  only_keys(j, {"vars", "facts"}, "ranges");
  if (auto v = j.find("vars"); v != j.end()) {
    for (auto it = v->begin(); it != v->end(); ++it) {
      VarRange vr;
      only_keys(*it, {"lo", "hi", "integral"}, "ranges.vars." + it.key());
      read(*it, "lo", vr.lo, "ranges.vars." + it.key());
      read(*it, "hi", vr.hi, "ranges.vars." + it.key());
      read(*it, "integral", vr.integral, "ranges.vars." + it.key());
      if (!(vr.lo <= vr.hi)) throw ConfigError("range for '" + it.key() + "' has lo > hi");
      r.vars[it.key()] = vr;
    }
  }
  if (auto f = j.find("facts"); f != j.end()) {
    for (const auto& fact : *f) {
      if (!fact.is_array() || fact.size() != 2) throw ConfigError("each fact must be [greater, lesser]");
      r.facts.push_back({fact[0].get<std::string>(), fact[1].get<std::string>()});
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Commands

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 0;
};

Settings load_settings(const Common& c) {
  Settings s;
  if (!c.config.empty()) apply_config(read_json_file(c.config), s);
  if (c.seed) s.seed = *c.seed;
  s.gp.seed = s.seed;
  s.gp.workers = c.workers > 0 ? c.workers : available_workers();
  return s;
}

int cmd_record(const Common& c, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  if (c.out.empty()) throw ConfigError("record needs --out");
  Outputs files(c.out);
  json extra;
  if (s.target == "rebellion") {
    if (s.legitimacies.empty()) throw ConfigError("rebellion.legitimacies must list at least one value");
    std::vector<RebConfig> configs;
    for (std::size_t k = 0; k < s.legitimacies.size(); ++k) {
      RebConfig rc = s.reb;
      rc.legitimacy = s.legitimacies[k];
      rc.seed = derive_seed(s.seed, {k});
      rc.validate();
      configs.push_back(rc);
    }
    const ReferenceDataset data = record_dataset(configs);
    auto f = files.open("dataset.csv");
    write_csv(data, f);
    extra["rows"] = data.rows();
    extra["runTicks"] = configs.size() * static_cast<std::size_t>(s.reb.ticks);
    out << "recorded " << data.rows() << " rows covering " << configs.size() * static_cast<std::size_t>(s.reb.ticks)
        << " run-ticks\n";
  } else if (s.target == "hawkdove") {
    const HDConfig hc = hd_config(s);
    const WealthDistribution w = make_reference(reference_kind_from_name(s.reference_kind), hc, s.reference);
    auto f = files.open("reference.csv");
    write_csv(distribution_dataset(w, "hawkdove " + s.reference_kind + " reference"), f);
    extra["gini"] = gini(w);
    out << "wrote " << w.size() << " reference values (gini " << fmt(gini(w)) << ")\n";
  } else {
    throw ConfigError("record target must be rebellion or hawkdove");
  }
  files.manifest("record", s, started, extra);
  return kExitOk;
}

int cmd_evolve(const Common& c, const std::string& dataset, std::optional<int> generations, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  if (!dataset.empty()) s.dataset = dataset;
  if (generations) s.gp.max_generations = *generations;
  if (c.out.empty()) throw ConfigError("evolve needs --out");

  Grammar grammar;
  FitnessFn fitness;
  Pruner pruner;
  RuleShape shape = RuleShape::Bare;
  std::shared_ptr<ReferenceDataset> data;
  std::shared_ptr<std::vector<std::size_t>> rows;
  std::shared_ptr<WealthDistribution> reference;

  if (s.task == "hawkdove") {
    const HDConfig hc = hd_config(s);
    reference = std::make_shared<WealthDistribution>(hd_reference(s, hc));
    if (reference->size() != static_cast<std::size_t>(hc.n_agents))
      throw DataError("reference has " + std::to_string(reference->size()) + " values, nAgents is " + std::to_string(hc.n_agents));
    grammar = hawkdove_grammar(hc, s.gp.max_depth);
    shape = RuleShape::Conditional;
    const int repeats = s.repeats;
    fitness = [reference, hc, repeats](const Rule& r) { return hd_fitness(r, *reference, hc, repeats); };
    const VarRanges ranges = hawkdove_ranges(hc);
    pruner = [ranges](const Rule& r) { return prune_with_ranges(r, ranges); };
  } else {
    const RebStep step = step_from_task(s.task);
    if (s.dataset.empty()) throw ConfigError("rebellion tasks need a dataset (--dataset or config \"dataset\")");
    data = std::make_shared<ReferenceDataset>(load_csv(s.dataset));
    std::vector<std::string> missing;
    for (const auto& name : rebellion_terminals(step))
      if (!data->find(name)) missing.push_back(name);
    const std::string label = label_for(step);
    if (!data->find(label)) missing.push_back(label);
    if (!data->find("breed")) missing.push_back("breed");
    if (!missing.empty()) {
      std::string msg = "dataset " + s.dataset + " does not match the rebellion schema; missing columns:";
      for (const auto& m : missing) msg += " " + m;
      std::vector<std::string> extra;
      for (const auto& name : data->names()) {
        bool known = false;
        for (const auto& [n, k] : rebellion_schema()) known = known || n == name;
        if (!known) extra.push_back(name);
      }
      if (!extra.empty()) {
        msg += "; unexpected columns:";
        for (const auto& e : extra) msg += " " + e;
      }
      throw DataError(msg);
    }
    grammar = rebellion_grammar(step, *data, s.gp.max_depth);
    rows = std::make_shared<std::vector<std::size_t>>(filter_rows(*data, parse_filter(s.breed_filter, step)));
    const bool plain = s.plain_accuracy;
    fitness = [data, rows, label, plain](const Rule& r) {
      const Confusion cm = confusion_batched(r, *data, label, *rows, 1);
      return plain ? plain_accuracy(cm) : balanced_accuracy(cm);
    };
    if (!s.gp_target_given) s.gp.target_fitness = 1.0;
    pruner = [](const Rule& r) { return prune(r); };
  }

  Outputs files(c.out);
  const EvolutionResult result = evolve(s.gp, grammar, shape, fitness, pruner);

  {
    auto f = files.open("generations.csv");
    f << "generation,best_fitness,mean_fitness,best_rule\n";
    for (const auto& g : result.log)
      f << g.generation << ',' << fmt(g.best_fitness) << ',' << fmt(g.mean_fitness) << ",\"" << g.best_rule << "\"\n";
  }
  {
    auto f = files.open("hall_of_fame.rules");
    write_rules(f, result.hall_of_fame, nullptr);
  }
  {
    auto f = files.open("hall_of_fame_pruned.rules");
    write_rules(f, result.hall_of_fame, &pruner);
  }
  {
    auto f = files.open("best.rules");
    f << "# fitness " << fmt(result.best_fitness) << '\n';
    f << "raw: " << render(result.best_raw) << '\n';
    f << "pruned: " << render(result.best_pruned) << '\n';
  }
  {
    auto f = files.open("population.csv");
    f << "fitness,rule\n";
    for (const auto& ind : result.final_population)
      f << (ind.fitness ? fmt(*ind.fitness) : std::string()) << ",\"" << render(ind.rule) << "\"\n";
  }
  json extra;
  extra["stopReason"] = result.stop_reason;
  extra["generations"] = result.log.size();
  extra["evaluations"] = result.evaluations;
  extra["bestFitness"] = result.best_fitness;
  extra["bestRule"] = render(result.best_raw);
  extra["bestRulePruned"] = render(result.best_pruned);
  extra["workers"] = s.gp.workers;
  files.manifest("evolve", s, started, extra);

  out << "best fitness " << fmt(result.best_fitness) << " after " << result.log.size() << " generations (" << result.stop_reason
      << ")\n";
  out << "best rule:   " << render(result.best_raw) << '\n';
  out << "pruned:      " << render(result.best_pruned) << '\n';
  return kExitOk;
}

const Rule* find_named(const std::vector<NamedRule>& rules, const std::string& name) {
  for (const auto& r : rules)
    if (r.name == name) return &r.rule;
  return nullptr;
}

int cmd_simulate(const Common& c, const std::string& model, const std::string& rules_path, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  Outputs files(c.out);
  json extra;
  extra["model"] = model;
  extra["rules"] = rules_path;
  if (model == "hawkdove") {
    if (rules_path.empty()) throw ConfigError("simulate hawkdove needs --rules");
    const auto& vars = hawkdove_variables();
    const auto rules = read_rule_file(rules_path, std::set<std::string, std::less<>>(vars.begin(), vars.end()));
    if (rules.empty()) throw DataError(rules_path + " holds no rule");
    const HDConfig hc = hd_config(s);
    const WealthDistribution w = run(hc, rules.front().rule);
    const auto bins = histogram(w, s.histogram_bins);
    const double g = std::any_of(w.begin(), w.end(), [](double v) { return v > 0.0; }) ? gini(w) : 0.0;
    if (files.enabled()) {
      auto f = files.open("distribution.csv");
      write_csv(distribution_dataset(w, "hawkdove run of " + render(rules.front().rule)), f);
      auto h = files.open("histogram.csv");
      write_histogram_csv(bins, h);
    }
    extra["gini"] = g;
    out << "rule: " << render(rules.front().rule) << '\n';
    out << "gini " << fmt(g) << ", min " << fmt(w.front()) << ", max " << fmt(w.back()) << '\n';
    write_histogram_csv(bins, out);
  } else if (model == "rebellion") {
    const RebConfig rc = reb_config(s);
    RebRun result;
    if (rules_path.empty()) {
      result = run_original(rc);
    } else {
      const auto rules = read_rule_file(rules_path);
      const Rule* m = find_named(rules, "M");
      const Rule* a = find_named(rules, "A");
      const Rule* cc = find_named(rules, "C");
      if (!m || !a || !cc) throw DataError(rules_path + " must name three rules M:, A: and C:");
      result = run_evolved(rc, *m, *a, *cc);
    }
    if (files.enabled()) {
      auto f = files.open("trace.csv");
      write_csv(trace_dataset(result.trace, "rebellion trace seed " + std::to_string(rc.seed)), f);
    }
    long long peak = 0;
    for (long long v : result.trace.active) peak = std::max(peak, v);
    extra["activePeaks"] = count_peaks(result.trace.active);
    extra["maxActive"] = peak;
    out << "tick,quiet,active,jailed\n";
    for (std::size_t t = 0; t < result.trace.ticks(); ++t)
      out << t + 1 << ',' << result.trace.quiet[t] << ',' << result.trace.active[t] << ',' << result.trace.jailed[t] << '\n';
  } else {
    throw ConfigError("simulate model must be hawkdove or rebellion");
  }
  if (files.enabled()) files.manifest("simulate", s, started, extra);
  return kExitOk;
}

int cmd_prune(const Common& c, const std::string& rules_path, const std::string& ranges_arg, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  if (!ranges_arg.empty()) s.ranges = ranges_arg;
  if (rules_path.empty()) throw ConfigError("prune needs --rules");
  const auto rules = read_rule_file(rules_path);
  std::optional<VarRanges> ranges;
  if (s.ranges == "hawkdove") ranges = hawkdove_ranges(hd_config(s));
  else if (!s.ranges.empty()) ranges = ranges_from_json(read_json_file(s.ranges));

  std::ostringstream text;
  for (const auto& nr : rules) {
    const Rule p = ranges ? prune_with_ranges(nr.rule, *ranges) : prune(nr.rule);
    if (!nr.name.empty()) text << nr.name << ": ";
    text << render(p) << '\n';
  }
  out << text.str();
  if (!c.out.empty()) {
    Outputs files(c.out);
    auto f = files.open("pruned.rules");
    f << text.str();
    f.close();
    files.manifest("prune", s, started, json{{"rules", rules_path}});
  }
  return kExitOk;
}

int cmd_eval(const Common& c, const std::string& rules_path, const std::string& dataset, std::string label,
             const std::string& filter_name, bool plain, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  if (!dataset.empty()) s.dataset = dataset;
  if (rules_path.empty()) throw ConfigError("eval needs --rules");
  if (s.dataset.empty()) throw ConfigError("eval needs --dataset");
  const ReferenceDataset data = load_csv(s.dataset);
  const auto rules = read_rule_file(rules_path);
  if (rules.empty()) throw DataError(rules_path + " holds no rule");

  std::ostringstream text;
  for (const auto& nr : rules) {
    std::string lab = label;
    BreedFilter filter = BreedFilter::All;
    if (lab.empty()) {
      if (nr.name == "M" || nr.name == "A" || nr.name == "C") {
        const RebStep step = step_from_task("rebellion:" + nr.name);
        lab = label_for(step);
        filter = default_filter(step);
      } else {
        throw ConfigError("eval needs --label (or rules named M:, A:, C:)");
      }
    }
    if (!filter_name.empty()) filter = parse_filter(filter_name, RebStep::C);
    const double score = classify_fitness(nr.rule, data, lab, filter, plain, c.workers > 0 ? c.workers : available_workers());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", score);
    if (!nr.name.empty()) text << nr.name << ": ";
    text << buf << '\n';
  }
  out << text.str();
  if (!c.out.empty()) {
    Outputs files(c.out);
    auto f = files.open("scores.txt");
    f << text.str();
    f.close();
    files.manifest("eval", s, started, json{{"rules", rules_path}, {"dataset", s.dataset}});
  }
  return kExitOk;
}

int cmd_compare(const Common& c, const std::string& a_path, const std::string& b_path, std::ostream& out) {
  const std::string started = timestamp();
  Settings s = load_settings(c);
  const Trace a = trace_from_dataset(load_csv(a_path));
  const Trace b = trace_from_dataset(load_csv(b_path));
  const TraceComparison cmp = compare_traces(a, b);
  std::ostringstream text;
  text << "series,mean_abs_diff,peaks_a,peaks_b,max_cross_correlation\n";
  auto line = [&](const char* name, const SeriesComparison& sc) {
    text << name << ',' << fmt(sc.mean_abs_diff) << ',' << sc.peaks_a << ',' << sc.peaks_b << ',' << fmt(sc.max_cross_correlation)
         << '\n';
  };
  line("active", cmp.active);
  line("jailed", cmp.jailed);
  line("quiet", cmp.quiet);
  out << text.str();
  if (!c.out.empty()) {
    Outputs files(c.out);
    auto f = files.open("comparison.csv");
    f << text.str();
    f.close();
    files.manifest("compare", s, started, json{{"a", a_path}, {"b", b_path}});
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolve agent behaviour rules with genetic programming", "abmgp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ABMGP_VERSION);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file (a run manifest also works)");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "master seed");
    sub->add_option("--workers", common.workers, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  };

  auto* record = app.add_subcommand("record", "record a reference dataset");
  add_common(record);

  std::string dataset;
  std::optional<int> generations;
  auto* evolve_cmd = app.add_subcommand("evolve", "evolve rules against a reference");
  add_common(evolve_cmd);
  evolve_cmd->add_option("--dataset", dataset, "reference CSV");
  evolve_cmd->add_option("--generations", generations, "override gp.maxGenerations");

  std::string model, rules_path;
  auto* simulate = app.add_subcommand("simulate", "run a model with given rules");
  add_common(simulate);
  simulate->add_option("model", model, "hawkdove | rebellion")->required();
  simulate->add_option("--rules", rules_path, "rule file (rebellion: M:, A:, C: lines; omit for the original model)");

  std::string ranges;
  auto* prune_cmd = app.add_subcommand("prune", "simplify rules");
  add_common(prune_cmd);
  prune_cmd->add_option("--rules", rules_path, "rule file")->required();
  prune_cmd->add_option("--ranges", ranges, "'hawkdove' or a JSON ranges file");

  std::string label, filter;
  bool plain = false;
  auto* eval_cmd = app.add_subcommand("eval", "score classifier rules on a dataset");
  add_common(eval_cmd);
  eval_cmd->add_option("--rules", rules_path, "rule file")->required();
  eval_cmd->add_option("--dataset", dataset, "dataset CSV");
  eval_cmd->add_option("--label", label, "label column");
  eval_cmd->add_option("--filter", filter, "all | citizens | cops");
  eval_cmd->add_flag("--plain-accuracy", plain, "plain accuracy instead of balanced accuracy");

  std::string trace_a, trace_b;
  auto* compare = app.add_subcommand("compare", "compare two rebellion traces");
  add_common(compare);
  compare->add_option("a", trace_a, "trace CSV")->required();
  compare->add_option("b", trace_b, "trace CSV")->required();

  std::vector<std::string> argv_rest(args.rbegin(), args.rend());
  if (!argv_rest.empty()) argv_rest.pop_back();  // program name
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << ABMGP_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "abmgp: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (record->parsed()) return cmd_record(common, out);
    if (evolve_cmd->parsed()) return cmd_evolve(common, dataset, generations, out);
    if (simulate->parsed()) return cmd_simulate(common, model, rules_path, out);
    if (prune_cmd->parsed()) return cmd_prune(common, rules_path, ranges, out);
    if (eval_cmd->parsed()) return cmd_eval(common, rules_path, dataset, label, filter, plain, out);
    if (compare->parsed()) return cmd_compare(common, trace_a, trace_b, out);
  } catch (const ConfigError& e) {
    err << "abmgp: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "abmgp: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "abmgp: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace abmgp
