// Acceptance run: one PASS/FAIL line per criterion. Arguments select a
// subset by number, e.g. `abmgp_acceptance 1 8 10`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abmgp/cli.hpp"
#include "abmgp/gp.hpp"
#include "abmgp/hawkdove.hpp"
#include "abmgp/kernels.hpp"
#include "abmgp/prune.hpp"
#include "abmgp/rebellion.hpp"
#include "abmgp/refdata.hpp"

using namespace abmgp;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kWork = fs::temp_directory_path() / "abmgp_acceptance";
const std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "abmgp");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::cerr << "  abmgp exited " << code << ": " << err.str();
  return code;
}

std::string fmt(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Reference dataset recorded once through the CLI and shared.
const std::string& dataset_path() {
  static const std::string path = [] {
    const fs::path dir = kWork / "record";
    if (cli({"record", "--out", dir.string(), "--seed", "1"}) != 0) throw std::runtime_error("record failed");
    return (dir / "dataset.csv").string();
  }();
  return path;
}

json evolve_via_cli(const std::string& name, const json& config, std::uint64_t seed, const std::vector<std::string>& extra = {}) {
  const fs::path dir = kWork / name;
  fs::create_directories(dir);
  write_file(dir / "config.json", config.dump(2));
  std::vector<std::string> args = {"evolve", "--config", (dir / "config.json").string(), "--seed", std::to_string(seed),
                                   "--out", (dir / "out").string()};
  args.insert(args.end(), extra.begin(), extra.end());
  if (cli(args) != 0) return json();
  return json::parse(slurp(dir / "out" / "manifest.json"));
}

// ---------------------------------------------------------------------------

Outcome self_consistency() {
  const ReferenceDataset d = load_csv(dataset_path());
  Outcome o{true, ""};
  for (RebStep s : {RebStep::M, RebStep::A, RebStep::C}) {
    const double f = classify_fitness(ground_truth_rule(s), d, label_for(s), default_filter(s));
    o.pass = o.pass && f == 1.0;
    o.detail += label_for(s) + "=" + fmt(f, "%.17g") + " ";
  }
  o.detail += "(" + std::to_string(d.rows()) + " rows)";
  return o;
}

Outcome recovery(const char* step, int population, int generations, double threshold, int quorum,
                 int max_depth = 8) {
  int hits = 0;
  std::string scores;
  for (std::uint64_t seed : kSeeds) {
    json cfg = {{"task", std::string("rebellion:") + step},
                {"dataset", dataset_path()},
                {"gp",
                 {{"populationSize", population},
                  {"maxGenerations", generations},
                  {"maxDepth", max_depth},
                  {"targetFitness", threshold}}}};
    const json m = evolve_via_cli(std::string("rebellion_") + step + "_" + std::to_string(seed), cfg, seed);
    const double best = m.is_null() ? 0.0 : m["bestFitness"].get<double>();
    hits += best >= threshold;
    scores += fmt(best, "%.4f") + (m.is_null() ? "" : "@" + std::to_string(m["generations"].get<int>() - 1)) + " ";
  }
  return {hits >= quorum, std::to_string(hits) + "/5 seeds >= " + fmt(threshold) + " (need " + std::to_string(quorum) +
                              "); best@generation: " + scores};
}

Outcome hawkdove_equality() {
  const HDConfig hc;
  const VarRanges ranges = hawkdove_ranges(hc);
  const Rule take1 = Rule::bare(Expr::constant(1));
  int hits = 0, equivalent = 0;
  std::string pruned;
  for (std::uint64_t seed : kSeeds) {
    json cfg = {{"task", "hawkdove"},
                {"gp", {{"populationSize", 200}, {"maxGenerations", 50}, {"targetFitness", 1.0}}},
                {"hawkdove", {{"reference", {{"kind", "equality"}}}}}};
    const json m = evolve_via_cli("hd_equality_" + std::to_string(seed), cfg, seed);
    if (m.is_null()) continue;
    if (m["bestFitness"].get<double>() < 1.0) continue;
    ++hits;
    const Rule best = parse_rule(m["bestRule"].get<std::string>());
    const Rule p = prune_with_ranges(best, ranges);
    Rng rng(seed);
    equivalent += equivalent_sampled(p, take1, ranges, 1000, rng);
    pruned += "'" + render(p) + "' ";
  }
  return {hits >= 3 && equivalent == hits,
          std::to_string(hits) + "/5 reach 1.0, " + std::to_string(equivalent) + " pruned to take-1 equivalents: " + pruned};
}

Outcome hawkdove_inequality() {
  HDConfig hc;
  const auto published = read_rule_file(std::string(ABMGP_SOURCE_DIR) + "/rules/hawkdove_inequality.rules");
  const Rule& rule = published.front().rule;
  bool shape_ok = true;
  std::string shape;
  for (std::uint64_t seed : kSeeds) {
    hc.seed = seed;
    const WealthDistribution w = run(hc, rule);
    const double g = gini(w), bc = bimodality_coefficient(w);
    shape_ok = shape_ok && g > 0.2 && bc > 5.0 / 9.0;
    shape += fmt(g, "%.3f") + "/" + fmt(bc, "%.3f") + " ";
  }

  const WealthDistribution target = make_reference(ReferenceKind::TwoTier, hc);
  int hits = 0;
  std::string ratios;
  for (std::uint64_t seed : kSeeds) {
    HDConfig cs = hc;
    cs.seed = seed;
    double best_const = 0.0;
    for (int k = 0; k <= 9; ++k) best_const = std::max(best_const, hd_fitness(Rule::bare(Expr::constant(k)), target, cs, 3));
    json cfg = {{"task", "hawkdove"},
                {"gp", {{"populationSize", 200}, {"maxGenerations", 50}}},
                {"hawkdove", {{"reference", {{"kind", "twoTier"}, {"split", 0.5}, {"low", 100}, {"high", 900}}}}}};
    const json m = evolve_via_cli("hd_two_tier_" + std::to_string(seed), cfg, seed);
    const double best = m.is_null() ? 0.0 : m["bestFitness"].get<double>();
    hits += best >= 1.1 * best_const;
    ratios += fmt(best / best_const, "%.2f") + "x ";
  }
  return {shape_ok && hits >= 3, "published rule gini/bimodality per seed: " + shape + "; two-tier evolved vs best constant: " +
                                     ratios + "(" + std::to_string(hits) + "/5 >= 1.10x, need 3)"};
}

bool peaks_agree(int a, int b) { return std::abs(a - b) <= 0.5 * std::max(a, b); }

Outcome trace_fidelity() {
  const auto rules = read_rule_file(std::string(ABMGP_SOURCE_DIR) + "/rules/rebellion_paper.rules");
  auto named = [&](const char* n) -> const Rule& {
    for (const auto& r : rules)
      if (r.name == n) return r.rule;
    throw std::runtime_error(std::string("missing rule ") + n);
  };
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    RebConfig c;
    c.seed = seed;
    const RebRun o = run_original(c);
    const RebRun e = run_evolved(c, named("M"), named("A"), named("C"));
    long long citizens = o.trace.quiet[0] + o.trace.active[0] + o.trace.jailed[0];
    bool conserved = o.trace.ticks() == 40 && e.trace.ticks() == 40;
    for (const Trace* t : {&o.trace, &e.trace})
      for (std::size_t k = 0; k < t->ticks(); ++k) conserved = conserved && t->quiet[k] + t->active[k] + t->jailed[k] == citizens;
    const TraceComparison cmp = compare_traces(o.trace, e.trace);
    const bool agree = peaks_agree(cmp.active.peaks_a, cmp.active.peaks_b);
    ok = ok && conserved && agree;
    detail += std::to_string(cmp.active.peaks_a) + "/" + std::to_string(cmp.active.peaks_b) + (conserved ? "" : "(not conserved)") + " ";
  }
  return {ok, "active peaks original/evolved per seed: " + detail};
}

Outcome pruner_soundness() {
  const HDConfig hc;
  const ReferenceDataset d = load_csv(dataset_path());
  struct Case {
    std::string name;
    Grammar grammar;
    RuleShape shape;
  };
  const std::vector<Case> cases = {{"hawkdove", hawkdove_grammar(hc), RuleShape::Conditional},
                                   {"rebellion:A", rebellion_grammar(RebStep::A, d), RuleShape::Bare}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const VarRanges ranges = c.name == "hawkdove" ? hawkdove_ranges(hc) : ranges_from_grammar(c.grammar);
    Rng gen(2024), sample(7);
    int sound = 0, sound_ranges = 0, idem = 0;
    for (int i = 0; i < 1000; ++i) {
      const Rule r = random_rule(c.grammar, c.shape, gen);
      const Rule p = prune(r);
      sound += equivalent_sampled(r, p, ranges, 100, sample);
      sound_ranges += equivalent_sampled(r, prune_with_ranges(r, ranges), ranges, 100, sample);
      idem += prune(p) == p;
    }
    ok = ok && sound == 1000 && sound_ranges == 1000 && idem == 1000;
    detail += c.name + ": prune " + std::to_string(sound) + ", with ranges " + std::to_string(sound_ranges) + ", idempotent " +
              std::to_string(idem) + "; ";
  }
  return {ok, detail};
}

Outcome determinism() {
  struct Task {
    std::string name;
    json config;
  };
  const std::vector<Task> tasks = {
      {"hawkdove", {{"task", "hawkdove"},
                    {"gp", {{"populationSize", 60}, {"maxGenerations", 6}}},
                    {"hawkdove", {{"reference", {{"kind", "twoTier"}}}}}}},
      {"rebellion_C", {{"task", "rebellion:C"}, {"dataset", dataset_path()}, {"gp", {{"populationSize", 100}, {"maxGenerations", 6}, {"targetFitness", 2.0}}}}}};
  bool ok = true;
  std::string detail;
  for (const Task& t : tasks) {
    const json a = evolve_via_cli("det_" + t.name + "_w1", t.config, 11, {"--workers", "1"});
    const json b = evolve_via_cli("det_" + t.name + "_w8", t.config, 11, {"--workers", "8"});
    bool same = !a.is_null() && !b.is_null();
    for (const char* f : {"generations.csv", "hall_of_fame.rules"}) {
      const std::string x = slurp(kWork / ("det_" + t.name + "_w1") / "out" / f);
      const std::string y = slurp(kWork / ("det_" + t.name + "_w8") / "out" / f);
      same = same && !x.empty() && x == y;
    }
    ok = ok && same;
    detail += t.name + (same ? " identical; " : " DIFFERS; ");
  }
  return {ok, detail};
}

Outcome metric_identities() {
  std::vector<std::string> failed;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) failed.push_back(what);
  };
  expect(mse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0, "mse 0");
  expect(mse(std::vector<double>{0, 0}, std::vector<double>{10, 10}) == 100.0, "mse 100");
  expect(mse(std::vector<double>{1, 2}, std::vector<double>{2, 4}) == 2.5, "mse 2.5");
  Confusion c;
  c.tp = 8;
  c.fn = 2;
  c.tn = 90;
  c.fp = 10;
  expect(balanced_accuracy(c) == 0.85, "balanced accuracy 0.85");
  std::vector<int> labels(100, 0);
  std::fill(labels.begin(), labels.begin() + 10, 1);
  expect(balanced_accuracy(labels, labels) == 1.0, "balanced accuracy perfect");
  expect(balanced_accuracy(std::vector<int>(100, 1), labels) == 0.5, "balanced accuracy all-positive");
  expect(gini(std::vector<double>(60, 100.0)) == 0.0, "gini flat");
  expect(gini(std::vector<double>{0, 0, 0, 1}) == 0.75, "gini 0.75");
  std::vector<double> tier(60, 100.0);
  std::fill(tier.begin() + 30, tier.end(), 900.0);
  expect(gini(tier) == 0.4, "gini two-tier 0.4");
  std::string detail = failed.empty() ? "all 9 identities exact" : "failed:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail};
}

struct Criterion {
  int number;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  const std::vector<Criterion> criteria = {
      {1, "self-consistency oracle", 60, self_consistency},
      {2, "Rule M recovery", 600, [] { return recovery("M", 200, 30, 1.0, 3); }},
      {3, "Rule C recovery", 300, [] { return recovery("C", 200, 20, 1.0, 4, 5); }},
      {4, "Rule A approach", 7200, [] { return recovery("A", 500, 100, 0.95, 2); }},
      {5, "hawk-dove equality", 1800, hawkdove_equality},
      {6, "hawk-dove inequality shape", 1800, hawkdove_inequality},
      {7, "trace fidelity", 600, trace_fidelity},
      {8, "pruner soundness", 600, pruner_soundness},
      {9, "engine determinism", 600, determinism},
      {10, "metric identities", 10, metric_identities},
  };

  // Record the shared dataset up front so its cost is not billed to criterion 1.
  dataset_path();

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << "criterion " << c.number << " [" << (pass ? "PASS" : "FAIL") << "] " << c.title << ": " << o.detail << " ("
              << fmt(secs, "%.1f") << " s, limit " << fmt(c.limit_seconds, "%.0f") << " s" << (in_time ? "" : ", OVER TIME")
              << ")" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
