#include <doctest.h>

#include <cmath>
#include <functional>

#include "abmgp/errors.hpp"
#include "abmgp/gp.hpp"
#include "abmgp/hawkdove.hpp"

using namespace abmgp;

namespace {

Grammar small_grammar(int depth) {
  Grammar g;
  g.terminals = {{"x", -3, 3, true}};
  g.constants.integers = std::pair{0, 2};
  g.operators = {Op::Add, Op::Sub, Op::Mul};
  g.max_depth = depth;
  return g;
}

double poly_fitness(const Expr& e) {
  double err = 0.0;
  for (int x = -3; x <= 3; ++x) {
    const double want = x * x - 2.0 * x + 1.0;
    const double d = eval(e, {{"x", static_cast<double>(x)}}) - want;
    err += d * d;
  }
  return 1.0 / (1.0 + err);
}

// Only trees of at most 3 nodes score.
double small_tree_fitness(const Expr& e) { return e.size() <= 3 ? poly_fitness(e) : 0.0; }

// Every tree of at most 3 nodes over {x, 0, 1, 2} and {+, -, *}.
std::vector<Expr> all_small_trees() {
  std::vector<Expr> leaves = {Expr::variable("x"), Expr::constant(0), Expr::constant(1), Expr::constant(2)};
  std::vector<Expr> out = leaves;
  for (Op op : {Op::Add, Op::Sub, Op::Mul})
    for (const Expr& a : leaves)
      for (const Expr& b : leaves) out.push_back(Expr::binary(op, a, b));
  return out;
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("population size and determinism") {
  GPConfig c;
  c.population_size = 4;
  const Grammar g = small_grammar(4);
  const Population p = init_population(c, g, RuleShape::Conditional);
  CHECK(p.size() == 4);
  const Population q = init_population(c, g, RuleShape::Conditional);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].rule == q[i].rule);
  for (const auto& ind : p) CHECK(ind.rule.is_conditional());
}

TEST_CASE("config validation") {
  GPConfig c;
  c.population_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GPConfig{};
  c.p_mutate = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = GPConfig{};
  c.elitism = 200;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(GPConfig{}.validate());
}

TEST_CASE("roulette pick rates") {
  auto rates = [](std::vector<double> f) {
    Rng rng(12345);
    std::vector<double> hits(f.size(), 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits[select_proportional(f, rng)] += 1.0;
    for (double& h : hits) h /= n;
    return hits;
  };
  const auto a = rates({3, 1});
  CHECK(std::fabs(a[0] - 0.75) < 0.01);
  CHECK(std::fabs(a[1] - 0.25) < 0.01);
  for (double r : rates({1, 1, 1, 1})) CHECK(std::fabs(r - 0.25) < 0.01);
  for (double r : rates({0, 0})) CHECK(std::fabs(r - 0.5) < 0.01);
}

TEST_CASE("mutation") {
  const Grammar g = small_grammar(5);
  const Individual single{Rule::bare(Expr::constant(1)), 0.5};
  int changed = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const Individual m = mutate(single, g, rng);
    CHECK_FALSE(m.fitness.has_value());
    changed += !(m.rule == single.rule);
  }
  CHECK(changed > 100);

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Individual ind{random_rule(g, RuleShape::Conditional, rng), std::nullopt};
    CHECK(mutate(ind, g, rng).rule.depth() <= g.max_depth);
  }
  Rng a(77), b(77);
  const Individual ind{random_rule(g, RuleShape::Bare, a), std::nullopt};
  random_rule(g, RuleShape::Bare, b);
  CHECK(mutate(ind, g, a).rule == mutate(ind, g, b).rule);
}

TEST_CASE("crossover") {
  const Individual a{Rule::bare(Expr::constant(1)), std::nullopt};
  const Individual b{Rule::bare(Expr::constant(2)), std::nullopt};
  Rng r0(3);
  const auto [c1, c2] = crossover(a, b, r0, 8);
  CHECK(c1.rule == b.rule);
  CHECK(c2.rule == a.rule);

  const Grammar g = small_grammar(6);
  Rng rng(8);
  int conserved = 0;
  for (int i = 0; i < 1000; ++i) {
    const Individual p{random_rule(g, RuleShape::Conditional, rng), std::nullopt};
    const Individual q{random_rule(g, RuleShape::Conditional, rng), std::nullopt};
    const auto [x, y] = crossover(p, q, rng, 1000);
    conserved += x.rule.size() + y.rule.size() == p.rule.size() + q.rule.size();
  }
  CHECK(conserved == 1000);

  const Individual p{random_rule(g, RuleShape::Conditional, rng), std::nullopt};
  const Individual q{random_rule(g, RuleShape::Conditional, rng), std::nullopt};
  Rng s1(5), s2(5);
  const auto x = crossover(p, q, s1, 6);
  const auto y = crossover(p, q, s2, 6);
  CHECK(x.first.rule == y.first.rule);
  CHECK(x.second.rule == y.second.rule);
  CHECK(x.first.rule.depth() <= 6);
  CHECK(x.second.rule.depth() <= 6);
}

TEST_CASE("constant fitness runs to maxGenerations") {
  GPConfig c;
  c.population_size = 20;
  c.max_generations = 7;
  const auto r = evolve(c, small_grammar(4), RuleShape::Bare, [](const Rule&) { return 1.0; });
  CHECK(r.log.size() == 7);
  CHECK(r.stop_reason == "max_generations");
  CHECK(r.final_population.size() == 20);
}

TEST_CASE("zero generations scores only the initial population") {
  GPConfig c;
  c.population_size = 10;
  c.max_generations = 0;
  const auto r = evolve(c, small_grammar(4), RuleShape::Bare, [](const Rule& rule) { return 1.0 / rule.size(); });
  CHECK(r.log.size() == 1);
  CHECK(r.evaluations <= 10);
}

TEST_CASE("stopping rules") {
  GPConfig c;
  c.population_size = 20;
  c.max_generations = 50;
  c.target_fitness = 0.0;
  CHECK(evolve(c, small_grammar(4), RuleShape::Bare, [](const Rule&) { return 0.5; }).stop_reason == "target_fitness");
  c.target_fitness.reset();
  c.stagnation_limit = 3;
  const auto r = evolve(c, small_grammar(4), RuleShape::Bare, [](const Rule&) { return 0.5; });
  CHECK(r.stop_reason == "stagnation");
  CHECK(r.log.size() == 4);
}

TEST_CASE("fitness errors carry the rule text") {
  GPConfig c;
  c.population_size = 5;
  try {
    evolve(c, small_grammar(3), RuleShape::Bare, [](const Rule&) -> double { throw DataError("boom"); });
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(rule: ") != std::string::npos);
  }
  CHECK_THROWS_AS(evolve(c, small_grammar(3), RuleShape::Bare, [](const Rule&) { return -1.0; }), DataError);
}

TEST_CASE("small search reaches the brute-force optimum") {
  const int depth = 4;
  double best = 0.0;
  for (const Expr& e : all_small_trees()) best = std::max(best, small_tree_fitness(e));
  REQUIRE(best < 1.0);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GPConfig c;
    c.population_size = 50;
    c.max_generations = 20;
    c.max_depth = depth;
    c.seed = seed;
    c.target_fitness = best;
    const auto r = evolve(c, small_grammar(depth), RuleShape::Bare, [](const Rule& rule) { return small_tree_fitness(rule.condition); });
    hits += r.best_fitness == best;
  }
  CHECK(hits == 5);
}

TEST_CASE("run invariants") {
  GPConfig c;
  c.population_size = 30;
  c.max_generations = 15;
  c.seed = 9;
  const Grammar g = small_grammar(5);
  const auto r = evolve(c, g, RuleShape::Conditional, [](const Rule& rule) { return poly_fitness(rule.condition); });
  for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].best_fitness >= r.log[i - 1].best_fitness);
  for (const auto& s : r.hall_of_fame) CHECK(s.rule.depth() <= c.max_depth);
  CHECK(r.hall_of_fame.size() <= 10);
  CHECK(r.final_population.size() == 30);
  CHECK(r.best_fitness == r.hall_of_fame.front().fitness);
}

TEST_CASE("operator frequencies match the configured probabilities") {
  GPConfig c;
  c.population_size = 101;
  c.max_generations = 180;
  c.max_depth = 4;
  const auto r = evolve(c, small_grammar(4), RuleShape::Bare, [](const Rule&) { return 1.0; });
  const double total = static_cast<double>(r.operator_counts[0] + r.operator_counts[1] + r.operator_counts[2]);
  REQUIRE(total >= 10000);
  const double p[3] = {c.p_reproduce, c.p_mutate, c.p_crossover};
  double chi2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double obs = static_cast<double>(r.operator_counts[static_cast<std::size_t>(k)]);
    CHECK(std::fabs(obs / total - p[k]) < 0.02);
    chi2 += (obs - p[k] * total) * (obs - p[k] * total) / (p[k] * total);
  }
  // df 2, p = 0.001
  CHECK(chi2 < 13.816);
}

TEST_CASE("results do not depend on the worker count") {
  const HDConfig hc;
  const WealthDistribution ref = make_reference(ReferenceKind::TwoTier, hc);
  GPConfig c;
  c.population_size = 24;
  c.max_generations = 3;
  c.seed = 4;
  auto fit = [&](const Rule& r) { return hd_fitness(r, ref, hc, 2); };
  c.workers = 1;
  const auto a = evolve(c, hawkdove_grammar(hc), RuleShape::Conditional, fit);
  c.workers = 4;
  const auto b = evolve(c, hawkdove_grammar(hc), RuleShape::Conditional, fit);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].best_fitness == b.log[i].best_fitness);
    CHECK(a.log[i].mean_fitness == b.log[i].mean_fitness);
    CHECK(a.log[i].best_rule == b.log[i].best_rule);
  }
  REQUIRE(a.hall_of_fame.size() == b.hall_of_fame.size());
  for (std::size_t i = 0; i < a.hall_of_fame.size(); ++i) CHECK(a.hall_of_fame[i].rule == b.hall_of_fame[i].rule);
}

}  // TEST_SUITE
