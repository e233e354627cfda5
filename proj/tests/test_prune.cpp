#include <doctest.h>

#include "abmgp/errors.hpp"
#include "abmgp/hawkdove.hpp"
#include "abmgp/prune.hpp"

using namespace abmgp;

namespace {

const char* kEquality =
    "IF (previousResource - previousResource) * (previousResource - previousResource) >= "
    "(previousTook - resource) - (totalResource - agents) THEN 1";
const char* kInequalityRaw = "IF (previousTook - totalAgents) != agents AND previousTook THEN 1 ELSE 9";

VarRanges x_in(double lo, double hi) {
  VarRanges r;
  r.vars["x"] = {lo, hi, false};
  return r;
}

}  // namespace

TEST_SUITE("prune") {

TEST_CASE("algebraic identities") {
  CHECK(render(prune(parse_expr("(x - x) * (x - x)"))) == "0");
  CHECK(render(prune(parse_expr("x + 0"))) == "x");
  CHECK(render(prune(parse_expr("x * 1"))) == "x");
  CHECK(render(prune(parse_expr("x / 1"))) == "x");
  CHECK(render(prune(parse_expr("NOT (x > 3)"))) == "x <= 3");
  CHECK(render(prune(parse_expr("x >= x"))) == "1");
  CHECK(render(prune(parse_expr("2 + 3 * 4"))) == "14");
}

TEST_CASE("equality rule does not fold without ranges") {
  const Rule p = prune(parse_rule(kEquality));
  CHECK_FALSE(p.condition.is_constant());
  CHECK(p.condition.variables().count("totalResource") == 1);
}

TEST_CASE("equality rule with hawk-dove ranges is take 1") {
  const Rule p = prune_with_ranges(parse_rule(kEquality), hawkdove_ranges(HDConfig{}));
  CHECK(render(p) == "1");
}

TEST_CASE("interval comparisons") {
  CHECK(render(prune_with_ranges(parse_expr("x > 5"), x_in(10, 20))) == "1");
  CHECK(render(prune_with_ranges(parse_expr("x > 5"), x_in(0, 20))) == "x > 5");
  CHECK(render(prune_with_ranges(parse_expr("x > 5"), x_in(0, 4))) == "0");
  CHECK_THROWS_AS(prune_with_ranges(parse_expr("y > 5"), x_in(0, 4)), DataError);
}

TEST_CASE("published inequality rule prunes to the printed form") {
  const Rule p = prune_with_ranges(parse_rule(kInequalityRaw), hawkdove_ranges(HDConfig{}));
  CHECK(render(p) == "IF previousTook >= 1 THEN 1 ELSE 9");
}

TEST_CASE("minimal rules are fixed points") {
  for (const char* text : {"IF previousTook >= 1 THEN 1 ELSE 9", "x > 5", "jailTerm0 == 0 AND freeNeighborhood0 > 0"}) {
    const Rule r = parse_rule(text);
    CHECK(prune(r) == r);
  }
}

TEST_CASE("sampled equivalence") {
  const VarRanges r = x_in(-10, 10);
  Rng rng(5);
  CHECK_FALSE(equivalent_sampled(parse_expr("x + 1"), parse_expr("x + 2"), r, 100, rng));
  CHECK(equivalent_sampled(parse_expr("x * 2"), parse_expr("x + x"), r, 100, rng));
  const Expr e = parse_expr("(x - 3) * (x / x) + 0 * x");
  CHECK(equivalent_sampled(e, prune(e), r, 100, rng));
}

TEST_CASE("soundness and idempotence on seeded random rules") {
  const HDConfig hc;
  const Grammar g = hawkdove_grammar(hc, 6);
  const VarRanges ranges = hawkdove_ranges(hc);
  Rng gen(31337), sample(1);
  int sound = 0, sound_ranges = 0, idem = 0;
  const int n = 300;
  for (int i = 0; i < n; ++i) {
    const Rule r = Rule::conditional(random_expr(g, gen), random_expr(g, gen), random_expr(g, gen));
    const Rule p = prune(r);
    sound += equivalent_sampled(r, p, ranges, 100, sample);
    sound_ranges += equivalent_sampled(r, prune_with_ranges(r, ranges), ranges, 100, sample);
    idem += prune(p) == p;
  }
  CHECK(sound == n);
  CHECK(sound_ranges == n);
  CHECK(idem == n);
}

TEST_CASE("enclosures") {
  VarRanges r = x_in(1, 3);
  const Interval i = enclose(parse_expr("x * 2 - 1"), r);
  CHECK(i.lo == 1.0);
  CHECK(i.hi == 5.0);
  const Interval b = enclose(parse_expr("x > 0"), r);
  CHECK(b.lo == 1.0);
  CHECK(b.hi == 1.0);
}

}  // TEST_SUITE
