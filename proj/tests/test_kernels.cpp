#include <doctest.h>

#include <stdexcept>

#include "abmgp/errors.hpp"
#include "abmgp/kernels.hpp"

using namespace abmgp;

namespace {

ReferenceDataset random_table(std::size_t rows, Rng& rng) {
  ReferenceDataset d;
  std::vector<double> x(rows), y(rows), z(rows), lab(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    x[i] = uniform_int(rng, -3, 3);
    y[i] = uniform_real(rng, 0.0, 1.0);
    z[i] = uniform_int(rng, 0, 9);
    lab[i] = (x[i] + z[i] > 3) ? 1.0 : 0.0;
  }
  d.add_column("x", ColumnKind::Numeric, x);
  d.add_column("y", ColumnKind::Numeric, y);
  d.add_column("z", ColumnKind::Numeric, z);
  d.add_column("lab", ColumnKind::Label, lab);
  return d;
}

Grammar xyz_grammar() {
  Grammar g;
  g.terminals = {{"x", -3, 3, true}, {"y", 0, 1, false}, {"z", 0, 9, true}};
  g.constants.integers = std::pair{0, 9};
  g.constants.reals = std::pair{0.0, 1.0};
  g.operators = all_operators();
  g.max_depth = 7;
  return g;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("compiled programs match the tree walk exactly") {
  Rng rng(3);
  const ReferenceDataset d = random_table(50, rng);
  const Grammar g = xyz_grammar();
  for (int i = 0; i < 500; ++i) {
    const Expr e = random_expr(g, rng);
    const Program p = Program::compile(e, d);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const VarBindings b = {{"x", d.column(0).values[r]}, {"y", d.column(1).values[r]}, {"z", d.column(2).values[r]}};
      const double want = eval(e, b);
      const double got = p.eval_row(d, r);
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("batched confusion equals the reference, any worker count") {
  Rng rng(4);
  const ReferenceDataset d = random_table(3000, rng);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < d.rows(); r += 2) rows.push_back(r);
  const Grammar g = xyz_grammar();
  for (int i = 0; i < 100; ++i) {
    const Rule rule = i % 2 ? Rule::bare(random_expr(g, rng))
                            : Rule::conditional(random_expr(g, rng), random_expr(g, rng), random_expr(g, rng));
    const Confusion want = confusion_reference(rule, d, "lab", rows);
    CHECK(confusion_batched(rule, d, "lab", rows, 1) == want);
    CHECK(confusion_batched(rule, d, "lab", rows, 4) == want);
  }
}

TEST_CASE("unknown variables and labels") {
  Rng rng(5);
  const ReferenceDataset d = random_table(10, rng);
  std::vector<std::size_t> rows = {0, 1, 2};
  CHECK_THROWS_AS(confusion_batched(parse_rule("w > 1"), d, "lab", rows), DataError);
  CHECK_THROWS_AS(confusion_batched(parse_rule("x > 1"), d, "nope", rows), DataError);
}

TEST_CASE("map_parallel equals map_serial") {
  auto f = [](std::size_t i) { return static_cast<double>(i * i) * 0.5; };
  CHECK(map_parallel(1000, f, 4) == map_serial(1000, f));
  CHECK(map_parallel(0, f, 4).empty());
}

TEST_CASE("map_parallel rethrows the lowest failing index") {
  auto f = [](std::size_t i) -> double {
    if (i == 17 || i == 500) throw std::runtime_error("fail " + std::to_string(i));
    return 0.0;
  };
  try {
    map_parallel(1000, f, 4);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "fail 17");
  }
}

}  // TEST_SUITE
