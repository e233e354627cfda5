#include <doctest.h>

#include <cmath>
#include <sstream>

#include "abmgp/errors.hpp"
#include "abmgp/refdata.hpp"

using namespace abmgp;

namespace {

// Gini by the mean absolute difference, independent of the sorted closed form.
double gini_pairwise(const std::vector<double>& x) {
  double diff = 0.0, sum = 0.0;
  for (double a : x) {
    sum += a;
    for (double b : x) diff += std::fabs(a - b);
  }
  const double n = static_cast<double>(x.size());
  return diff / (2.0 * n * sum);
}

}  // namespace

TEST_SUITE("refdata") {

TEST_CASE("3x3 round trip") {
  ReferenceDataset d;
  d.add_column("id", ColumnKind::Identifier, {1, 2, 3});
  d.add_column("v", ColumnKind::Numeric, {0.1, -2.5, 1e-7});
  d.add_column("lab", ColumnKind::Label, {0, 1, 1});
  d.provenance = "unit test";
  std::stringstream s;
  write_csv(d, s);
  const ReferenceDataset back = read_csv(s);
  CHECK(back == d);
}

TEST_CASE("values are written with 9 significant digits") {
  CHECK(format9(0.1) == "0.1");
  CHECK(format9(1.0 / 3.0) == "0.333333333");
  CHECK(quantize9(1.0 / 3.0) == 0.333333333);
  ReferenceDataset d;
  d.add_column("v", ColumnKind::Numeric, {quantize9(2.0 / 3.0)});
  std::stringstream s;
  write_csv(d, s);
  CHECK(read_csv(s) == d);
}

TEST_CASE("ragged row reports its index") {
  std::stringstream s("a,b\n1,2\n3,4\n5\n");
  try {
    read_csv(s);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("bad cells and headers") {
  std::stringstream bad("a,b\n1,x\n");
  CHECK_THROWS_AS(read_csv(bad), DataError);
  std::stringstream dup("a,a\n1,2\n");
  CHECK_THROWS_AS(read_csv(dup), DataError);
  std::stringstream label("# abmgp-dataset v1 kinds=L\na\n2\n");
  CHECK_THROWS_AS(read_csv(label), DataError);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("plain CSV without the kinds line reads as numeric") {
  std::stringstream s("a,b\n1,2\n");
  const ReferenceDataset d = read_csv(s);
  CHECK(d.rows() == 1);
  CHECK(d.column(0).kind == ColumnKind::Numeric);
}

TEST_CASE("require names the missing column") {
  ReferenceDataset d;
  d.add_column("alpha", ColumnKind::Numeric, {1});
  try {
    d.require("beta");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("alpha") != std::string::npos);
  }
}

TEST_CASE("mse") {
  CHECK(mse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{10, 10}) == 100.0);
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{2, 4}) == 2.5);
  CHECK_THROWS_AS(mse(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("balanced accuracy") {
  Confusion c;
  c.tp = 8;
  c.fn = 2;
  c.tn = 90;
  c.fp = 10;
  CHECK(balanced_accuracy(c) == 0.85);

  std::vector<int> labels(100, 0);
  for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i)] = 1;
  CHECK(balanced_accuracy(labels, labels) == 1.0);
  const std::vector<int> all_pos(100, 1);
  CHECK(balanced_accuracy(all_pos, labels) == 0.5);
  CHECK(balanced_accuracy(all_pos, all_pos) == 0.5);
}

TEST_CASE("gini") {
  CHECK(gini(std::vector<double>(10, 100.0)) == 0.0);
  CHECK(gini(std::vector<double>{0, 0, 0, 1}) == 0.75);
  std::vector<double> two_tier(60, 100.0);
  for (std::size_t i = 30; i < 60; ++i) two_tier[i] = 900.0;
  CHECK(gini_pairwise(two_tier) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(gini(two_tier) == 0.4);
  const std::vector<double> mixed = {3, 0, 7, 1, 1, 12, 5};
  CHECK(gini(mixed) == doctest::Approx(gini_pairwise(mixed)).epsilon(1e-12));
  CHECK_THROWS_AS(gini(std::vector<double>{0, 0}), DataError);
  CHECK_THROWS_AS(gini(std::vector<double>{-1, 2}), DataError);
}

TEST_CASE("histogram") {
  const auto bins = histogram(std::vector<double>{0, 1, 2, 3, 4}, 2);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].count == 2);
  CHECK(bins[1].count == 3);
  const auto flat = histogram(std::vector<double>(60, 100.0), 20);
  long long total = 0;
  for (const auto& b : flat) total += b.count;
  CHECK(total == 60);
}

}  // TEST_SUITE
