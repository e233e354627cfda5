#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "abmgp/cli.hpp"

using namespace abmgp;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "abmgp");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("abmgp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string rules(const std::string& name) { return std::string(ABMGP_SOURCE_DIR) + "/rules/" + name; }
std::string config(const std::string& name) { return std::string(ABMGP_SOURCE_DIR) + "/configs/" + name; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  const Result r = cli({"record", "--config", "/nonexistent/config.json", "--out", "/tmp/x"});
  CHECK(r.code == 1);
  CHECK(r.err.find("/nonexistent/config.json") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("unknown config keys are rejected") {
  const fs::path dir = scratch("badkey");
  std::ofstream(dir / "c.json") << R"({"gp": {"populationSize": 10, "mutationRate": 0.3}})";
  const Result r = cli({"evolve", "--config", (dir / "c.json").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("gp.mutationRate") != std::string::npos);
}

TEST_CASE("prune") {
  Result r = cli({"prune", "--rules", rules("hawkdove_inequality_raw.rules"), "--ranges", "hawkdove"});
  CHECK(r.code == 0);
  CHECK(r.out == "IF previousTook >= 1 THEN 1 ELSE 9\n");
  r = cli({"prune", "--rules", rules("hawkdove_equality_raw.rules"), "--ranges", "hawkdove"});
  CHECK(r.out == "1\n");
  r = cli({"prune", "--rules", rules("hawkdove_inequality.rules")});
  CHECK(r.out == "IF previousTook >= 1 THEN 1 ELSE 9\n");

  const fs::path dir = scratch("prune");
  std::ofstream(dir / "r.json") << R"({"vars": {"x": {"lo": 10, "hi": 20}}})";
  std::ofstream(dir / "x.rules") << "x > 5\n";
  r = cli({"prune", "--rules", (dir / "x.rules").string(), "--ranges", (dir / "r.json").string(), "--out", (dir / "o").string()});
  CHECK(r.out == "1\n");
  CHECK(slurp(dir / "o" / "pruned.rules") == "1\n");
  CHECK(fs::exists(dir / "o" / "manifest.json"));
}

TEST_CASE("simulate") {
  const fs::path dir = scratch("simulate");
  Result r = cli({"simulate", "hawkdove", "--rules", rules("hawkdove_take1.rules"), "--out", (dir / "hd").string()});
  CHECK(r.code == 0);
  const std::string hist = slurp(dir / "hd" / "histogram.csv");
  CHECK(hist == "bin_low,bin_high,count\n100,101,60\n");

  std::ofstream(dir / "bad.rules") << "IF previousTook >= 1 AND wealth THEN 1\n";
  r = cli({"simulate", "hawkdove", "--rules", (dir / "bad.rules").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("wealth") != std::string::npos);

  r = cli({"simulate", "rebellion", "--rules", rules("rebellion_ground_truth.rules"), "--out", (dir / "gt").string()});
  CHECK(r.code == 0);
  r = cli({"simulate", "rebellion", "--out", (dir / "orig").string()});
  CHECK(slurp(dir / "gt" / "trace.csv") == slurp(dir / "orig" / "trace.csv"));

  r = cli({"compare", (dir / "gt" / "trace.csv").string(), (dir / "orig" / "trace.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("active,0,") != std::string::npos);
  CHECK(r.out.find("jailed,0,") != std::string::npos);
  CHECK(r.out.find("quiet,0,") != std::string::npos);

  std::ofstream(dir / "short.json") << R"({"rebellion": {"ticks": 10}})";
  cli({"simulate", "rebellion", "--config", (dir / "short.json").string(), "--out", (dir / "short").string()});
  r = cli({"compare", (dir / "orig" / "trace.csv").string(), (dir / "short" / "trace.csv").string()});
  CHECK(r.code == 2);
}

TEST_CASE("record, eval, evolve") {
  const fs::path dir = scratch("pipeline");
  std::ofstream(dir / "rec.json") << R"({"rebellion": {"ticks": 12}})";
  Result r = cli({"record", "--config", (dir / "rec.json").string(), "--out", (dir / "rec").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("36 run-ticks") != std::string::npos);
  const std::string data = (dir / "rec" / "dataset.csv").string();

  std::ofstream(dir / "a.rules") << "A: jailTerm1 == 0 AND grievance - riskAversion * estimatedArrestProbability1 > threshold\n";
  r = cli({"eval", "--rules", (dir / "a.rules").string(), "--dataset", data});
  CHECK(r.code == 0);
  CHECK(r.out == "A: 1.000000\n");
  r = cli({"eval", "--rules", rules("rebellion_ground_truth.rules"), "--dataset", data});
  CHECK(r.out == "M: 1.000000\nA: 1.000000\nC: 1.000000\n");

  std::ofstream(dir / "m.json") << R"({"task": "rebellion:M", "gp": {"populationSize": 30, "maxGenerations": 3}})";
  const std::vector<std::string> base = {"evolve", "--config", (dir / "m.json").string(), "--dataset", data, "--seed", "3"};
  auto run_to = [&](const std::string& out, const std::string& workers) {
    auto args = base;
    args.insert(args.end(), {"--out", (dir / out).string(), "--workers", workers});
    return cli(args);
  };
  REQUIRE(run_to("e1", "1").code == 0);
  REQUIRE(run_to("e2", "1").code == 0);
  REQUIRE(run_to("e4", "4").code == 0);
  for (const char* f : {"generations.csv", "hall_of_fame.rules", "hall_of_fame_pruned.rules", "best.rules", "population.csv"}) {
    CHECK(slurp(dir / "e1" / f) == slurp(dir / "e2" / f));
    CHECK(slurp(dir / "e1" / f) == slurp(dir / "e4" / f));
  }

  // a manifest is itself a config that reproduces the run
  r = cli({"evolve", "--config", (dir / "e1" / "manifest.json").string(), "--out", (dir / "again").string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "e1" / "generations.csv") == slurp(dir / "again" / "generations.csv"));
  CHECK(slurp(dir / "e1" / "hall_of_fame.rules") == slurp(dir / "again" / "hall_of_fame.rules"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "e1" / "manifest.json"));
  CHECK(manifest["command"] == "evolve");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["config"]["gp"]["populationSize"] == 30);
  CHECK(manifest.contains("stopReason"));

  auto zero = base;
  zero.insert(zero.end(), {"--generations", "0", "--out", (dir / "g0").string()});
  REQUIRE(cli(zero).code == 0);
  const std::string log = slurp(dir / "g0" / "generations.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);

  // schema mismatch names the missing columns
  std::ofstream(dir / "tiny.csv") << "grievance,activeLabel\n0.5,1\n";
  auto wrong = base;
  wrong[4] = (dir / "tiny.csv").string();
  wrong.insert(wrong.end(), {"--out", (dir / "w").string()});
  r = cli(wrong);
  CHECK(r.code == 2);
  CHECK(r.err.find("jailTerm0") != std::string::npos);
}

TEST_CASE("hawk-dove evolve against the equality reference") {
  const fs::path dir = scratch("hd");
  std::ofstream(dir / "c.json") << R"({"task": "hawkdove", "gp": {"populationSize": 20, "maxGenerations": 2, "targetFitness": 1.0}})";
  const Result r = cli({"evolve", "--config", (dir / "c.json").string(), "--out", (dir / "o").string(), "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "o" / "best.rules"));
  std::ofstream(dir / "ref.json") << R"({"target": "hawkdove", "hawkdove": {"reference": {"kind": "equality"}}})";
  CHECK(cli({"record", "--config", (dir / "ref.json").string(), "--out", (dir / "ref").string()}).code == 0);
  const std::string csv = slurp(dir / "ref" / "reference.csv");
  CHECK(csv.find("total_resource\n100\n") != std::string::npos);
  CHECK(cli({"evolve", "--config", config("hawkdove_two_tier.json"), "--generations", "1", "--out", (dir / "tt").string()}).code == 0);
}

}  // TEST_SUITE
