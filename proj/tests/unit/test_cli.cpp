#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "polarity/error.hpp"
#include "polarity/scenario.hpp"

using namespace polarity;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = std::string(POLARITY_SOURCE_DIR) + "/scenarios/";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("polarity_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunResult run_into(const std::string& sub, const std::string& scenario, const fs::path& dir,
                   const std::string& format = "both", unsigned threads = 1) {
  RunOptions o;
  o.subcommand = sub;
  o.out_dir = dir.string();
  o.format = format;
  o.threads = threads;
  return run(o, load_scenario(kScenarios + scenario));
}

int cli(const std::string& args) {
  const std::string cmd = std::string(POLARITY_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json minimal() {
  return Json::parse(R"({
    "distribution": {"types": [{"bliss": 0, "share": 0.5}, {"bliss": 1, "share": 0.5}]},
    "nu": {"preset": "quadratic"},
    "shock": {"phi": 1}
  })");
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(0.625) == "0.625");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(3.0) == "3");
  Json j = {{"a", std::numeric_limits<double>::infinity()}, {"b", Json::array()}};
  CHECK(format_json(j) == "{\n  \"a\": null,\n  \"b\": []\n}\n");
}

TEST_CASE("strict scenario schema") {
  CHECK_NOTHROW(parse_scenario(minimal()));
  auto extra = minimal();
  extra["colour"] = "blue";
  CHECK_THROWS_AS(parse_scenario(extra), SchemaError);
  auto nested = minimal();
  nested["distribution"]["types"][0]["weight"] = 1;
  CHECK_THROWS_AS(parse_scenario(nested), SchemaError);
  auto task = minimal();
  task["tasks"] = {{"eq2d", Json::object()}};
  CHECK_THROWS_AS(parse_scenario(task), SchemaError);
  auto preset = minimal();
  preset["nu"]["preset"] = "cubic";
  CHECK_THROWS_AS(parse_scenario(preset), SchemaError);
  auto mixed = minimal();
  mixed["nu"]["normalize"] = true;
  CHECK_THROWS_AS(parse_scenario(mixed), SchemaError);
  auto shares = minimal();
  shares["distribution"]["types"][0]["share"] = 0.7;
  CHECK_THROWS_AS(parse_scenario(shares), PreconditionError);
  auto phi = minimal();
  phi["shock"]["phi"] = "one";
  CHECK_THROWS_AS(parse_scenario(phi), SchemaError);
  auto utility = minimal();
  utility["nu"] = Json::parse(R"({"utility": {"kind": "rent-sharing", "insiders": 4,
                                   "insider_utility": "sqrt"}})");
  CHECK(std::abs(parse_scenario(utility).nu(0.25) - 0.5) <= 1e-12);
}

TEST_CASE("reference eq1d record") {
  const auto dir = scratch("eq1d");
  const auto res = run_into("eq1d", "reference_two_type.json", dir, "json");
  CHECK(res.exit_code == 0);
  const auto rec = Json::parse(slurp(dir / "eq1d.json"));
  CHECK_NOTHROW(validate_record(rec));
  CHECK(rec["result"]["x_low"].get<double>() == 0.25);
  CHECK(rec["result"]["x_high"].get<double>() == 0.75);
  CHECK(rec["result"]["payoff"].get<double>() == 0.625);
}

TEST_CASE("every subcommand writes byte-identical, re-validating records") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"eq1d", "reference_two_type.json"},     {"classify", "three_type.json"},
      {"spread", "three_type.json"},            {"welfare", "reference_two_type.json"},
      {"premium-sweep", "three_type.json"},     {"info", "info.json"},
      {"dynamics", "reference_two_type.json"},  {"validate", "reference_two_type.json"},
      {"eqkd", "clustered_2d.json"},            {"dspread", "clustered_2d.json"}};
  for (const auto& [sub, file] : cases) {
    CAPTURE(sub);
    const auto a = scratch(sub + "_a");
    const auto b = scratch(sub + "_b");
    const auto ra = run_into(sub, file, a, "both", 1);
    const auto rb = run_into(sub, file, b, "both", 3);
    REQUIRE(ra.files.size() == rb.files.size());
    for (std::size_t k = 0; k < ra.files.size(); ++k) {
      const auto name = fs::path(ra.files[k]).filename();
      CHECK(slurp(a / name) == slurp(b / name));
    }
    const auto rec = Json::parse(slurp(a / (sub + ".json")));
    CHECK_NOTHROW(validate_record(rec));
    CHECK(rec["subcommand"] == sub);
  }
}

TEST_CASE("dspread writes both scatter panels and raises the payoff") {
  const auto dir = scratch("fig");
  run_into("dspread", "clustered_2d.json", dir);
  CHECK(fs::exists(dir / "scatter_base.csv"));
  CHECK(fs::exists(dir / "scatter_candidate.csv"));
  const auto rec = Json::parse(slurp(dir / "dspread.json"));
  CHECK(rec["result"]["candidate"]["payoff"].get<double>() >
        rec["result"]["base"]["payoff"].get<double>());
  for (const auto& m : rec["result"]["marginals"]) CHECK(m["unchanged"] == true);
}

TEST_CASE("validate reports a catch-up failure for linear nu") {
  const auto dir = scratch("linear");
  const auto res = run_into("validate", "linear_nu.json", dir, "json");
  CHECK(res.exit_code == 3);
  CHECK(res.message.find("nu_catch_up") != std::string::npos);
  const auto rec = Json::parse(slurp(dir / "validate.json"));
  CHECK(rec["result"]["nu"]["catch_up"]["holds"] == false);
}

TEST_CASE("record validation rejects malformed envelopes") {
  CHECK_THROWS_AS(validate_record(Json::array()), SchemaError);
  Json rec = {{"schema_version", 1}, {"subcommand", "eq1d"}, {"seed", 0},
              {"result", Json::object()}};
  CHECK_THROWS_AS(validate_record(rec), SchemaError);
  rec["subcommand"] = "nope";
  CHECK_THROWS_AS(validate_record(rec), SchemaError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(SchemaError("x")) == 2);
  CHECK(exit_code_for(PreconditionError("x")) == 3);
  CHECK(exit_code_for(ConsistencyError("x")) == 4);

  const auto out = scratch("cli").string();
  CHECK(cli("eq1d --scenario " + kScenarios + "reference_two_type.json --out " + out) == 0);
  CHECK(cli("validate --scenario " + kScenarios + "linear_nu.json --out " + out) == 3);
  CHECK(cli("eq1d --scenario " + kScenarios + "linear_nu.json --out " + out) == 3);
  CHECK(cli("bogus --scenario " + kScenarios + "linear_nu.json --out " + out) == 2);
  CHECK(cli("eq1d --scenario /nonexistent.json --out " + out) == 2);
  const auto bad = fs::temp_directory_path() / "polarity_bad_scenario.json";
  std::ofstream(bad) << "{\"distribution\": 3}";
  CHECK(cli("eq1d --scenario " + bad.string() + " --out " + out) == 2);
  CHECK(cli("eq1d --scenario " + kScenarios + "reference_two_type.json --seed 7 --format csv "
            "--out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "eq1d.csv"));
}
