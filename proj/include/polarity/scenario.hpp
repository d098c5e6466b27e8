#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polarity/model.hpp"

namespace polarity {

using Json = nlohmann::ordered_json;

// Parsed scenario file. Structural problems raise SchemaError; values that
// parse but violate model assumptions raise PreconditionError.
struct Scenario {
  VoterDistribution distribution;
  ReducedPayoff nu;
  Shock shock;
  std::uint64_t seed = 0;
  Json tasks = Json::object();  // per-subcommand blocks, checked on use
  std::string output_dir;
  std::string format = "json";
};

Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::string& path);

// SchemaError unless `obj` is an object whose keys all appear in `keys`.
void check_fields(const Json& obj, std::initializer_list<const char*> keys,
                  const std::string& where);

VoterDistribution parse_distribution(const Json& block, const std::string& where);
ReducedPayoff parse_nu(const Json& block);

const std::vector<std::string>& subcommands();

struct RunOptions {
  std::string subcommand;
  std::string out_dir;  // empty: scenario output.dir, then "out"
  std::string format;   // empty: scenario output.format
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
};

// Files written by one run, in emission order.
struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string message;
};

// Computes the subcommand and writes its artifacts. Exceptions propagate;
// a failed validate still writes its record and returns exit code 3.
RunResult run(const RunOptions& options, const Scenario& scenario);

int exit_code_for(const std::exception& e);

// Dumps with two-space indentation, 17 significant digits for doubles,
// null for non-finite values and a trailing LF.
std::string format_json(const Json& value);
std::string format_number(double v);

// Checks the envelope and the required result keys of a record.
void validate_record(const Json& record);

}  // namespace polarity
