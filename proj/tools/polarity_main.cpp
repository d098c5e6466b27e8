#include <fmt/format.h>

#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "polarity/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Electoral competition engine: equilibria, spreads, welfare, dynamics"};
  polarity::RunOptions opts;
  std::string scenario_path;
  std::uint64_t seed = 0;

  app.add_option("subcommand", opts.subcommand, "Task to run")
      ->required()
      ->check(CLI::IsMember(polarity::subcommands()));
  app.add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("--out", opts.out_dir, "Output directory");
  app.add_option("--format", opts.format, "Artifacts to write")
      ->check(CLI::IsMember({"json", "csv", "both"}));
  app.add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) opts.seed = seed;

  try {
    const auto scenario = polarity::load_scenario(scenario_path);
    const auto result = polarity::run(opts, scenario);
    for (const auto& f : result.files) fmt::print("{}\n", f);
    if (!result.message.empty()) fmt::print(stderr, "error: {}\n", result.message);
    return result.exit_code;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return polarity::exit_code_for(e);
  }
}
