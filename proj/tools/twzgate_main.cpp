#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twz/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Simulator and pulse-design toolkit for tweezer-controlled entangling "
      "gates on trapped-ion chains"};
  app.name("twzgate");
  app.fallthrough();

  twz::cli::RunOptions options;
  app.add_option("--config", options.config_path,
                 "Configuration file (built-in defaults when omitted)");
  app.add_option("--set", options.overrides,
                 "Override one configuration entry, e.g. "
                 "--set drive.detuning_hz=8000")
      ->take_all();
  app.add_option("--out", options.out_path, "Output file path");
  app.add_option("--format", options.format, "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt =
      app.add_option("--seed", options.seed, "Random seed (64-bit)");
  app.add_flag("--verbose", options.verbose, "Print per-table details");

  app.require_subcommand(0, 1);
  for (const char* name : {"modes", "gate", "synth", "noise", "scan"}) {
    const std::string description =
        std::string("Run the ") + name + " experiment";
    app.add_subcommand(name, description);
  }

  CLI11_PARSE(app, argc, argv);

  options.has_seed = seed_opt->count() > 0;
  for (const auto* sub : app.get_subcommands())
    options.experiment = sub->get_name();

  return twz::cli::run(options, std::cout, std::cerr);
}
