#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "pointnls/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Point-coupled cubic Schroedinger experiments"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  for (const auto& name : pointnls::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    if (name != "validate") {
      sub->add_option("--out", out, "output directory (overrides output.directory)");
      sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pointnls::exit_validation;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return pointnls::run_subcommand(name, config, out.empty() ? std::nullopt : std::optional<std::string>(out), jobs,
                                  std::cout, std::cerr);
}
