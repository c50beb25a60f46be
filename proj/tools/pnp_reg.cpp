#include "pnpreg/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace pnpreg::cli;
  CLI::App app{"pnp-reg: Plug-and-Play fixed-point regularization experiments"};
  app.require_subcommand(1, 1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  std::vector<CLI::App*> subs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_flag("--verbose", opts.verbose, "progress messages on stderr");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExecutionError;
  }
  for (auto* sub : subs) {
    if (sub->parsed()) {
      opts.command = sub->get_name();
      if (sub->count("--seed"))
        opts.seed = seed;
    }
  }
  return run_command(opts, std::cerr, std::cerr);
}
