#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "calabiflow/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"calabiflow: Ricci flow and complex Monge-Ampere experiments on flat tori"};
  app.require_subcommand(1);
  app.footer("Threads: CALABIFLOW_THREADS (default 1). Run 'calabiflow describe <kind>' for configs and outputs.");

  std::string describe_kind;
  CLI::App* desc = app.add_subcommand("describe", "print the catalog entry of an experiment kind");
  desc->add_option("kind", describe_kind, "experiment kind")->required();

  struct RunArgs {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
  };
  RunArgs args;
  std::string chosen;
  for (const std::string& kind : calabi::experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", args.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory (overrides the config)");
    sub->add_option("--seed", args.seed, "seed for randomized fields (overrides the config)");
    sub->add_flag("--quiet", args.quiet, "print only the summary line");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (desc->parsed()) {
      std::cout << calabi::describe(describe_kind);
      return 0;
    }
    std::optional<std::filesystem::path> out;
    if (args.out) out = *args.out;
    const calabi::ExperimentConfig cfg = calabi::load_config(chosen, args.config, out, args.seed);
    const calabi::ExperimentOutcome o = calabi::run_experiment(cfg, args.quiet ? nullptr : &std::cout);
    const int bad = o.failures();
    std::cout << chosen << ": " << o.checks.size() - bad << "/" << o.checks.size() << " checks passed, artifacts in "
              << cfg.out_dir.string() << "\n";
    return bad == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
