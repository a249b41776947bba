#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cocycle_lab/lab.hpp"

int main(int argc, char** argv) {
  using namespace cocycle_lab;
  CLI::App app{"cocycle_lab: symplectic cocycle experiments"};
  app.require_subcommand(1);

  RunOptions opts;
  std::uint64_t seed = 0;
  int jobs = 0;
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--scenario", opts.scenario_path, "scenario YAML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--set", opts.overrides, "override a field, section.key=value")->take_all();
    sub->add_option("--jobs", jobs, "worker threads (falls back to COCYCLE_LAB_JOBS)")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }
  auto* sub = app.get_subcommands().front();
  opts.subcommand = sub->get_name();
  if (sub->count("--seed")) opts.seed = seed;
  if (jobs > 0) {
    opts.jobs = jobs;
  } else if (const char* env = std::getenv("COCYCLE_LAB_JOBS")) {
    try {
      opts.jobs = std::max(1, std::stoi(env));
    } catch (...) {
      std::cerr << "ignoring COCYCLE_LAB_JOBS=" << env << '\n';
    }
  }
  const int rc = run_lab(opts);
  if (rc == kExitError) std::cerr << "cocycle_lab: failed, see " << opts.out_dir << "/report.json\n";
  return rc;
}
