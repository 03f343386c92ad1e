#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "speclab/harness.hpp"

namespace h = speclab::harness;

int main(int argc, char** argv) {
  CLI::App app{"speclab: boundary flux statistics of Dirichlet eigenfunctions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("speclab ") + h::version);

  struct Invocation {
    std::string config;
    std::vector<std::string> overrides;
    std::vector<h::Stage> stages;
  } inv;

  auto add = [&](const std::string& name, const std::string& help, std::vector<h::Stage> stages) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", inv.config, "experiment config (JSON)")->required();
    sub->add_option("--set", inv.overrides, "override a config entry, e.g. --set solver.K=400 (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->callback([&inv, stages] { inv.stages = stages; });
  };
  add("run", "all stages in dependency order", {h::all_stages.begin(), h::all_stages.end()});
  add("spectrum", "eigenpairs, per-mode functionals and weights", {h::Stage::spectrum});
  add("rellich", "Rellich residuals and energy sandwich", {h::Stage::rellich});
  add("packets", "mode-to-packet ratios and their fits", {h::Stage::packets});
  add("cancellation", "packet-averaged correlations against the threshold envelope", {h::Stage::cancellation});
  add("weyl", "counting, boundary and pairing Weyl fits", {h::Stage::weyl});
  add("report", "table of measured exponents against threshold exponents", {h::Stage::report});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return h::exit_config_error;
  }

  nlohmann::json doc;
  try {
    doc = h::read_config_file(inv.config);
    for (const auto& o : inv.overrides) h::apply_override(doc, o);
  } catch (const speclab::ConfigError& e) {
    std::cerr << speclab::io::dump_json(h::error_record(e.code(), e.what(), "config", h::exit_config_error));
    return h::exit_config_error;
  }
  return h::execute(doc, inv.stages, std::cout, std::cerr);
}
