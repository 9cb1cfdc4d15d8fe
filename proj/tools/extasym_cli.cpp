// extasym: batch front end for the exterior-asymptotics lab.
//
//   extasym solve --config run.cfg [--set grid.h=0.125] [--svg]
//   extasym plant-and-recover | convergence | verify --config run.cfg
//   extasym report DIR [--svg]
//
// Relative output directories are resolved under $EXTASYM_OUTPUT_ROOT.

#include "extasym/config.hpp"
#include "extasym/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  bool svg = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config, "Configuration file");
  cmd->add_option("-s,--set", a.overrides, "Override, section.key=value (repeatable)");
  cmd->add_option("-o,--output", a.output, "Output directory (overrides output.dir)");
  cmd->add_flag("--svg", a.svg, "Also emit SVG plots");
}

extasym::ExperimentConfig load(const CommonArgs& a) {
  extasym::KeyValueConfig kv = a.config.empty() ? extasym::KeyValueConfig{} : extasym::KeyValueConfig::load(a.config);
  for (const auto& s : a.overrides) kv.set(s);
  if (!a.output.empty()) kv.set("output.dir=" + a.output);
  if (a.svg) kv.set("output.svg=true");
  return extasym::build_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for exterior solutions of fully nonlinear elliptic equations"};
  app.require_subcommand(1);

  CommonArgs solve_args, recover_args, conv_args, verify_args;
  auto* solve = app.add_subcommand("solve", "Solve the configured Dirichlet problem");
  add_common(solve, solve_args);
  auto* recover = app.add_subcommand("plant-and-recover", "Solve with planted data and fit the expansion");
  add_common(recover, recover_args);
  auto* conv = app.add_subcommand("convergence", "Refinement study over h, h/2, h/4, ...");
  add_common(conv, conv_args);
  int levels = 0;
  conv->add_option("--levels", levels, "Number of levels (>= 3)");
  auto* verify = app.add_subcommand("verify", "Run the property checks");
  add_common(verify, verify_args);

  std::string report_dir;
  bool report_svg = false;
  auto* report = app.add_subcommand("report", "Summarize the CSVs in a directory");
  report->add_option("dir", report_dir, "Directory with CSV outputs")->required();
  report->add_flag("--svg", report_svg, "Also emit SVG plots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return extasym::cmd_solve(load(solve_args), std::cout);
    if (*recover) return extasym::cmd_plant_and_recover(load(recover_args), std::cout);
    if (*conv) {
      if (levels > 0) conv_args.overrides.push_back("run.levels=" + std::to_string(levels));
      return extasym::cmd_convergence(load(conv_args), std::cout);
    }
    if (*verify) return extasym::cmd_verify(load(verify_args), std::cout);
    if (*report) return extasym::cmd_report(report_dir, report_svg, std::cout);
  } catch (const extasym::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
