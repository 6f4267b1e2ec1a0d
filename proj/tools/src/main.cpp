#include <CLI11.hpp>

#include <iostream>

#include "migdirac_cli/commands.hpp"

using namespace migdirac::cli;

int main(int argc, char** argv) {
  CLI::App app{"Concentration of multi-patch selection-mutation models on Dirac masses"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  std::string out = ".";
  app.add_option("--config", config, "Model/simulation config (INI)")->required();
  app.add_option("--out", out, "Output directory");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run the PDE to steady state or tau_end");
  simulate->add_option("--checkpoints", sim.checkpoints, "Rescaled times at which to write profiles")
      ->delimiter(',');
  simulate->add_option("--tau-end", sim.tau_end, "Override sim.tau_end");

  AsymptoticFlags asy;
  std::string mode = "symmetric";
  std::vector<double> bracket;
  auto* asymptotic = app.add_subcommand("asymptotic", "Solve the small-mutation limit problem");
  asymptotic->add_option("--mode", mode, "symmetric | general")
      ->check(CLI::IsMember({"symmetric", "general"}));
  asymptotic->add_option("--I0", asy.initial_pressure, "Initial pressures (general mode)")->delimiter(',');
  asymptotic->add_option("--bracket", bracket, "Pressure bracket lo,hi (symmetric mode)")
      ->delimiter(',')
      ->expected(2);
  asymptotic->add_option("--tol", asy.tolerance, "Constraint tolerance");

  VerifyFlags ver;
  auto* verify = app.add_subcommand("verify", "Compare the PDE steady state with the limit problem");
  verify->add_option("--tol-pos", ver.tol.position, "Atom position tolerance");
  verify->add_option("--tol-mass", ver.tol.mass, "Atom mass tolerance");
  verify->add_option("--tol-pressure", ver.tol.pressure, "Pressure tolerance");
  verify->add_option("--threshold", ver.rel_threshold, "Relative peak threshold for atom extraction");
  verify->add_option("--tau-end", ver.tau_end, "Override sim.tau_end");

  SweepFlags swp;
  auto* sweep = app.add_subcommand("sweep", "Symmetric limit across a parameter range");
  sweep->add_option("--param", swp.param, "Swept parameter")->check(CLI::IsMember({"migration-scale"}));
  sweep->add_option("--values", swp.values, "Comma-separated values")->delimiter(',')->required();
  sweep->add_option("--workers", swp.workers, "Worker threads (default: $MIGDIRAC_WORKERS or all cores)");
  sweep->add_option("--refine-width", swp.refine_width, "Bisection width for transitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  if (simulate->parsed()) {
    sim.config = config;
    sim.out = out;
    return cmd_simulate(sim, std::cout);
  }
  if (asymptotic->parsed()) {
    asy.config = config;
    asy.out = out;
    asy.mode = mode == "general" ? AsymptoticFlags::Mode::general : AsymptoticFlags::Mode::symmetric;
    if (!bracket.empty()) asy.bracket = std::make_pair(bracket[0], bracket[1]);
    return cmd_asymptotic(asy, std::cout);
  }
  if (verify->parsed()) {
    ver.config = config;
    ver.out = out;
    return cmd_verify(ver, std::cout);
  }
  swp.config = config;
  swp.out = out;
  return cmd_sweep(swp, std::cout);
}
