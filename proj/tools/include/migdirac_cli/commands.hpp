#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "migdirac/asymptotic.hpp"
#include "migdirac/concentration.hpp"
#include "migdirac/config.hpp"
#include "migdirac/model.hpp"
#include "migdirac/pde_solver.hpp"

namespace migdirac::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  exit_ok = 0,
  exit_tolerance = 1,
  exit_config = 2,
  exit_numerical = 3,
  exit_no_convergence = 4,
};

/// Record of one command run, written as manifest.json in the output directory.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  int exit_code = 0;
  std::string status;
  std::vector<std::string> notes;

  std::string to_json() const;
};

struct SimulateFlags {
  fs::path config;
  fs::path out = ".";
  /// Extra rescaled times at which profiles are written (added to the config's list).
  std::vector<double> checkpoints;
  std::optional<double> tau_end;
};

struct AsymptoticFlags {
  fs::path config;
  fs::path out = ".";
  enum class Mode { symmetric, general } mode = Mode::symmetric;
  /// Initial pressure for the general solver (default: 1 in every patch).
  std::vector<double> initial_pressure;
  /// Pressure bracket for the symmetric solver (default: automatic).
  std::optional<std::pair<double, double>> bracket;
  double tolerance = 1e-8;
};

struct VerifyFlags {
  fs::path config;
  fs::path out = ".";
  ComparisonTolerance tol;
  double rel_threshold = 0.01;
  std::optional<double> tau_end;
};

struct SweepFlags {
  fs::path config;
  fs::path out = ".";
  std::string param = "migration-scale";
  std::vector<double> values;
  /// 0: MIGDIRAC_WORKERS if set, otherwise the hardware concurrency.
  unsigned workers = 0;
  /// Bisection width at which an atom-count transition counts as located.
  double refine_width = 1e-3;
};

/// Everything `verify` computes: the PDE run, its limit object and the comparison.
struct VerifyOutcome {
  SimulationResult pde;
  Eigen::VectorXd pressure;
  AsymptoticSolution limit;
  /// "symmetric" or "general".
  std::string mode;
  EmpiricalAtoms atoms;
  ComparisonReport report;
};

/// Runs the configured simulation (tau_end overridden by flags.tau_end), then
/// the symmetric solver, falling back to the general solver started at the
/// PDE pressures when the model is not mirror symmetric. Throws migdirac::Error
/// on numerical failure; a non-converged limit is returned with an empty report.
VerifyOutcome verify_pipeline(const ParsedConfig& cfg, const VerifyFlags& flags);

int cmd_simulate(const SimulateFlags& flags, std::ostream& log);
int cmd_asymptotic(const AsymptoticFlags& flags, std::ostream& log);
int cmd_verify(const VerifyFlags& flags, std::ostream& log);
int cmd_sweep(const SweepFlags& flags, std::ostream& log);

/// Pressure bracket [0, I_hi] for the symmetric solver: at I_hi every row sum
/// of the fitness matrix, and hence its Perron root, is negative.
std::pair<double, double> default_bracket(const PatchModel& model);

/// Worker count after applying the flag and the MIGDIRAC_WORKERS override.
unsigned resolve_workers(unsigned flag);

struct SweepRow {
  double value = 0.0;
  int atoms = 0;
  double pressure = 0.0;
  double x_left = 0.0;
  double x_right = 0.0;
  bool ok = false;
  std::string error;
};

/// Symmetric solve of one sweep point (migration matrix scaled by `value`).
SweepRow sweep_point(const PatchModel& base, double value);

/// Atom-count transitions between consecutive values, refined by bisection
/// until the bracket is narrower than `width`.
struct Transition {
  double lo = 0.0;
  double hi = 0.0;
  int atoms_lo = 0;
  int atoms_hi = 0;
};
std::vector<Transition> locate_transitions(const PatchModel& base, const std::vector<SweepRow>& rows,
                                           double width);

}  // namespace migdirac::cli
