#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "migdirac/asymptotic.hpp"
#include "migdirac/pde_solver.hpp"

namespace migdirac {

/// u^i = eps * ln(max(n^i, floor)) on the state's grid.
struct HopfColeProfile {
  GridSpec grid;
  std::vector<std::vector<double>> u;
  /// Per patch: true where n^i >= floor.
  std::vector<std::vector<bool>> above_floor;
  double epsilon = 0.0;
  double floor = 0.0;

  std::size_t patches() const noexcept { return u.size(); }
};

/// floor = 1e-300 * max(1, max n). Throws AssumptionError unless eps > 0.
HopfColeProfile hopf_cole(const DensityState& state, double epsilon);

struct EmpiricalAtom {
  double position = 0.0;
  double mass = 0.0;
  double basin_lo = 0.0;
  double basin_hi = 0.0;
};

struct EmpiricalAtoms {
  /// atoms[i] lists the atoms of patch i ordered by position.
  std::vector<std::vector<EmpiricalAtom>> atoms;
  std::vector<double> total_mass;
  /// Per patch: no strict local maximum above the threshold.
  std::vector<bool> flat;
};

/// Local maxima of n^i above rel_threshold * max n^i. Each atom owns the basin
/// between the neighbouring local minima; its mass is the trapezoidal integral
/// over the basin and its position a parabolic refinement of ln n at the peak.
EmpiricalAtoms extract_diracs(const DensityState& state, double rel_threshold);

/// Restricts a coupling gap to nodes near the maximum of each u^i.
struct SupportWindow {
  /// Nodes where u^i >= max u^i - depth for some i.
  double depth = 0.02;
};

/// sup |u^i - u^j| over nodes where both densities are above the floor (and,
/// with a window, inside the support neighbourhood). Pairwise K x K matrix.
Eigen::MatrixXd coupling_gaps(const HopfColeProfile& profile,
                              std::optional<SupportWindow> window = std::nullopt);

/// Largest entry of coupling_gaps.
double patch_coupling_gap(const HopfColeProfile& profile,
                          std::optional<SupportWindow> window = std::nullopt);

/// min over interior above-floor nodes and patches of (u_{k-1} - 2 u_k + u_{k+1}) / h^2.
double semiconvexity_deficit(const HopfColeProfile& profile);

struct ComparisonTolerance {
  double position = 0.02;
  double mass = 0.05;
  double pressure = 0.05;
};

struct AtomComparison {
  std::size_t patch = 0;
  double expected_position = 0.0;
  double expected_mass = 0.0;
  /// Unset when no empirical atom was left to match.
  std::optional<double> position;
  std::optional<double> mass;
  double position_error = 0.0;
  double mass_error = 0.0;
  bool passed = false;
};

struct ComparisonReport {
  std::vector<AtomComparison> atoms;
  /// Empirical atoms that no solution point claimed, per patch.
  std::vector<std::vector<EmpiricalAtom>> unmatched;
  std::vector<double> pressure_error;
  bool count_matches = true;
  double coupling_gap = 0.0;
  double semiconvexity = 0.0;
  ComparisonTolerance tolerance;
  bool positions_pass = true;
  bool masses_pass = true;
  bool pressures_pass = true;

  bool passed() const { return count_matches && positions_pass && masses_pass && pressures_pass; }
  /// Human-readable multi-line summary.
  std::string summary() const;
};

/// Greedy nearest matching (per patch, by increasing distance) of empirical
/// atoms to solution points with nonzero weight. Solution atoms whose weight is
/// below tol.mass may go unmatched; empirical atoms lighter than tol.mass may be
/// left over. Anything else counts as a count mismatch.
ComparisonReport compare_limits(const EmpiricalAtoms& atoms, const Eigen::VectorXd& empirical_pressure,
                                const AsymptoticSolution& sol, const ComparisonTolerance& tol);

}  // namespace migdirac
