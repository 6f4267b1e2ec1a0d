#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "migdirac/hamiltonian.hpp"
#include "migdirac/model.hpp"

namespace migdirac {

struct SolutionResiduals {
  /// |max_x H(x, I)|
  double max_H = 0.0;
  /// max_i |sum_j psi^i(x_j) rho^i_j - I^i|
  double normalization = 0.0;
  /// Largest mismatch between the two eigenvector-ratio forms of the weights (K = 2),
  /// or the relative kernel residual ||A(x_j) rho_j|| / ||rho_j|| for K != 2.
  double rho_consistency = 0.0;
};

/// Limit object of the small-mutation asymptotics: pressures, support points,
/// scales s_j and weights rho^i_j = s_j chi^i(x_j) (K x l).
struct AsymptoticSolution {
  Eigen::VectorXd pressure;
  std::vector<double> points;
  std::vector<double> scales;
  Eigen::MatrixXd weights;
  SolutionResiduals residuals;
  /// Final residual vector of the root finder (solve_general) or [max H] (solve_symmetric).
  Eigen::VectorXd residual_vector;
  bool converged = false;
  bool degenerate = false;
  int iterations = 0;
  std::string message;
};

struct SolverOptions {
  std::size_t grid_points = 801;
  /// Support tolerance: peaks within this of the global max of H belong to the support.
  double support_atol = 1e-6;
  /// Root-finding tolerance on |max H| (bisection) or ||r||_inf (general solver).
  double tolerance = 1e-8;
  int max_iterations = 200;
  double fd_step = 1e-6;
  int max_support_changes = 50;
};

/// Refined peaks of the landscape whose H is within atol of the global maximum.
/// Throws DimensionError on an empty landscape.
std::vector<double> support_points(const FitnessLandscape& landscape, double atol);

struct DiracWeights {
  std::vector<double> scales;
  Eigen::MatrixXd weights;
};

/// Perron vectors at the support points plus a nonnegative least-squares fit
/// of the scales to the normalisation sum_j psi^i(x_j) s_j chi^i(x_j) = I^i.
DiracWeights dirac_weights(const PatchModel& model, const Eigen::VectorXd& pressure,
                           const std::vector<double>& points);

/// Bisection on a common pressure I^1 = I^2 = I for mirror-symmetric two-patch
/// models (R^1(x) = R^2(-x), equal migration rates). Throws SymmetryError or
/// BracketError when the preconditions fail.
AsymptoticSolution solve_symmetric(const PatchModel& model, std::pair<double, double> bracket,
                                   const SolverOptions& opts = {});

/// General K-patch solve from an initial pressure guess; see the README for the
/// formulation. Never throws on non-convergence: returns the best iterate with
/// converged = false.
AsymptoticSolution solve_general(const PatchModel& model, const Eigen::VectorXd& initial_pressure,
                                 const SolverOptions& opts = {});

/// Fills the residual block of a solution from its pressures, points and weights.
SolutionResiduals solution_residuals(const PatchModel& model, const AsymptoticSolution& sol,
                                     std::size_t grid_points = 801);

struct ConstraintCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ConstraintReport {
  std::vector<ConstraintCheck> checks;
  bool all_passed() const;
  const ConstraintCheck* find(const std::string& name) const;
};

/// Pointwise checks of the limit conditions: H = 0 on the support, H <= tol on
/// the grid, min G = 0 and F <= 0 on the support (K = 2), the two
/// eigenvector-ratio forms of the weights (K = 2), normalisation and the
/// atom-wise balance A(x_j) rho_j = 0.
ConstraintReport verify_solution(const PatchModel& model, const AsymptoticSolution& sol, double tol,
                                 std::size_t grid_points = 801);

}  // namespace migdirac
