#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "migdirac/model.hpp"

namespace migdirac {

/// A_ii = R^i(x, I^i) - nu^{ii}, A_ij = nu^{ij}: a Metzler matrix whose Perron
/// root is the effective Hamiltonian at (x, I).
struct FitnessMatrix {
  Eigen::MatrixXd A;
  double x = 0.0;
  Eigen::VectorXd pressure;
};

struct PerronPair {
  double lambda = 0.0;
  /// Perron vector normalised to unit component sum.
  Eigen::VectorXd chi;
  int iterations = 0;
  /// ||A chi - lambda chi||_inf
  double residual = 0.0;
};

enum class Positivity { require, allow_zero };

FitnessMatrix fitness_matrix(const PatchModel& model, double x, const Eigen::VectorXd& pressure);

/// Largest real eigenvalue and its nonnegative eigenvector. Closed form for
/// K <= 2; shifted power iteration otherwise. With Positivity::require a
/// Perron component below 1e-10 of the largest one raises PositivityError.
PerronPair perron_pair(const Eigen::MatrixXd& A, Positivity positivity = Positivity::require);
PerronPair perron_pair(const FitnessMatrix& m, Positivity positivity = Positivity::require);

/// 2x2 closed form, lambda = F/2 + sqrt(F^2 - 4G)/2.
PerronPair perron_closed_form(const Eigen::MatrixXd& A);

/// Power iteration on A + sigma Id, sigma = 1 + max_i |A_ii|; stops when
/// successive estimates differ by < 1e-13 and the eigen-residual is at
/// roundoff level, or throws NumericalError after `max_iterations`.
PerronPair perron_power_iteration(const Eigen::MatrixXd& A, int max_iterations = 100000);

double effective_hamiltonian(const PatchModel& model, double x, const Eigen::VectorXd& pressure);

/// Trace F of the 2x2 fitness matrix.
double trace_F(const PatchModel& model, double x, const Eigen::VectorXd& pressure);

/// G = (R^1 - nu^{11})(R^2 - nu^{22}) - nu^{12} nu^{21}; quartic in x for
/// quadratic growth. Only defined for K = 2 (DimensionError otherwise).
double quartic_G(const PatchModel& model, double x, const Eigen::VectorXd& pressure);

struct HamiltonianPeak {
  double x = 0.0;
  double H = 0.0;
};

struct FitnessLandscape {
  std::vector<double> x;
  std::vector<double> H;
  /// Only filled for K = 2.
  std::vector<double> F;
  std::vector<double> G;
  /// All refined local maxima of H after clustering, ordered by x.
  std::vector<HamiltonianPeak> peaks;
  /// Peaks within 1e-6 of the global maximum.
  std::vector<HamiltonianPeak> argmax;
  double max_value = 0.0;
  double half_width = 0.0;
  Eigen::VectorXd pressure;
};

/// Samples H on a uniform grid of [-L, L], refines every grid-local maximum by
/// golden-section search to 1e-8 in x and clusters maxima closer than 1e-4.
FitnessLandscape landscape(const PatchModel& model, const Eigen::VectorXd& pressure,
                           std::size_t grid_points);

/// Golden-section maximisation of H(., I) on [lo, hi].
HamiltonianPeak refine_peak(const PatchModel& model, const Eigen::VectorXd& pressure, double lo,
                            double hi, double tolerance = 1e-8);

}  // namespace migdirac
