#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "migdirac/model.hpp"

namespace migdirac {

/// Uniform node set x_k = -L + 2L k / (N - 1), k = 0..N-1.
struct GridSpec {
  std::size_t nodes = 0;
  double half_width = 0.0;

  static GridSpec make(double half_width, std::size_t nodes);
  double spacing() const { return 2.0 * half_width / static_cast<double>(nodes - 1); }
  double node(std::size_t k) const {
    return -half_width + 2.0 * half_width * static_cast<double>(k) / static_cast<double>(nodes - 1);
  }
  std::vector<double> coordinates() const;
};

/// Per-patch node densities and the rescaled clock tau = t / epsilon.
struct DensityState {
  GridSpec grid;
  std::vector<std::vector<double>> density;
  double tau = 0.0;

  std::size_t patches() const { return density.size(); }
};

struct InitialBump {
  double center = 0.0;
  double mass = 1.0;
  double width = 0.05;
};

/// Composite trapezoidal rule with uniform spacing.
double trapezoid(std::span<const double> values, double spacing);

/// Gaussian bumps truncated to [-L, L], rescaled so the trapezoidal mass is exact.
DensityState init_state(const PatchModel& model, const GridSpec& grid,
                        std::span<const InitialBump> bumps);

/// I^i = integral of psi^i n^i over [-L, L] (trapezoidal).
Eigen::VectorXd pressures(const PatchModel& model, const DensityState& state);

/// Largest dt satisfying dt * (max_i sup_x |R^i(x, I^i)| + max_i nu^{ii}) <= 0.5.
double max_stable_dt(const PatchModel& model, const GridSpec& grid, const Eigen::VectorXd& pressure);

/// Rough upper bound on admissible pressures: max over patches of sup_x R^i(x, 0) / d^i, at least 1.
double pressure_ceiling_estimate(const PatchModel& model);

/// IMEX integrator for
///   d_tau n^i = eps^2 n^i_xx + n^i R^i(x, I^i) + sum_{j != i} nu^{ij} n^j - nu^{ii} n^i
/// with homogeneous Neumann conditions. Reaction and migration are explicit
/// Euler with pressures frozen at the step start; diffusion is backward Euler
/// on a mirror-ghost second-order Laplacian solved by a prefactored Thomas sweep.
class ImexStepper {
 public:
  ImexStepper(const PatchModel& model, const GridSpec& grid, double dt);

  /// Advances one step in place; throws StabilityError if dt exceeds the budget
  /// for the current pressures.
  void advance(DensityState& state);

  double dt() const noexcept { return dt_; }
  std::size_t clamp_events() const noexcept { return clamp_events_; }
  std::size_t node_updates() const noexcept { return node_updates_; }
  /// Pressures evaluated at the start of the last step.
  const Eigen::VectorXd& last_pressures() const noexcept { return last_pressures_; }

 private:
  Eigen::MatrixXd migration_;
  GridSpec grid_;
  double dt_;
  std::vector<std::vector<double>> base_growth_;  // r^i(x_k)
  std::vector<std::vector<double>> psi_;          // psi^i(x_k)
  std::vector<double> pressure_slope_;
  std::vector<double> min_base_;
  std::vector<double> max_base_;
  // Thomas factorisation of (Id - dt eps^2 Lap_h).
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> inv_pivot_;
  std::vector<double> lower_scaled_;  // lower_ * inv_pivot_
  std::vector<double> inflow_;        // dt * nu^{ij}, i != j, row-major
  std::vector<double> shifts_;
  std::vector<double> carry_;
  std::vector<std::vector<double>> scratch_;
  Eigen::VectorXd last_pressures_;
  std::size_t clamp_events_ = 0;
  std::size_t node_updates_ = 0;
};

/// One IMEX step (see ImexStepper); returns the advanced state.
DensityState step(const PatchModel& model, const DensityState& state, double dt);

/// Discrete residual of the stationary system,
/// eps^2 Lap_h n^i + n^i R^i + migration, per patch and node.
std::vector<std::vector<double>> stationary_residual(const PatchModel& model, const DensityState& state);

struct RunOptions {
  double dt = 1e-3;
  double tau_end = 5000.0;
  double steady_tol = 1e-8;
  std::size_t sample_stride = 1000;
  /// Rescaled times at which profile snapshots are kept.
  std::vector<double> checkpoints;
};

struct SimulationResult {
  DensityState final_state;
  std::vector<double> tau;
  std::vector<Eigen::VectorXd> pressure;
  std::vector<DensityState> checkpoints;
  bool steady = false;
  double steady_rate = 0.0;
  std::size_t steps = 0;
  std::size_t clamp_events = 0;
  std::size_t node_updates = 0;
  double wall_seconds = 0.0;
};

/// Steps until tau >= tau_end or the relative L1 rate over a 100-step window
/// drops below steady_tol. Throws NumericalError if a pressure exceeds
/// 1e3 * pressure_ceiling_estimate(model).
SimulationResult run_to_steady(const PatchModel& model, DensityState state, const RunOptions& opts);

}  // namespace migdirac
