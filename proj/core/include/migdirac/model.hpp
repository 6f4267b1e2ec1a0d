#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace migdirac {

/// Piecewise-linear table on strictly increasing abscissae; constant extension
/// outside the sampled range.
struct Table1D {
  std::vector<double> x;
  std::vector<double> y;

  double operator()(double at) const;
};

/// Net growth law R(x, I) = r(x) - d * I of one patch.
///
/// Both supported kinds are affine in the pressure, so the solver can cache
/// r(x) on its grid and only apply the pressure shift per step.
class GrowthSpec {
 public:
  enum class Kind { quadratic, tabulated };

  /// a x^2 + b x + c - d I. Throws AssumptionError unless a < 0 < d.
  static GrowthSpec quadratic(double a, double b, double c, double d);
  /// r(x) linearly interpolated from a table, minus d I. No sign requirement on d;
  /// violations surface in validate_assumptions.
  static GrowthSpec tabulated(Table1D base, double d);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }
  double pressure_slope() const noexcept { return d_; }
  const Table1D& table() const noexcept { return table_; }

  /// r(x) = R(x, 0).
  double base(double x) const;
  double operator()(double x, double pressure) const { return base(x) - d_ * pressure; }

 private:
  GrowthSpec() = default;

  Kind kind_ = Kind::quadratic;
  double a_ = 0.0;
  double b_ = 0.0;
  double c_ = 0.0;
  double d_ = 0.0;
  Table1D table_;
};

/// Competition weight psi(x). Constant in the reference configurations.
class WeightSpec {
 public:
  static WeightSpec constant(double value);
  static WeightSpec tabulated(Table1D values);

  bool is_constant() const noexcept { return table_.x.empty(); }
  double operator()(double x) const { return is_constant() ? value_ : table_(x); }
  const Table1D& table() const noexcept { return table_; }

 private:
  double value_ = 1.0;
  Table1D table_;
};

/// Immutable K-patch problem instance on the trait interval [-L, L].
///
/// Migration entry (i, j), i != j, is the inflow rate into patch i from patch j;
/// the diagonal entry (i, i) is the total outflow rate from patch i.
class PatchModel {
 public:
  PatchModel(double half_width, double epsilon, std::vector<GrowthSpec> growth,
             std::vector<WeightSpec> psi, Eigen::MatrixXd migration);

  std::size_t patches() const noexcept { return growth_.size(); }
  double half_width() const noexcept { return half_width_; }
  double epsilon() const noexcept { return epsilon_; }
  const Eigen::MatrixXd& migration() const noexcept { return migration_; }
  const GrowthSpec& growth_spec(std::size_t i) const;
  const WeightSpec& weight_spec(std::size_t i) const;

  /// R^i(x, I), patch index zero-based.
  double growth(std::size_t i, double x, double pressure) const;
  double psi(std::size_t i, double x) const;

  /// True when the off-diagonal migration graph is strongly connected (or K = 1).
  bool strongly_connected() const;

  PatchModel with_epsilon(double epsilon) const;
  /// Multiplies every migration rate (off-diagonal and diagonal) by `factor`.
  PatchModel with_migration_scale(double factor) const;

 private:
  double half_width_;
  double epsilon_;
  std::vector<GrowthSpec> growth_;
  std::vector<WeightSpec> psi_;
  Eigen::MatrixXd migration_;
};

/// Fills the diagonal so that nu^{ii} = sum_{j != i} nu^{ji} (column sums of the
/// off-diagonal part). The incoming diagonal is ignored.
Eigen::MatrixXd conservative_diagonal(const Eigen::MatrixXd& migration);

/// Two patches with R^1 = r0 - (x + shift)^2 - I, R^2 = r0 - (x - shift)^2 - I,
/// psi = 1 and symmetric migration rate nu.
PatchModel mirror_model(double r0, double shift, double nu, double epsilon, double half_width);

struct AssumptionCheck {
  std::string id;
  std::size_t patch = 0;
  bool passed = false;
  double witness_x = 0.0;
  double value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const;
  /// First check with the given id (and patch), or nullptr.
  const AssumptionCheck* find(const std::string& id, std::size_t patch = 0) const;
};

/// Sampled check of the standing assumptions on a uniform trait grid: pressure
/// sign conditions at I_m / I_M (and at the migration-ratio rescaled pressures),
/// strict pressure monotonicity, a lower curvature bound, weight bounds and
/// boundedness of the growth rates.
ValidationReport validate_assumptions(const PatchModel& model, double pressure_min,
                                      double pressure_max, std::size_t sample_count);

}  // namespace migdirac
