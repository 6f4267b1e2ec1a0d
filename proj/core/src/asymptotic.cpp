#include "migdirac/asymptotic.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "migdirac/errors.hpp"
#include "migdirac/nnls.hpp"

namespace migdirac {

namespace {

constexpr double kOnLevelTolerance = 1e-6;
constexpr std::size_t kMaxDistinctPoints = 8;
constexpr double kMergeRadius = 1e-4;

Positivity positivity_for(const PatchModel& model) {
  return model.strongly_connected() ? Positivity::require : Positivity::allow_zero;
}

Eigen::VectorXd chi_at(const PatchModel& model, double x, const Eigen::VectorXd& pressure) {
  return perron_pair(fitness_matrix(model, x, pressure), positivity_for(model)).chi;
}

// M(i, j) = psi^i(x_j) chi^i(x_j)
Eigen::MatrixXd normalization_matrix(const PatchModel& model, const Eigen::VectorXd& pressure,
                                     const std::vector<double>& points) {
  const auto K = static_cast<Eigen::Index>(model.patches());
  Eigen::MatrixXd M(K, static_cast<Eigen::Index>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Eigen::VectorXd chi = chi_at(model, points[j], pressure);
    for (Eigen::Index i = 0; i < K; ++i) {
      M(i, static_cast<Eigen::Index>(j)) = model.psi(static_cast<std::size_t>(i), points[j]) * chi(i);
    }
  }
  return M;
}

void check_mirror_symmetry(const PatchModel& model) {
  if (model.patches() != 2) throw SymmetryError("symmetric solver needs exactly two patches");
  const auto& nu = model.migration();
  if (std::abs(nu(0, 0) - nu(1, 1)) > 1e-12 || std::abs(nu(0, 1) - nu(1, 0)) > 1e-12) {
    throw SymmetryError("symmetric solver needs equal migration rates in both directions");
  }
  const double L = model.half_width();
  constexpr int samples = 401;
  for (int s = 0; s < samples; ++s) {
    const double x = -L + 2.0 * L * s / (samples - 1);
    for (double I : {0.0, 1.0}) {
      const double diff = std::abs(model.growth(0, x, I) - model.growth(1, -x, I));
      if (diff > 1e-8) {
        std::ostringstream os;
        os << "growth laws are not mirror images: |R1(" << x << ") - R2(" << -x << ")| = " << diff;
        throw SymmetryError(os.str());
      }
    }
    if (std::abs(model.psi(0, x) - model.psi(1, -x)) > 1e-8) {
      throw SymmetryError("competition weights are not mirror images");
    }
  }
}

double max_H(const PatchModel& model, double pressure, std::size_t grid_points) {
  return landscape(model, Eigen::VectorXd::Constant(2, pressure), grid_points).max_value;
}

}  // namespace

std::vector<double> support_points(const FitnessLandscape& land, double atol) {
  if (land.x.empty() || land.peaks.empty()) throw DimensionError("support_points: empty landscape");
  std::vector<double> out;
  for (const auto& p : land.peaks) {
    if (p.H >= land.max_value - atol) out.push_back(p.x);
  }
  return out;
}

DiracWeights dirac_weights(const PatchModel& model, const Eigen::VectorXd& pressure,
                           const std::vector<double>& points) {
  for (double x : points) {
    const double H = effective_hamiltonian(model, x, pressure);
    if (std::abs(H) > kOnLevelTolerance) {
      std::ostringstream os;
      os << "dirac_weights: H(" << x << ", I) = " << H << " is not on the zero level";
      throw AssumptionError(os.str());
    }
  }
  const Eigen::MatrixXd M = normalization_matrix(model, pressure, points);
  const NnlsResult fit = nnls(M, pressure);
  if (pressure.maxCoeff() > 0.0 && !(fit.x.maxCoeff() > 0.0)) {
    throw InfeasibleError("dirac_weights: nonnegative fit of the normalisation is identically zero");
  }
  DiracWeights out;
  out.scales.assign(fit.x.data(), fit.x.data() + fit.x.size());
  out.weights.resize(M.rows(), M.cols());
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    const Eigen::VectorXd chi = chi_at(model, points[static_cast<std::size_t>(j)], pressure);
    out.weights.col(j) = fit.x(j) * chi;
  }
  return out;
}

SolutionResiduals solution_residuals(const PatchModel& model, const AsymptoticSolution& sol,
                                     std::size_t grid_points) {
  SolutionResiduals r;
  r.max_H = std::abs(landscape(model, sol.pressure, grid_points).max_value);
  const auto K = static_cast<Eigen::Index>(model.patches());
  for (Eigen::Index i = 0; i < K; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      total += model.psi(static_cast<std::size_t>(i), sol.points[j]) * sol.weights(i, static_cast<Eigen::Index>(j));
    }
    r.normalization = std::max(r.normalization, std::abs(total - sol.pressure(i)));
  }
  const auto& nu = model.migration();
  for (std::size_t j = 0; j < sol.points.size(); ++j) {
    const Eigen::VectorXd rho = sol.weights.col(static_cast<Eigen::Index>(j));
    if (K == 2) {
      const double R1 = model.growth(0, sol.points[j], sol.pressure(0));
      const double R2 = model.growth(1, sol.points[j], sol.pressure(1));
      const double first = std::abs(rho(1) * nu(0, 1) - rho(0) * (nu(0, 0) - R1));
      const double second = std::abs(nu(1, 0) * rho(0) - (nu(1, 1) - R2) * rho(1));
      r.rho_consistency = std::max({r.rho_consistency, first, second});
    } else {
      const Eigen::MatrixXd A = fitness_matrix(model, sol.points[j], sol.pressure).A;
      const double scale = rho.cwiseAbs().maxCoeff();
      if (scale > 0.0) {
        r.rho_consistency = std::max(r.rho_consistency, (A * rho).cwiseAbs().maxCoeff() / scale);
      }
    }
  }
  return r;
}

AsymptoticSolution solve_symmetric(const PatchModel& model, std::pair<double, double> bracket,
                                   const SolverOptions& opts) {
  check_mirror_symmetry(model);
  auto [lo, hi] = bracket;
  if (!(lo < hi)) throw BracketError("pressure bracket must satisfy I_lo < I_hi");
  const double f_lo = max_H(model, lo, opts.grid_points);
  const double f_hi = max_H(model, hi, opts.grid_points);
  if (!(f_lo > 0.0 && f_hi < 0.0)) {
    std::ostringstream os;
    os << "bracket [" << lo << ", " << hi << "] does not straddle max H = 0 (max H = " << f_lo
       << ", " << f_hi << ")";
    throw BracketError(os.str());
  }

  // max_x H(x, I, I) is strictly decreasing in I.
  AsymptoticSolution sol;
  double mid = 0.5 * (lo + hi);
  double f_mid = max_H(model, mid, opts.grid_points);
  int it = 0;
  while (std::abs(f_mid) >= 1e-10 && it < opts.max_iterations && hi - lo > 1e-15 * std::max(1.0, hi)) {
    (f_mid > 0.0 ? lo : hi) = mid;
    mid = 0.5 * (lo + hi);
    f_mid = max_H(model, mid, opts.grid_points);
    ++it;
  }
  sol.iterations = it;
  sol.pressure = Eigen::VectorXd::Constant(2, mid);
  sol.residual_vector = Eigen::VectorXd::Constant(1, f_mid);

  const FitnessLandscape land = landscape(model, sol.pressure, opts.grid_points);
  sol.points = support_points(land, opts.support_atol);
  if (land.peaks.size() > kMaxDistinctPoints || sol.points.size() > kMaxDistinctPoints) {
    sol.degenerate = true;
    sol.message = "maximum set of H is not a small set of distinct points";
    return sol;
  }
  const DiracWeights w = dirac_weights(model, sol.pressure, sol.points);
  sol.scales = w.scales;
  sol.weights = w.weights;
  sol.residuals = solution_residuals(model, sol, opts.grid_points);
  sol.converged = std::abs(f_mid) < 1e-10;
  if (!sol.converged) sol.message = "bisection stopped before |max H| < 1e-10";
  return sol;
}

namespace {

// Square system in z = (I, s) for a fixed, tracked support set:
//   H(x_j(I), I) = 0                                  j = 1..l
//   sum_j psi^i(x_j) s_j chi^i(x_j) - I^i = 0        i = 1..K
// where x_j(I) is the local maximiser of H(., I) near the tracked point.
class SupportSystem {
 public:
  SupportSystem(const PatchModel& model, double window) : model_(model), window_(window) {}

  struct Eval {
    Eigen::VectorXd r;
    std::vector<double> points;
    Eigen::MatrixXd M;
  };

  Eval evaluate(const Eigen::VectorXd& pressure, const Eigen::VectorXd& scales,
                const std::vector<double>& tracked) const {
    const auto K = static_cast<Eigen::Index>(model_.patches());
    const auto l = static_cast<Eigen::Index>(tracked.size());
    Eval e;
    e.r.resize(l + K);
    e.M.resize(K, l);
    for (Eigen::Index j = 0; j < l; ++j) {
      const double x0 = tracked[static_cast<std::size_t>(j)];
      const HamiltonianPeak p = refine_peak(model_, pressure, x0 - window_, x0 + window_);
      e.points.push_back(p.x);
      e.r(j) = p.H;
      const Eigen::VectorXd chi =
          perron_pair(fitness_matrix(model_, p.x, pressure), Positivity::allow_zero).chi;
      for (Eigen::Index i = 0; i < K; ++i) {
        e.M(i, j) = model_.psi(static_cast<std::size_t>(i), p.x) * chi(i);
      }
    }
    e.r.tail(K) = e.M * scales - pressure;
    return e;
  }

 private:
  const PatchModel& model_;
  double window_;
};

}  // namespace

AsymptoticSolution solve_general(const PatchModel& model, const Eigen::VectorXd& initial_pressure,
                                 const SolverOptions& opts) {
  const auto K = static_cast<Eigen::Index>(model.patches());
  if (initial_pressure.size() != K) throw DimensionError("initial pressure has the wrong dimension");
  if (!(initial_pressure.minCoeff() > 0.0)) throw AssumptionError("initial pressures must be > 0");

  const double h = 2.0 * model.half_width() / static_cast<double>(opts.grid_points - 1);
  const SupportSystem system(model, 2.0 * h);

  AsymptoticSolution best;
  best.pressure = initial_pressure;
  double best_norm = std::numeric_limits<double>::infinity();

  Eigen::VectorXd I = initial_pressure;
  FitnessLandscape land = landscape(model, I, opts.grid_points);
  if (land.peaks.size() > kMaxDistinctPoints) {
    best.degenerate = true;
    best.message = "maximum set of H is not a small set of distinct points";
    return best;
  }
  std::vector<double> tracked;
  for (const auto& p : land.argmax) tracked.push_back(p.x);
  Eigen::VectorXd s = nnls(normalization_matrix(model, I, tracked), I).x;

  int support_changes = 0;
  int total_iterations = 0;
  bool converged = false;
  std::string message;

  while (true) {
    // Newton with a finite-difference Jacobian in I and the exact Jacobian in s.
    auto eval = system.evaluate(I, s, tracked);
    double norm = eval.r.cwiseAbs().maxCoeff();
    int it = 0;
    while (norm >= opts.tolerance && it < opts.max_iterations) {
      const auto l = static_cast<Eigen::Index>(tracked.size());
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(l + K, K + l);
      for (Eigen::Index k = 0; k < K; ++k) {
        Eigen::VectorXd Ip = I;
        const double step = opts.fd_step * std::max(1.0, std::abs(I(k)));
        Ip(k) += step;
        J.col(k) = (system.evaluate(Ip, s, eval.points).r - eval.r) / step;
      }
      J.block(l, K, K, l) = eval.M;
      const Eigen::VectorXd delta = J.colPivHouseholderQr().solve(-eval.r);

      double t = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        Eigen::VectorXd In = I + t * delta.head(K);
        if (!(In.minCoeff() > 0.0)) continue;
        Eigen::VectorXd sn = s + t * delta.tail(l);
        auto trial = system.evaluate(In, sn, eval.points);
        const double trial_norm = trial.r.cwiseAbs().maxCoeff();
        if (trial_norm < norm || ls == 39) {
          I = In;
          s = sn;
          eval = std::move(trial);
          norm = trial_norm;
          accepted = true;
          break;
        }
      }
      tracked = eval.points;
      ++it;
      if (!accepted) break;
    }
    total_iterations += it;

    // Merge points that collapsed onto each other.
    for (std::size_t j = 1; j < tracked.size();) {
      if (std::abs(tracked[j] - tracked[j - 1]) < kMergeRadius) {
        s(static_cast<Eigen::Index>(j - 1)) += s(static_cast<Eigen::Index>(j));
        tracked.erase(tracked.begin() + static_cast<std::ptrdiff_t>(j));
        Eigen::VectorXd t(s.size() - 1);
        t << s.head(static_cast<Eigen::Index>(j)), s.tail(s.size() - static_cast<Eigen::Index>(j) - 1);
        s = t;
        ++support_changes;
      } else {
        ++j;
      }
    }

    if (norm < best_norm) {
      best_norm = norm;
      best.pressure = I;
      best.points = tracked;
      best.scales.assign(s.data(), s.data() + s.size());
      best.residual_vector = eval.r;
    }
    if (norm >= opts.tolerance) {
      message = "Newton iteration did not reach the tolerance";
      break;
    }

    // Active-set update: drop negative scales, add peaks that rose above zero.
    Eigen::Index most_negative = -1;
    double lowest = -opts.tolerance;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (s(j) < lowest) {
        lowest = s(j);
        most_negative = j;
      }
    }
    land = landscape(model, I, opts.grid_points);
    if (land.peaks.size() > kMaxDistinctPoints) {
      best.degenerate = true;
      message = "maximum set of H is not a small set of distinct points";
      break;
    }
    bool changed = false;
    if (most_negative >= 0) {
      tracked.erase(tracked.begin() + most_negative);
      Eigen::VectorXd t(s.size() - 1);
      t << s.head(most_negative), s.tail(s.size() - most_negative - 1);
      s = t;
      changed = true;
    } else {
      const HamiltonianPeak* rising = nullptr;
      for (const auto& p : land.peaks) {
        const bool known = std::any_of(tracked.begin(), tracked.end(),
                                       [&](double x) { return std::abs(x - p.x) < 2.0 * h; });
        if (!known && p.H > opts.tolerance && (rising == nullptr || p.H > rising->H)) rising = &p;
      }
      if (rising != nullptr) {
        const auto pos = std::lower_bound(tracked.begin(), tracked.end(), rising->x);
        const auto at = pos - tracked.begin();
        tracked.insert(pos, rising->x);
        Eigen::VectorXd t(s.size() + 1);
        t << s.head(at), 0.0, s.tail(s.size() - at);
        s = t;
        changed = true;
      }
    }
    if (!changed) {
      converged = true;
      break;
    }
    if (tracked.empty()) {
      // Everything was dropped; restart from the current global maximum.
      for (const auto& p : land.argmax) tracked.push_back(p.x);
      s = nnls(normalization_matrix(model, I, tracked), I).x;
    }
    if (++support_changes > opts.max_support_changes) {
      best.degenerate = true;
      message = "support set kept changing";
      break;
    }
  }

  AsymptoticSolution sol = best;
  sol.iterations = total_iterations;
  sol.message = message;
  if (converged && !best.degenerate) {
    try {
      const DiracWeights w = dirac_weights(model, sol.pressure, sol.points);
      sol.scales = w.scales;
      sol.weights = w.weights;
      sol.converged = true;
    } catch (const Error& e) {
      sol.message = e.what();
    }
  }
  if (sol.weights.size() == 0 && !sol.points.empty()) {
    sol.weights.resize(K, static_cast<Eigen::Index>(sol.points.size()));
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      const Eigen::VectorXd chi =
          perron_pair(fitness_matrix(model, sol.points[j], sol.pressure), Positivity::allow_zero).chi;
      sol.weights.col(static_cast<Eigen::Index>(j)) = sol.scales[j] * chi;
    }
  }
  if (!sol.points.empty()) sol.residuals = solution_residuals(model, sol, opts.grid_points);
  return sol;
}

bool ConstraintReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ConstraintCheck* ConstraintReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ConstraintReport verify_solution(const PatchModel& model, const AsymptoticSolution& sol, double tol,
                                 std::size_t grid_points) {
  ConstraintReport report;
  auto add = [&](std::string name, double value, bool passed) {
    report.checks.push_back({std::move(name), value, tol, passed});
  };
  const auto K = static_cast<Eigen::Index>(model.patches());
  const auto& nu = model.migration();
  const auto index = [](const char* stem, std::size_t j) {
    return std::string(stem) + "[" + std::to_string(j + 1) + "]";
  };

  for (std::size_t j = 0; j < sol.points.size(); ++j) {
    const double H = effective_hamiltonian(model, sol.points[j], sol.pressure);
    add(index("support_H_zero", j), H, std::abs(H) <= tol);
  }

  const FitnessLandscape land = landscape(model, sol.pressure, grid_points);
  add("max_H_zero", land.max_value, std::abs(land.max_value) <= tol);

  if (K == 2) {
    double min_G = *std::min_element(land.G.begin(), land.G.end());
    double max_F = -std::numeric_limits<double>::infinity();
    for (double x : sol.points) {
      min_G = std::min(min_G, quartic_G(model, x, sol.pressure));
      max_F = std::max(max_F, trace_F(model, x, sol.pressure));
    }
    add("min_G_zero", min_G, std::abs(min_G) <= tol);
    if (!sol.points.empty()) add("F_nonpositive_on_support", max_F, max_F <= tol);
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      const double R1 = model.growth(0, sol.points[j], sol.pressure(0));
      const double R2 = model.growth(1, sol.points[j], sol.pressure(1));
      const double first = sol.weights(1, c) * nu(0, 1) - sol.weights(0, c) * (nu(0, 0) - R1);
      const double second = nu(1, 0) * sol.weights(0, c) - (nu(1, 1) - R2) * sol.weights(1, c);
      add(index("rho_ratio_form1", j), first, std::abs(first) <= tol);
      add(index("rho_ratio_form2", j), second, std::abs(second) <= tol);
    }
  }

  for (Eigen::Index i = 0; i < K; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      total += model.psi(static_cast<std::size_t>(i), sol.points[j]) * sol.weights(i, static_cast<Eigen::Index>(j));
    }
    const double mismatch = total - sol.pressure(i);
    add(index("normalization", static_cast<std::size_t>(i)), mismatch, std::abs(mismatch) <= tol);
  }

  for (std::size_t j = 0; j < sol.points.size(); ++j) {
    const Eigen::VectorXd rho = sol.weights.col(static_cast<Eigen::Index>(j));
    const Eigen::MatrixXd A = fitness_matrix(model, sol.points[j], sol.pressure).A;
    const double scale = rho.cwiseAbs().maxCoeff();
    const double rel = scale > 0.0 ? (A * rho).cwiseAbs().maxCoeff() / scale : 0.0;
    add(index("balance", j), rel, rel <= tol);
  }

  const double min_weight = sol.weights.size() > 0 ? sol.weights.minCoeff() : 0.0;
  add("weights_nonnegative", min_weight, min_weight >= 0.0);
  return report;
}

}  // namespace migdirac
