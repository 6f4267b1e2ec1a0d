#include "migdirac/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "migdirac/errors.hpp"

namespace migdirac {

HopfColeProfile hopf_cole(const DensityState& state, double epsilon) {
  if (!(epsilon > 0.0)) throw AssumptionError("hopf_cole: epsilon must be positive");
  double top = 0.0;
  for (const auto& n : state.density) {
    for (double v : n) top = std::max(top, v);
  }
  HopfColeProfile p;
  p.grid = state.grid;
  p.epsilon = epsilon;
  p.floor = 1e-300 * std::max(1.0, top);
  p.u.resize(state.patches());
  p.above_floor.resize(state.patches());
  for (std::size_t i = 0; i < state.patches(); ++i) {
    const auto& n = state.density[i];
    auto& u = p.u[i];
    auto& mask = p.above_floor[i];
    u.resize(n.size());
    mask.resize(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) {
      mask[k] = n[k] >= p.floor;
      u[k] = epsilon * std::log(std::max(n[k], p.floor));
    }
  }
  return p;
}

namespace {

// Index of a peak on each plateau that is strictly higher than its neighbours.
std::vector<std::size_t> strict_maxima(const std::vector<double>& n) {
  std::vector<std::size_t> out;
  const std::size_t N = n.size();
  std::size_t k = 0;
  while (k < N) {
    std::size_t e = k;
    while (e + 1 < N && n[e + 1] == n[k]) ++e;
    const bool left = k == 0 || n[k - 1] < n[k];
    const bool right = e + 1 == N || n[e + 1] < n[k];
    const bool bounded = k > 0 || e + 1 < N;
    if (left && right && bounded) out.push_back((k + e) / 2);
    k = e + 1;
  }
  return out;
}

double refined_position(const std::vector<double>& n, std::size_t k, const GridSpec& grid) {
  const double x = grid.node(k);
  if (k == 0 || k + 1 == n.size() || !(n[k - 1] > 0.0) || !(n[k + 1] > 0.0)) return x;
  const double l = std::log(n[k - 1]);
  const double c = std::log(n[k]);
  const double r = std::log(n[k + 1]);
  const double curvature = l - 2.0 * c + r;
  if (!(curvature < 0.0)) return x;
  const double offset = std::clamp(0.5 * (l - r) / curvature, -0.5, 0.5);
  return x + offset * grid.spacing();
}

}  // namespace

EmpiricalAtoms extract_diracs(const DensityState& state, double rel_threshold) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw AssumptionError("extract_diracs: threshold must lie in (0, 1)");
  }
  const double h = state.grid.spacing();
  EmpiricalAtoms out;
  out.atoms.resize(state.patches());
  out.flat.assign(state.patches(), false);
  for (std::size_t i = 0; i < state.patches(); ++i) {
    const auto& n = state.density[i];
    out.total_mass.push_back(trapezoid(n, h));
    const double top = *std::max_element(n.begin(), n.end());
    std::vector<std::size_t> peaks;
    for (std::size_t k : strict_maxima(n)) {
      if (top > 0.0 && n[k] >= rel_threshold * top) peaks.push_back(k);
    }
    if (peaks.empty()) {
      out.flat[i] = true;
      continue;
    }
    // Basin boundaries: lowest node between consecutive retained peaks.
    std::vector<std::size_t> bounds{0};
    for (std::size_t p = 0; p + 1 < peaks.size(); ++p) {
      const auto first = n.begin() + static_cast<std::ptrdiff_t>(peaks[p]);
      const auto last = n.begin() + static_cast<std::ptrdiff_t>(peaks[p + 1]) + 1;
      bounds.push_back(static_cast<std::size_t>(std::min_element(first, last) - n.begin()));
    }
    bounds.push_back(n.size() - 1);
    for (std::size_t p = 0; p < peaks.size(); ++p) {
      const std::span<const double> basin(n.data() + bounds[p], bounds[p + 1] - bounds[p] + 1);
      EmpiricalAtom atom;
      atom.position = refined_position(n, peaks[p], state.grid);
      atom.mass = trapezoid(basin, h);
      atom.basin_lo = state.grid.node(bounds[p]);
      atom.basin_hi = state.grid.node(bounds[p + 1]);
      out.atoms[i].push_back(atom);
    }
  }
  return out;
}

Eigen::MatrixXd coupling_gaps(const HopfColeProfile& profile, std::optional<SupportWindow> window) {
  const auto K = profile.patches();
  Eigen::MatrixXd gaps = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  std::vector<double> tops(K, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < K; ++i) {
    for (double v : profile.u[i]) tops[i] = std::max(tops[i], v);
  }
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      double gap = 0.0;
      for (std::size_t k = 0; k < profile.u[i].size(); ++k) {
        if (!profile.above_floor[i][k] || !profile.above_floor[j][k]) continue;
        if (window && profile.u[i][k] < tops[i] - window->depth && profile.u[j][k] < tops[j] - window->depth) {
          continue;
        }
        gap = std::max(gap, std::abs(profile.u[i][k] - profile.u[j][k]));
      }
      gaps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gap;
      gaps(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = gap;
    }
  }
  return gaps;
}

double patch_coupling_gap(const HopfColeProfile& profile, std::optional<SupportWindow> window) {
  if (profile.patches() < 2) return 0.0;
  return coupling_gaps(profile, window).maxCoeff();
}

double semiconvexity_deficit(const HopfColeProfile& profile) {
  const double h = profile.grid.spacing();
  if (!(h > 0.0)) throw AssumptionError("semiconvexity_deficit: grid spacing must be positive");
  double deficit = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.patches(); ++i) {
    const auto& u = profile.u[i];
    const auto& mask = profile.above_floor[i];
    for (std::size_t k = 1; k + 1 < u.size(); ++k) {
      if (!mask[k - 1] || !mask[k] || !mask[k + 1]) continue;
      deficit = std::min(deficit, (u[k - 1] - 2.0 * u[k] + u[k + 1]) / (h * h));
    }
  }
  return deficit;
}

ComparisonReport compare_limits(const EmpiricalAtoms& atoms, const Eigen::VectorXd& empirical_pressure,
                                const AsymptoticSolution& sol, const ComparisonTolerance& tol) {
  const auto K = atoms.atoms.size();
  if (static_cast<Eigen::Index>(K) != sol.pressure.size() || empirical_pressure.size() != sol.pressure.size()) {
    throw DimensionError("compare_limits: patch counts differ");
  }
  ComparisonReport report;
  report.tolerance = tol;
  report.unmatched.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const double err = std::abs(empirical_pressure(static_cast<Eigen::Index>(i)) -
                                sol.pressure(static_cast<Eigen::Index>(i)));
    report.pressure_error.push_back(err);
    report.pressures_pass = report.pressures_pass && err <= tol.pressure;

    const auto& found = atoms.atoms[i];
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      for (std::size_t a = 0; a < found.size(); ++a) {
        pairs.emplace_back(std::abs(found[a].position - sol.points[j]), j, a);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<std::optional<std::size_t>> match(sol.points.size());
    std::vector<bool> taken(found.size(), false);
    for (const auto& [dist, j, a] : pairs) {
      if (match[j] || taken[a]) continue;
      match[j] = a;
      taken[a] = true;
    }
    for (std::size_t j = 0; j < sol.points.size(); ++j) {
      AtomComparison c;
      c.patch = i;
      c.expected_position = sol.points[j];
      c.expected_mass = sol.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (match[j]) {
        const auto& e = found[*match[j]];
        c.position = e.position;
        c.mass = e.mass;
        c.position_error = std::abs(e.position - c.expected_position);
        c.mass_error = std::abs(e.mass - c.expected_mass);
        report.positions_pass = report.positions_pass && c.position_error <= tol.position;
        report.masses_pass = report.masses_pass && c.mass_error <= tol.mass;
        c.passed = c.position_error <= tol.position && c.mass_error <= tol.mass;
      } else {
        c.mass_error = c.expected_mass;
        c.passed = c.expected_mass <= tol.mass;
        report.count_matches = report.count_matches && c.passed;
      }
      report.atoms.push_back(c);
    }
    for (std::size_t a = 0; a < found.size(); ++a) {
      if (taken[a]) continue;
      report.unmatched[i].push_back(found[a]);
      if (found[a].mass > tol.mass) report.count_matches = false;
    }
  }
  return report;
}

std::string ComparisonReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& a : atoms) {
    os << "patch " << a.patch + 1 << " atom x=" << a.expected_position << " mass=" << a.expected_mass;
    if (a.position) {
      os << " | found x=" << *a.position << " mass=" << *a.mass << " | dx=" << a.position_error
         << " dm=" << a.mass_error;
    } else {
      os << " | unmatched";
    }
    os << (a.passed ? " ok" : " FAIL") << '\n';
  }
  for (std::size_t i = 0; i < unmatched.size(); ++i) {
    for (const auto& e : unmatched[i]) {
      os << "patch " << i + 1 << " extra atom x=" << e.position << " mass=" << e.mass << '\n';
    }
  }
  for (std::size_t i = 0; i < pressure_error.size(); ++i) {
    os << "patch " << i + 1 << " pressure error " << pressure_error[i]
       << (pressure_error[i] <= tolerance.pressure ? " ok" : " FAIL") << '\n';
  }
  os << "coupling gap " << coupling_gap << ", semiconvexity deficit " << semiconvexity << '\n';
  os << "atom count " << (count_matches ? "ok" : "MISMATCH") << ", positions "
     << (positions_pass ? "ok" : "FAIL") << ", masses " << (masses_pass ? "ok" : "FAIL")
     << ", pressures " << (pressures_pass ? "ok" : "FAIL") << '\n';
  os << (passed() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

}  // namespace migdirac
