#include "migdirac_cli/output.hpp"

#include <fmt/format.h>

#include <fstream>
#include <stdexcept>

namespace migdirac::cli {

std::string num(double v) { return fmt::format("{}", v); }

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string time_series_csv(const SimulationResult& result) {
  std::string out = "tau";
  const auto K = result.final_state.patches();
  for (std::size_t i = 0; i < K; ++i) out += fmt::format(",I_{}", i + 1);
  out += '\n';
  for (std::size_t r = 0; r < result.tau.size(); ++r) {
    out += num(result.tau[r]);
    for (Eigen::Index i = 0; i < result.pressure[r].size(); ++i) out += "," + num(result.pressure[r](i));
    out += '\n';
  }
  return out;
}

std::string profile_csv(const DensityState& state) {
  std::string out = "x";
  for (std::size_t i = 0; i < state.patches(); ++i) out += fmt::format(",n_{}", i + 1);
  out += '\n';
  for (std::size_t k = 0; k < state.grid.nodes; ++k) {
    out += num(state.grid.node(k));
    for (const auto& n : state.density) out += "," + num(n[k]);
    out += '\n';
  }
  return out;
}

std::string landscape_csv(const FitnessLandscape& land) {
  const bool two = !land.F.empty();
  std::string out = two ? "x,H,F,G\n" : "x,H\n";
  for (std::size_t k = 0; k < land.x.size(); ++k) {
    out += num(land.x[k]) + "," + num(land.H[k]);
    if (two) out += "," + num(land.F[k]) + "," + num(land.G[k]);
    out += '\n';
  }
  return out;
}

std::string solution_csv(const AsymptoticSolution& sol) {
  std::string out = "x_j,s_j";
  for (Eigen::Index i = 0; i < sol.pressure.size(); ++i) out += fmt::format(",rho_{}", i + 1);
  out += '\n';
  for (std::size_t j = 0; j < sol.points.size(); ++j) {
    out += num(sol.points[j]) + "," + num(j < sol.scales.size() ? sol.scales[j] : 0.0);
    for (Eigen::Index i = 0; i < sol.weights.rows(); ++i) {
      out += "," + num(sol.weights(i, static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

std::string summary_csv(const AsymptoticSolution& sol) {
  std::string head;
  std::string row;
  for (Eigen::Index i = 0; i < sol.pressure.size(); ++i) {
    head += fmt::format("I_{},", i + 1);
    row += num(sol.pressure(i)) + ",";
  }
  head += "maxH_residual,norm_residual\n";
  row += num(sol.residuals.max_H) + "," + num(sol.residuals.normalization) + "\n";
  return head + row;
}

std::string constraints_csv(const ConstraintReport& report) {
  std::string out = "name,value,tolerance,passed\n";
  for (const auto& c : report.checks) {
    out += fmt::format("{},{},{},{}\n", c.name, num(c.value), num(c.tolerance), c.passed ? 1 : 0);
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report) {
  std::string out = "patch,x_expected,mass_expected,x_found,mass_found,dx,dm,passed\n";
  for (const auto& a : report.atoms) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", a.patch + 1, num(a.expected_position),
                       num(a.expected_mass), a.position ? num(*a.position) : "",
                       a.mass ? num(*a.mass) : "", num(a.position_error), num(a.mass_error),
                       a.passed ? 1 : 0);
  }
  return out;
}

std::string atoms_csv(const EmpiricalAtoms& atoms) {
  std::string out = "patch,x,mass,basin_lo,basin_hi\n";
  for (std::size_t i = 0; i < atoms.atoms.size(); ++i) {
    for (const auto& a : atoms.atoms[i]) {
      out += fmt::format("{},{},{},{},{}\n", i + 1, num(a.position), num(a.mass), num(a.basin_lo),
                         num(a.basin_hi));
    }
  }
  return out;
}

}  // namespace migdirac::cli
