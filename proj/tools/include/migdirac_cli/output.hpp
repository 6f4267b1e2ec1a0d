#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "migdirac/asymptotic.hpp"
#include "migdirac/concentration.hpp"
#include "migdirac/hamiltonian.hpp"
#include "migdirac/pde_solver.hpp"

namespace migdirac::cli {

namespace fs = std::filesystem;

/// Shortest round-trip decimal form; identical inputs give identical text.
std::string num(double v);

/// Writes `content` to `path` via a temporary file in the same directory and a rename.
void write_atomically(const fs::path& path, const std::string& content);

/// tau,I_1,...,I_K
std::string time_series_csv(const SimulationResult& result);
/// x,n_1,...,n_K
std::string profile_csv(const DensityState& state);
/// x,H[,F,G]
std::string landscape_csv(const FitnessLandscape& land);
/// x_j,s_j,rho_1,...,rho_K  (one row per atom)
std::string solution_csv(const AsymptoticSolution& sol);
/// I_1,...,I_K,maxH_residual,norm_residual  (single row)
std::string summary_csv(const AsymptoticSolution& sol);
/// name,value,tolerance,passed
std::string constraints_csv(const ConstraintReport& report);
/// patch,x_expected,mass_expected,x_found,mass_found,dx,dm,passed
std::string comparison_csv(const ComparisonReport& report);
/// patch,x,mass,basin_lo,basin_hi
std::string atoms_csv(const EmpiricalAtoms& atoms);

}  // namespace migdirac::cli
