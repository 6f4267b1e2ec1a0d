#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "migdirac/model.hpp"
#include "migdirac/pde_solver.hpp"

namespace migdirac {

/// A model plus the simulation settings read from an INI document:
///
///   [model]      K, L, epsilon
///   [patch.<i>]  growth.kind = quadratic | tabulated
///                quadratic: a, b, c, d        tabulated: table.x, table.y, d
///                psi = <constant>  or  psi.x, psi.y (tabulated)
///   [migration]  row<i> = K numbers, '*' on the diagonal for the conservation default
///                nonconservative = false (set true to require explicit diagonals)
///   [sim]        grid_points, dt, tau_end, steady_tol, sample_stride, checkpoints
///   [init.<i>]   center, mass, width
///
/// Patch indices are one-based; lists are whitespace or comma separated.
struct ParsedConfig {
  PatchModel model;
  std::size_t grid_points = 801;
  RunOptions run;
  std::vector<InitialBump> init;
  /// Unknown sections and keys.
  std::vector<std::string> warnings;
};

/// Throws ConfigError naming the offending key, or AssumptionError for an
/// invalid quadratic growth law (a >= 0 or d <= 0).
ParsedConfig parse_config(const std::string& text);
ParsedConfig load_config(const std::filesystem::path& path);

/// The model part only.
PatchModel build_model(const std::string& text);

/// Canonical, fully explicit config text; parse_config(to_config_text(c))
/// reproduces c exactly.
std::string to_config_text(const ParsedConfig& config);

}  // namespace migdirac
