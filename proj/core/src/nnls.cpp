#include "migdirac/nnls.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <vector>

#include "migdirac/errors.hpp"

namespace migdirac {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                              const std::vector<bool>& passive) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::MatrixXd sub(M.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = M.col(cols[c]);
  const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(M.cols());
  for (std::size_t c = 0; c < cols.size(); ++c) z(cols[c]) = zs(static_cast<Eigen::Index>(c));
  return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, int max_iterations) {
  if (M.rows() != b.size()) throw DimensionError("nnls: row count of M must match b");
  const auto n = M.cols();
  if (max_iterations <= 0) max_iterations = 3 * static_cast<int>(n) + 30;

  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     std::max<double>(1.0, M.cwiseAbs().maxCoeff()) *
                     static_cast<double>(std::max(M.rows(), n)) * std::max(1.0, b.cwiseAbs().maxCoeff());

  NnlsResult out;
  out.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = M.transpose() * (b - M * out.x);

  while (out.iterations < max_iterations) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    ++out.iterations;

    while (true) {
      Eigen::VectorXd z = solve_passive(M, b, passive);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) {
        out.x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          alpha = std::min(alpha, out.x(j) / (out.x(j) - z(j)));
        }
      }
      out.x += alpha * (z - out.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && out.x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          out.x(j) = 0.0;
        }
      }
    }
    w = M.transpose() * (b - M * out.x);
  }
  out.residual_norm = (M * out.x - b).norm();
  return out;
}

}  // namespace migdirac
