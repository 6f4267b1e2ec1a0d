#pragma once

#include <Eigen/Core>

namespace migdirac {

struct NnlsResult {
  Eigen::VectorXd x;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Lawson-Hanson active-set solution of min ||M x - b||_2 subject to x >= 0.
/// Sized for the tiny systems here (a handful of rows and columns).
NnlsResult nnls(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace migdirac
