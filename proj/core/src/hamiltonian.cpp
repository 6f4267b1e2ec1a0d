#include "migdirac/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "migdirac/errors.hpp"

namespace migdirac {

namespace {

constexpr double kClusterRadius = 1e-4;
constexpr double kArgmaxBand = 1e-6;

double eigen_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& v, double lambda) {
  return (A * v - lambda * v).cwiseAbs().maxCoeff();
}

void enforce_positivity(const PerronPair& p, Positivity positivity) {
  if (positivity == Positivity::allow_zero) return;
  // Power iteration only drives an unreachable component down geometrically, so
  // "zero" means below 1e-10 of the largest component.
  if (!(p.chi.minCoeff() > 1e-10 * p.chi.maxCoeff())) {
    std::ostringstream os;
    os << "Perron vector has a zero component (reducible migration graph?): chi = "
       << p.chi.transpose();
    throw PositivityError(os.str());
  }
}

}  // namespace

FitnessMatrix fitness_matrix(const PatchModel& model, double x, const Eigen::VectorXd& pressure) {
  const auto K = static_cast<Eigen::Index>(model.patches());
  if (pressure.size() != K) {
    std::ostringstream os;
    os << "pressure vector has " << pressure.size() << " components, model has " << K << " patches";
    throw DimensionError(os.str());
  }
  FitnessMatrix m;
  m.x = x;
  m.pressure = pressure;
  m.A = model.migration();
  for (Eigen::Index i = 0; i < K; ++i) {
    m.A(i, i) = model.growth(static_cast<std::size_t>(i), x, pressure(i)) - model.migration()(i, i);
  }
  return m;
}

PerronPair perron_closed_form(const Eigen::MatrixXd& A) {
  if (A.rows() != 2 || A.cols() != 2) throw DimensionError("closed form needs a 2x2 matrix");
  const double a = A(0, 0);
  const double b = A(0, 1);
  const double c = A(1, 0);
  const double d = A(1, 1);
  const double bc = b * c;
  const double s = std::sqrt((a - d) * (a - d) + 4.0 * bc);

  // lambda - a and lambda - d without cancellation; both are >= 0.
  const double gap_a = (d - a) >= 0.0 ? 0.5 * (s + (d - a)) : (s - (d - a) > 0.0 ? 2.0 * bc / (s - (d - a)) : 0.0);
  const double gap_d = (a - d) >= 0.0 ? 0.5 * (s + (a - d)) : (s - (a - d) > 0.0 ? 2.0 * bc / (s - (a - d)) : 0.0);

  PerronPair p;
  p.lambda = a >= d ? a + gap_a : d + gap_d;
  // Row 1 gives chi ~ (b, lambda - a); row 2 gives chi ~ (lambda - d, c).
  Eigen::Vector2d v1(b, gap_a);
  Eigen::Vector2d v2(gap_d, c);
  Eigen::Vector2d v = v1.sum() >= v2.sum() ? v1 : v2;
  if (!(v.sum() > 0.0)) {
    // b = c = 0 and a = d: every vector is an eigenvector.
    v = Eigen::Vector2d(0.5, 0.5);
  }
  p.chi = v / v.sum();
  p.residual = eigen_residual(A, p.chi, p.lambda);
  return p;
}

PerronPair perron_power_iteration(const Eigen::MatrixXd& A, int max_iterations) {
  const auto K = A.rows();
  if (K == 0 || A.cols() != K) throw DimensionError("power iteration needs a square matrix");
  const double sigma = 1.0 + A.diagonal().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd B = A + sigma * Eigen::MatrixXd::Identity(K, K);
  const double scale = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();

  Eigen::VectorXd v = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  double mu = v.dot(B * v) / v.squaredNorm();
  PerronPair p;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = B * v;
    const double next = w.sum();  // sum(v) = 1
    if (!(next > 0.0) || !std::isfinite(next)) {
      throw NumericalError("power iteration broke down (non-positive iterate)", next);
    }
    v = w / next;
    const bool settled = std::abs(next - mu) < 1e-13;
    mu = next;
    if (settled) {
      const double residual = eigen_residual(A, v, mu - sigma);
      if (residual <= 1e-12 * scale) {
        p.lambda = mu - sigma;
        p.chi = v;
        p.iterations = it;
        p.residual = residual;
        return p;
      }
    }
  }
  throw NumericalError("power iteration did not converge", eigen_residual(A, v, mu - sigma));
}

PerronPair perron_pair(const Eigen::MatrixXd& A, Positivity positivity) {
  const auto K = A.rows();
  if (K == 0 || A.cols() != K) throw DimensionError("Perron pair needs a square matrix");
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = 0; j < K; ++j) {
      if (i != j && A(i, j) < 0.0) throw AssumptionError("fitness matrix has a negative off-diagonal");
    }
  }
  PerronPair p;
  if (K == 1) {
    p.lambda = A(0, 0);
    p.chi = Eigen::VectorXd::Ones(1);
  } else if (K == 2) {
    p = perron_closed_form(A);
  } else {
    p = perron_power_iteration(A);
  }
  enforce_positivity(p, positivity);
  return p;
}

PerronPair perron_pair(const FitnessMatrix& m, Positivity positivity) {
  return perron_pair(m.A, positivity);
}

double effective_hamiltonian(const PatchModel& model, double x, const Eigen::VectorXd& pressure) {
  return perron_pair(fitness_matrix(model, x, pressure), Positivity::allow_zero).lambda;
}

double trace_F(const PatchModel& model, double x, const Eigen::VectorXd& pressure) {
  if (model.patches() != 2) throw DimensionError("F is only defined for two patches");
  return fitness_matrix(model, x, pressure).A.trace();
}

double quartic_G(const PatchModel& model, double x, const Eigen::VectorXd& pressure) {
  if (model.patches() != 2) throw DimensionError("G is only defined for two patches");
  const Eigen::MatrixXd A = fitness_matrix(model, x, pressure).A;
  return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
}

HamiltonianPeak refine_peak(const PatchModel& model, const Eigen::VectorXd& pressure, double lo,
                            double hi, double tolerance) {
  const double L = model.half_width();
  lo = std::max(lo, -L);
  hi = std::min(hi, L);
  auto H = [&](double x) { return effective_hamiltonian(model, x, pressure); };
  HamiltonianPeak best{lo, H(lo)};
  auto consider = [&](double x, double value) {
    if (value > best.H) best = {x, value};
  };
  consider(hi, H(hi));

  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = H(c);
  double fd = H(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = H(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = H(d);
    }
  }
  consider(c, fc);
  consider(d, fd);
  const double mid = 0.5 * (a + b);
  consider(mid, H(mid));

  // Function values alone pin the maximiser only to ~sqrt(machine eps); polish
  // interior maxima with Newton steps on central differences.
  constexpr double delta = 1e-5;
  if (best.x - delta > lo && best.x + delta < hi) {
    double x = best.x;
    for (int it = 0; it < 3; ++it) {
      const double hp = H(x + delta);
      const double hm = H(x - delta);
      const double h0 = H(x);
      const double second = (hp - 2.0 * h0 + hm) / (delta * delta);
      if (!(second < 0.0)) break;
      const double step = -(hp - hm) / (2.0 * delta) / second;
      if (!(std::abs(step) <= 1e-6) || x + step - delta <= lo || x + step + delta >= hi) break;
      x += step;
    }
    const double hx = H(x);
    if (hx >= best.H - 1e-14 * std::max(1.0, std::abs(best.H))) best = {x, hx};
  }
  return best;
}

FitnessLandscape landscape(const PatchModel& model, const Eigen::VectorXd& pressure,
                           std::size_t grid_points) {
  if (grid_points < 3) throw DimensionError("landscape needs at least 3 grid points");
  const double L = model.half_width();
  const bool two = model.patches() == 2;

  FitnessLandscape out;
  out.half_width = L;
  out.pressure = pressure;
  out.x.resize(grid_points);
  out.H.resize(grid_points);
  if (two) {
    out.F.resize(grid_points);
    out.G.resize(grid_points);
  }
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double x = -L + 2.0 * L * static_cast<double>(k) / static_cast<double>(grid_points - 1);
    const FitnessMatrix m = fitness_matrix(model, x, pressure);
    out.x[k] = x;
    out.H[k] = perron_pair(m, Positivity::allow_zero).lambda;
    if (two) {
      out.F[k] = m.A.trace();
      out.G[k] = m.A(0, 0) * m.A(1, 1) - m.A(0, 1) * m.A(1, 0);
    }
  }

  std::vector<HamiltonianPeak> raw;
  const std::size_t last = grid_points - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const bool left_ok = k == 0 || out.H[k] >= out.H[k - 1];
    const bool right_ok = k == last || out.H[k] >= out.H[k + 1];
    if (!(left_ok && right_ok)) continue;
    const double lo = out.x[k == 0 ? 0 : k - 1];
    const double hi = out.x[k == last ? last : k + 1];
    raw.push_back(refine_peak(model, pressure, lo, hi));
  }
  std::sort(raw.begin(), raw.end(), [](const auto& p, const auto& q) { return p.x < q.x; });

  // Merge maxima closer than the cluster radius into their H-weighted centroid.
  for (std::size_t s = 0; s < raw.size();) {
    std::size_t e = s + 1;
    while (e < raw.size() && raw[e].x - raw[e - 1].x < kClusterRadius) ++e;
    if (e - s == 1) {
      out.peaks.push_back(raw[s]);
    } else {
      double top = raw[s].H;
      for (std::size_t k = s; k < e; ++k) top = std::max(top, raw[k].H);
      double wsum = 0.0;
      double xsum = 0.0;
      for (std::size_t k = s; k < e; ++k) {
        const double w = std::exp(-(top - raw[k].H) / kArgmaxBand);
        wsum += w;
        xsum += w * raw[k].x;
      }
      const double x = xsum / wsum;
      out.peaks.push_back({x, effective_hamiltonian(model, x, pressure)});
    }
    s = e;
  }

  out.max_value = *std::max_element(out.H.begin(), out.H.end());
  for (const auto& p : out.peaks) out.max_value = std::max(out.max_value, p.H);
  for (const auto& p : out.peaks) {
    if (p.H >= out.max_value - kArgmaxBand) out.argmax.push_back(p);
  }
  return out;
}

}  // namespace migdirac
