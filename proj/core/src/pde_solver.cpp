#include "migdirac/pde_solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "migdirac/errors.hpp"

namespace migdirac {

GridSpec GridSpec::make(double half_width, std::size_t nodes) {
  if (nodes < 3) throw DimensionError("grid needs at least 3 nodes");
  if (!(half_width > 0.0)) throw AssumptionError("grid half-width must be positive");
  return GridSpec{nodes, half_width};
}

std::vector<double> GridSpec::coordinates() const {
  std::vector<double> xs(nodes);
  for (std::size_t k = 0; k < nodes; ++k) xs[k] = node(k);
  return xs;
}

double trapezoid(std::span<const double> values, double spacing) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) sum += values[k];
  return sum * spacing;
}

DensityState init_state(const PatchModel& model, const GridSpec& grid,
                        std::span<const InitialBump> bumps) {
  if (grid.nodes < 3) throw DimensionError("init_state: grid is empty");
  if (bumps.size() != model.patches()) {
    throw DimensionError("init_state: need one initial bump per patch");
  }
  DensityState state;
  state.grid = grid;
  state.density.resize(model.patches());
  const double L = grid.half_width;
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    const auto& b = bumps[i];
    if (!(b.mass > 0.0)) throw AssumptionError("init_state: mass must be positive");
    if (!(b.width > 0.0)) throw AssumptionError("init_state: width must be positive");
    if (!(std::abs(b.center) < L)) throw AssumptionError("init_state: |center| must be < L");
    auto& n = state.density[i];
    n.resize(grid.nodes);
    for (std::size_t k = 0; k < grid.nodes; ++k) {
      const double z = (grid.node(k) - b.center) / b.width;
      n[k] = std::exp(-0.5 * z * z);
    }
    const double raw = trapezoid(n, grid.spacing());
    for (double& v : n) v *= b.mass / raw;
  }
  return state;
}

Eigen::VectorXd pressures(const PatchModel& model, const DensityState& state) {
  const auto K = state.patches();
  Eigen::VectorXd out(static_cast<Eigen::Index>(K));
  const double h = state.grid.spacing();
  for (std::size_t i = 0; i < K; ++i) {
    const auto& n = state.density[i];
    const auto& w = model.weight_spec(i);
    double sum = 0.0;
    if (w.is_constant()) {
      sum = w(0.0) * trapezoid(n, h);
    } else {
      const auto N = n.size();
      for (std::size_t k = 0; k < N; ++k) {
        const double f = w(state.grid.node(k)) * n[k];
        sum += (k == 0 || k + 1 == N) ? 0.5 * f : f;
      }
      sum *= h;
    }
    out(static_cast<Eigen::Index>(i)) = sum;
  }
  return out;
}

namespace {

double growth_sup(double min_base, double max_base, double slope, double pressure) {
  return std::max(std::abs(min_base - slope * pressure), std::abs(max_base - slope * pressure));
}

struct SweepData {
  std::size_t nodes;
  std::size_t patches;
  double dt;
  const double* inv_pivot;
  const double* lower_scaled;
  const double* upper;
  const double* const* in;
  double* const* out;
  double* const* scratch;
  const double* const* base;
  const double* shift;
  const double* inflow;  // dt * nu^{ij}, zero diagonal
};

// Explicit reaction + migration fused with the forward Thomas sweep, then back
// substitution with clamping. Patches are the inner loop so their elimination
// chains interleave; FixedK > 0 lets the compiler keep the carries in registers.
// Returns the number of clamped (negative) values.
// Far tails decay into the subnormal range, where arithmetic is several times
// slower; the sweep runs with flush-to-zero / denormals-are-zero set.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

template <std::size_t FixedK>
std::size_t imex_sweep(const SweepData& s, std::vector<double>& dynamic_carry) {
  const std::size_t K = FixedK > 0 ? FixedK : s.patches;
  const std::size_t N = s.nodes;
  std::array<double, (FixedK > 0 ? FixedK : 1)> fixed_carry{};
  double* carry = FixedK > 0 ? fixed_carry.data() : dynamic_carry.data();
  for (std::size_t i = 0; i < K; ++i) carry[i] = 0.0;

  for (std::size_t k = 0; k < N; ++k) {
    const double ip = s.inv_pivot[k];
    const double lo = s.lower_scaled[k];
    for (std::size_t i = 0; i < K; ++i) {
      const double nik = s.in[i][k];
      double rhs = nik + s.dt * nik * (s.base[i][k] - s.shift[i]);
      for (std::size_t j = 0; j < K; ++j) {
        if (j != i) rhs += s.inflow[i * K + j] * s.in[j][k];
      }
      const double y = rhs * ip - lo * carry[i];
            s.scratch[i][k] = y;
      carry[i] = y;
    }
  }

  std::size_t clamped = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const double v = s.scratch[i][N - 1];
    clamped += v < 0.0;
    s.out[i][N - 1] = v < 0.0 ? 0.0 : v;
    carry[i] = v;
  }
  for (std::size_t k = N - 1; k-- > 0;) {
    const double up = s.upper[k];
    for (std::size_t i = 0; i < K; ++i) {
      double v = s.scratch[i][k] - up * carry[i];
      carry[i] = v;
      clamped += v < 0.0;
      s.out[i][k] = v < 0.0 ? 0.0 : v;
    }
  }
  return clamped;
}

}  // namespace

double max_stable_dt(const PatchModel& model, const GridSpec& grid, const Eigen::VectorXd& pressure) {
  double rate = 0.0;
  for (std::size_t i = 0; i < model.patches(); ++i) {
    const auto& g = model.growth_spec(i);
    double sup = 0.0;
    for (std::size_t k = 0; k < grid.nodes; ++k) {
      sup = std::max(sup, std::abs(g(grid.node(k), pressure(static_cast<Eigen::Index>(i)))));
    }
    rate = std::max(rate, sup);
  }
  rate += model.migration().diagonal().maxCoeff();
  return rate > 0.0 ? 0.5 / rate : std::numeric_limits<double>::infinity();
}

double pressure_ceiling_estimate(const PatchModel& model) {
  double ceiling = 1.0;
  const double L = model.half_width();
  constexpr int samples = 1001;
  for (std::size_t i = 0; i < model.patches(); ++i) {
    const auto& g = model.growth_spec(i);
    if (!(g.pressure_slope() > 0.0)) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      top = std::max(top, g.base(-L + 2.0 * L * s / (samples - 1)));
    }
    ceiling = std::max(ceiling, top / g.pressure_slope());
  }
  return ceiling;
}

ImexStepper::ImexStepper(const PatchModel& model, const GridSpec& grid, double dt)
    : migration_(model.migration()), grid_(grid), dt_(dt) {
  if (!(dt > 0.0)) throw StabilityError("time step must be positive", 0.0);
  if (grid.nodes < 3) throw DimensionError("grid needs at least 3 nodes");
  const auto K = model.patches();
  const auto N = grid.nodes;
  base_growth_.assign(K, std::vector<double>(N));
  psi_.assign(K, std::vector<double>(N));
  pressure_slope_.resize(K);
  min_base_.resize(K);
  max_base_.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const auto& g = model.growth_spec(i);
    pressure_slope_[i] = g.pressure_slope();
    for (std::size_t k = 0; k < N; ++k) {
      base_growth_[i][k] = g.base(grid.node(k));
      psi_[i][k] = model.psi(i, grid.node(k));
    }
    const auto [lo, hi] = std::minmax_element(base_growth_[i].begin(), base_growth_[i].end());
    min_base_[i] = *lo;
    max_base_[i] = *hi;
  }

  const double h = grid.spacing();
  const double r = dt * model.epsilon() * model.epsilon() / (h * h);
  const double diag = 1.0 + 2.0 * r;
  lower_.assign(N, -r);
  upper_.assign(N, -r);
  lower_[0] = 0.0;
  upper_[N - 1] = 0.0;
  upper_[0] = -2.0 * r;      // mirror ghost n_{-1} = n_1
  lower_[N - 1] = -2.0 * r;  // mirror ghost n_N = n_{N-2}
  inv_pivot_.resize(N);
  inv_pivot_[0] = 1.0 / diag;
  upper_[0] *= inv_pivot_[0];
  for (std::size_t k = 1; k < N; ++k) {
    const double pivot = diag - lower_[k] * upper_[k - 1];
    inv_pivot_[k] = 1.0 / pivot;
    upper_[k] *= inv_pivot_[k];
  }
  lower_scaled_.resize(N);
  for (std::size_t k = 0; k < N; ++k) lower_scaled_[k] = lower_[k] * inv_pivot_[k];
  inflow_.assign(K * K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      if (i != j) {
        inflow_[i * K + j] = dt * migration_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  shifts_.resize(K);
  carry_.resize(K);
  scratch_.assign(K, std::vector<double>(N));
  last_pressures_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
}

void ImexStepper::advance(DensityState& state) {
  const auto K = state.patches();
  const auto N = grid_.nodes;
  if (K != base_growth_.size() || state.grid.nodes != N) {
    throw DimensionError("state does not match the stepper's model/grid");
  }
  const double h = grid_.spacing();

  for (std::size_t i = 0; i < K; ++i) {
    const double* n = state.density[i].data();
    const double* w = psi_[i].data();
    // Four partial sums break the serial add chain; the order is fixed, so the
    // result is still deterministic.
    double part[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t k = 1;
    for (; k + 4 < N; k += 4) {
      part[0] += w[k] * n[k];
      part[1] += w[k + 1] * n[k + 1];
      part[2] += w[k + 2] * n[k + 2];
      part[3] += w[k + 3] * n[k + 3];
    }
    for (; k + 1 < N; ++k) part[0] += w[k] * n[k];
    const double sum = 0.5 * (w[0] * n[0] + w[N - 1] * n[N - 1]) + ((part[0] + part[1]) + (part[2] + part[3]));
    last_pressures_(static_cast<Eigen::Index>(i)) = sum * h;
  }

  double rate = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    rate = std::max(rate, growth_sup(min_base_[i], max_base_[i], pressure_slope_[i],
                                     last_pressures_(static_cast<Eigen::Index>(i))));
  }
  rate += migration_.diagonal().maxCoeff();
  if (dt_ * rate > 0.5) {
    std::ostringstream os;
    os << "time step " << dt_ << " exceeds the explicit budget; admissible dt <= " << 0.5 / rate;
    throw StabilityError(os.str(), 0.5 / rate);
  }

  std::vector<const double*> in(K);
  std::vector<double*> out(K);
  std::vector<double*> scratch(K);
  std::vector<const double*> base(K);
  for (std::size_t i = 0; i < K; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    shifts_[i] = pressure_slope_[i] * last_pressures_(ii) + migration_(ii, ii);
    in[i] = state.density[i].data();
    out[i] = state.density[i].data();
    scratch[i] = scratch_[i].data();
    base[i] = base_growth_[i].data();
  }
  const SweepData data{N,           K,          dt_,           inv_pivot_.data(), lower_scaled_.data(),
                       upper_.data(), in.data(), out.data(),    scratch.data(),    base.data(),
                       shifts_.data(), inflow_.data()};
  const FlushDenormals ftz;
  switch (K) {
    case 1: clamp_events_ += imex_sweep<1>(data, carry_); break;
    case 2: clamp_events_ += imex_sweep<2>(data, carry_); break;
    case 3: clamp_events_ += imex_sweep<3>(data, carry_); break;
    case 4: clamp_events_ += imex_sweep<4>(data, carry_); break;
    default: clamp_events_ += imex_sweep<0>(data, carry_); break;
  }
  node_updates_ += K * N;
  state.tau += dt_;
}

DensityState step(const PatchModel& model, const DensityState& state, double dt) {
  ImexStepper stepper(model, state.grid, dt);
  DensityState next = state;
  stepper.advance(next);
  return next;
}

std::vector<std::vector<double>> stationary_residual(const PatchModel& model, const DensityState& state) {
  const auto K = state.patches();
  const auto N = state.grid.nodes;
  const double h = state.grid.spacing();
  const double diffusion = model.epsilon() * model.epsilon() / (h * h);
  const Eigen::VectorXd I = pressures(model, state);
  const auto& nu = model.migration();
  std::vector<std::vector<double>> out(K, std::vector<double>(N));
  for (std::size_t i = 0; i < K; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto& n = state.density[i];
    for (std::size_t k = 0; k < N; ++k) {
      const double left = k == 0 ? n[1] : n[k - 1];
      const double right = k + 1 == N ? n[N - 2] : n[k + 1];
      double v = diffusion * (left - 2.0 * n[k] + right);
      v += n[k] * (model.growth(i, state.grid.node(k), I(ii)) - nu(ii, ii));
      for (std::size_t j = 0; j < K; ++j) {
        if (j != i) v += nu(ii, static_cast<Eigen::Index>(j)) * state.density[j][k];
      }
      out[i][k] = v;
    }
  }
  return out;
}

SimulationResult run_to_steady(const PatchModel& model, DensityState state, const RunOptions& opts) {
  if (!(opts.dt > 0.0)) throw StabilityError("time step must be positive", 0.0);
  if (!(opts.tau_end > state.tau)) throw AssumptionError("tau_end must exceed the initial time");
  if (opts.sample_stride == 0) throw AssumptionError("sample_stride must be >= 1");

  constexpr std::size_t window = 100;
  const auto start = std::chrono::steady_clock::now();
  const auto K = state.patches();
  const double h = state.grid.spacing();
  const double tau0 = state.tau;
  const double guard = 1e3 * pressure_ceiling_estimate(model);

  ImexStepper stepper(model, state.grid, opts.dt);
  SimulationResult result;
  std::vector<double> checkpoints = opts.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::size_t next_checkpoint = 0;

  auto record = [&](const Eigen::VectorXd& I) {
    if (result.tau.empty() || state.tau > result.tau.back()) {
      result.tau.push_back(state.tau);
      result.pressure.push_back(I);
    }
  };
  auto take_checkpoints = [&] {
    while (next_checkpoint < checkpoints.size() &&
           state.tau >= checkpoints[next_checkpoint] - 0.5 * opts.dt) {
      result.checkpoints.push_back(state);
      ++next_checkpoint;
    }
  };
  auto check_guard = [&](const Eigen::VectorXd& I) {
    for (Eigen::Index i = 0; i < I.size(); ++i) {
      if (!std::isfinite(I(i)) || I(i) > guard) {
        std::ostringstream os;
        os << "blow-up guard: pressure I_" << i + 1 << " = " << I(i) << " exceeds " << guard
           << " at tau = " << state.tau;
        throw NumericalError(os.str(), I(i));
      }
    }
  };

  record(pressures(model, state));
  take_checkpoints();
  std::vector<std::vector<double>> snapshot = state.density;
  std::size_t steps = 0;
  const auto total_steps = static_cast<std::size_t>(std::ceil((opts.tau_end - tau0) / opts.dt - 1e-9));

  while (steps < total_steps) {
    stepper.advance(state);
    ++steps;
    state.tau = tau0 + static_cast<double>(steps) * opts.dt;
    take_checkpoints();
    if (steps % opts.sample_stride == 0) {
      const auto& I = stepper.last_pressures();
      check_guard(I);
      record(pressures(model, state));
    }
    if (steps % window == 0) {
      double worst = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        const auto& n = state.density[i];
        auto& old = snapshot[i];
        const auto N = n.size();
        double change = 0.5 * (std::abs(n[0] - old[0]) + std::abs(n[N - 1] - old[N - 1]));
        double mass = 0.5 * (n[0] + n[N - 1]);
        for (std::size_t k = 1; k + 1 < N; ++k) {
          change += std::abs(n[k] - old[k]);
          mass += n[k];
        }
        change *= h;
        mass *= h;
        worst = std::max(worst, change / (static_cast<double>(window) * opts.dt * std::max(1.0, mass)));
        old = n;
      }
      check_guard(pressures(model, state));
      result.steady_rate = worst;
      if (worst < opts.steady_tol) {
        result.steady = true;
        break;
      }
    }
  }

  record(pressures(model, state));
  result.steps = steps;
  result.clamp_events = stepper.clamp_events();
  result.node_updates = stepper.node_updates();
  result.final_state = std::move(state);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace migdirac
