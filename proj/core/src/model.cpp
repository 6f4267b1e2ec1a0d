#include "migdirac/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "migdirac/errors.hpp"

namespace migdirac {

double Table1D::operator()(double at) const {
  if (x.empty()) return 0.0;
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  auto upper = std::upper_bound(x.begin(), x.end(), at);
  const auto k = static_cast<std::size_t>(upper - x.begin());
  const double t = (at - x[k - 1]) / (x[k] - x[k - 1]);
  return y[k - 1] + t * (y[k] - y[k - 1]);
}

namespace {

void check_table(const Table1D& table, const char* what) {
  if (table.x.size() < 2 || table.x.size() != table.y.size()) {
    throw DimensionError(std::string(what) + ": table needs >= 2 points and matching x/y lengths");
  }
  for (std::size_t k = 1; k < table.x.size(); ++k) {
    if (!(table.x[k] > table.x[k - 1])) {
      throw AssumptionError(std::string(what) + ": table abscissae must be strictly increasing");
    }
  }
  for (double v : table.y) {
    if (!std::isfinite(v)) throw AssumptionError(std::string(what) + ": non-finite table value");
  }
}

}  // namespace

GrowthSpec GrowthSpec::quadratic(double a, double b, double c, double d) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) {
    throw AssumptionError("quadratic growth: non-finite coefficient");
  }
  if (!(a < 0.0)) throw AssumptionError("quadratic growth requires a < 0");
  if (!(d > 0.0)) throw AssumptionError("quadratic growth requires d > 0");
  GrowthSpec g;
  g.kind_ = Kind::quadratic;
  g.a_ = a;
  g.b_ = b;
  g.c_ = c;
  g.d_ = d;
  return g;
}

GrowthSpec GrowthSpec::tabulated(Table1D base, double d) {
  check_table(base, "tabulated growth");
  if (!std::isfinite(d)) throw AssumptionError("tabulated growth: non-finite pressure slope");
  GrowthSpec g;
  g.kind_ = Kind::tabulated;
  g.d_ = d;
  g.table_ = std::move(base);
  return g;
}

double GrowthSpec::base(double x) const {
  if (kind_ == Kind::quadratic) return (a_ * x + b_) * x + c_;
  return table_(x);
}

WeightSpec WeightSpec::constant(double value) {
  if (!std::isfinite(value)) throw AssumptionError("psi: non-finite weight");
  WeightSpec w;
  w.value_ = value;
  return w;
}

WeightSpec WeightSpec::tabulated(Table1D values) {
  check_table(values, "psi");
  WeightSpec w;
  w.table_ = std::move(values);
  return w;
}

PatchModel::PatchModel(double half_width, double epsilon, std::vector<GrowthSpec> growth,
                       std::vector<WeightSpec> psi, Eigen::MatrixXd migration)
    : half_width_(half_width),
      epsilon_(epsilon),
      growth_(std::move(growth)),
      psi_(std::move(psi)),
      migration_(std::move(migration)) {
  const auto k = growth_.size();
  if (k == 0) throw DimensionError("model needs at least one patch");
  if (psi_.size() != k) throw DimensionError("psi count does not match patch count");
  if (static_cast<std::size_t>(migration_.rows()) != k ||
      static_cast<std::size_t>(migration_.cols()) != k) {
    throw DimensionError("migration matrix must be K x K");
  }
  if (!(half_width_ > 0.0) || !std::isfinite(half_width_)) {
    throw AssumptionError("domain half-width L must be positive");
  }
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
    throw AssumptionError("mutation scale epsilon must be positive");
  }
  for (Eigen::Index i = 0; i < migration_.rows(); ++i) {
    for (Eigen::Index j = 0; j < migration_.cols(); ++j) {
      const double v = migration_(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << "migration rate (" << i + 1 << "," << j + 1 << ") must be finite and >= 0";
        throw AssumptionError(os.str());
      }
    }
  }
}

const GrowthSpec& PatchModel::growth_spec(std::size_t i) const {
  if (i >= growth_.size()) throw DimensionError("patch index out of range");
  return growth_[i];
}

const WeightSpec& PatchModel::weight_spec(std::size_t i) const {
  if (i >= psi_.size()) throw DimensionError("patch index out of range");
  return psi_[i];
}

double PatchModel::growth(std::size_t i, double x, double pressure) const {
  return growth_spec(i)(x, pressure);
}

double PatchModel::psi(std::size_t i, double x) const { return weight_spec(i)(x); }

bool PatchModel::strongly_connected() const {
  const auto k = static_cast<Eigen::Index>(patches());
  if (k == 1) return true;
  // Reachability from patch 0 along edges j -> i (nu(i,j) > 0) and along the reverse edges.
  auto reach_all = [&](bool reverse) {
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto from = stack.back();
      stack.pop_back();
      for (Eigen::Index to = 0; to < k; ++to) {
        if (to == from || seen[static_cast<std::size_t>(to)]) continue;
        const double rate = reverse ? migration_(from, to) : migration_(to, from);
        if (rate > 0.0) {
          seen[static_cast<std::size_t>(to)] = 1;
          stack.push_back(to);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
  };
  return reach_all(false) && reach_all(true);
}

PatchModel PatchModel::with_epsilon(double epsilon) const {
  return PatchModel(half_width_, epsilon, growth_, psi_, migration_);
}

PatchModel PatchModel::with_migration_scale(double factor) const {
  return PatchModel(half_width_, epsilon_, growth_, psi_, migration_ * factor);
}

Eigen::MatrixXd conservative_diagonal(const Eigen::MatrixXd& migration) {
  Eigen::MatrixXd out = migration;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double outflow = 0.0;
    for (Eigen::Index j = 0; j < out.rows(); ++j) {
      if (j != i) outflow += migration(j, i);
    }
    out(i, i) = outflow;
  }
  return out;
}

PatchModel mirror_model(double r0, double shift, double nu, double epsilon, double half_width) {
  // r0 - (x + s)^2 = -x^2 - 2 s x + (r0 - s^2)
  std::vector<GrowthSpec> growth{
      GrowthSpec::quadratic(-1.0, -2.0 * shift, r0 - shift * shift, 1.0),
      GrowthSpec::quadratic(-1.0, 2.0 * shift, r0 - shift * shift, 1.0)};
  std::vector<WeightSpec> psi{WeightSpec::constant(1.0), WeightSpec::constant(1.0)};
  Eigen::MatrixXd migration(2, 2);
  migration << nu, nu, nu, nu;
  return PatchModel(half_width, epsilon, std::move(growth), std::move(psi), migration);
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& id, std::size_t patch) const {
  for (const auto& c : checks) {
    if (c.id == id && c.patch == patch) return &c;
  }
  return nullptr;
}

ValidationReport validate_assumptions(const PatchModel& model, double pressure_min,
                                      double pressure_max, std::size_t sample_count) {
  if (!(pressure_min < pressure_max)) throw AssumptionError("validate_assumptions: need I_m < I_M");
  if (sample_count < 2) throw AssumptionError("validate_assumptions: need >= 2 samples");

  const double L = model.half_width();
  const auto K = model.patches();
  std::vector<double> xs(sample_count);
  for (std::size_t s = 0; s < sample_count; ++s) {
    xs[s] = -L + 2.0 * L * static_cast<double>(s) / static_cast<double>(sample_count - 1);
  }
  const Eigen::MatrixXd& nu = model.migration();

  ValidationReport report;
  for (std::size_t i = 0; i < K; ++i) {
    const auto& g = model.growth_spec(i);
    const auto ii = static_cast<Eigen::Index>(i);

    // Pressures at which the sign conditions are probed: I and (nu^j / nu^i) I.
    auto probe_pressures = [&](double level) {
      std::vector<double> out{level};
      if (nu(ii, ii) > 0.0) {
        for (std::size_t j = 0; j < K; ++j) {
          if (j != i) out.push_back(nu(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) /
                                    nu(ii, ii) * level);
        }
      }
      return out;
    };

    {
      AssumptionCheck lower{"sign.lower", i, false, 0.0, std::numeric_limits<double>::infinity(), ""};
      for (double p : probe_pressures(pressure_min)) {
        for (double x : xs) {
          const double r = g(x, p);
          if (r < lower.value) {
            lower.value = r;
            lower.witness_x = x;
          }
        }
      }
      lower.passed = lower.value > 0.0;
      lower.detail = "min R over samples at I_m (delta = this value when positive)";
      report.checks.push_back(lower);
    }
    {
      AssumptionCheck upper{"sign.upper", i, false, 0.0, -std::numeric_limits<double>::infinity(), ""};
      for (double p : probe_pressures(pressure_max)) {
        for (double x : xs) {
          const double r = g(x, p);
          if (r > upper.value) {
            upper.value = r;
            upper.witness_x = x;
          }
        }
      }
      upper.passed = upper.value < 0.0;
      upper.detail = "max R over samples at I_M (must be <= -delta < 0)";
      report.checks.push_back(upper);
    }
    {
      const double d = g.pressure_slope();
      AssumptionCheck mono{"pressure.monotone", i, d > 0.0, xs.front(), -d, ""};
      std::ostringstream os;
      if (d > 0.0) {
        os << "dR/dI = " << -d << ", C = " << std::max(d, 1.0 / d);
      } else {
        os << "dR/dI = " << -d << " is not bounded away from zero from below";
      }
      mono.detail = os.str();
      report.checks.push_back(mono);
    }
    {
      AssumptionCheck curv{"curvature", i, true, 0.0, 0.0, ""};
      if (g.kind() == GrowthSpec::Kind::quadratic) {
        curv.value = 2.0 * g.a();
      } else {
        const double h = xs[1] - xs[0];
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t s = 1; s + 1 < xs.size(); ++s) {
          const double second = (g.base(xs[s - 1]) - 2.0 * g.base(xs[s]) + g.base(xs[s + 1])) / (h * h);
          if (second < lowest) {
            lowest = second;
            curv.witness_x = xs[s];
          }
        }
        curv.value = xs.size() > 2 ? lowest : 0.0;
      }
      curv.passed = std::isfinite(curv.value);
      std::ostringstream os;
      os << "min R_xx = " << curv.value << ", D = " << std::max(0.0, -curv.value);
      curv.detail = os.str();
      report.checks.push_back(curv);
    }
    {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      double at = xs.front();
      for (double x : xs) {
        const double w = model.psi(i, x);
        if (w < lo) {
          lo = w;
          at = x;
        }
        hi = std::max(hi, w);
      }
      std::ostringstream os;
      os << "a_m = " << lo << ", a_M = " << hi;
      report.checks.push_back({"psi.bounds", i, lo > 0.0 && std::isfinite(hi), at, lo, os.str()});
    }
    {
      // Neumann compatibility of psi at the endpoints (one-sided differences).
      const auto& w = model.weight_spec(i);
      double slope = 0.0;
      double at = -L;
      if (!w.is_constant()) {
        const double h = 1e-6 * L;
        const double left = (w(-L + h) - w(-L)) / h;
        const double right = (w(L) - w(L - h)) / h;
        slope = std::abs(left) >= std::abs(right) ? left : right;
        at = std::abs(left) >= std::abs(right) ? -L : L;
      }
      report.checks.push_back({"psi.neumann", i, std::abs(slope) <= 1e-8, at, slope,
                               "endpoint derivative of psi"});
    }
    {
      double bound = 0.0;
      double at = xs.front();
      for (double p : {0.0, pressure_min, pressure_max}) {
        for (double x : xs) {
          const double r = std::abs(g(x, p));
          if (r > bound) {
            bound = r;
            at = x;
          }
        }
      }
      report.checks.push_back({"growth.bounded", i, std::isfinite(bound), at, bound,
                               "C = max |R| over samples for I in [0, I_M]"});
    }
  }
  return report;
}

}  // namespace migdirac
