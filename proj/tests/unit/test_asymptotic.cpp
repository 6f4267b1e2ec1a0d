#include <doctest.h>

#include <cmath>

#include "migdirac/asymptotic.hpp"
#include "migdirac/errors.hpp"
#include "migdirac/model.hpp"
#include "oracle.hpp"

using namespace migdirac;

namespace {

PatchModel mirror(double nu) { return mirror_model(3.0, 1.0, nu, 1e-3, 2.0); }

Eigen::VectorXd pair(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

PatchModel chain() {
  Eigen::MatrixXd nu(3, 3);
  nu << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  return PatchModel(2.0, 1e-3,
                    {GrowthSpec::quadratic(-1, -2, 2, 1), GrowthSpec::quadratic(-1, 0, 3, 1),
                     GrowthSpec::quadratic(-1, 2, 2, 1)},
                    std::vector<WeightSpec>(3, WeightSpec::constant(1.0)), conservative_diagonal(nu));
}

PatchModel single(double a, double b, double c) {
  return PatchModel(2.0, 1e-3, {GrowthSpec::quadratic(a, b, c, 1.0)}, {WeightSpec::constant(1.0)},
                    Eigen::MatrixXd::Zero(1, 1));
}

void check_against_oracle(const AsymptoticSolution& sol, double nu, double tol_I, double tol_x) {
  const oracle::MirrorLimit lim = oracle::mirror_limit(3.0, nu);
  CAPTURE(nu);
  REQUIRE(sol.converged);
  CHECK(std::abs(sol.pressure[0] - lim.pressure) <= tol_I);
  CHECK(std::abs(sol.pressure[1] - lim.pressure) <= tol_I);
  REQUIRE(sol.points.size() == lim.points.size());
  for (std::size_t j = 0; j < lim.points.size(); ++j) {
    CHECK(std::abs(sol.points[j] - lim.points[j]) <= tol_x);
    CHECK(sol.weights(0, static_cast<Eigen::Index>(j)) == doctest::Approx(lim.rho1[j]).epsilon(1e-6));
    // Patch 2 is the mirror image of patch 1.
    CHECK(sol.weights(1, static_cast<Eigen::Index>(j)) ==
          doctest::Approx(lim.rho1[lim.points.size() - 1 - j]).epsilon(1e-6));
  }
}

}  // namespace

TEST_CASE("support points of the reference landscapes") {
  const auto d = support_points(landscape(mirror(1.0), pair(2.25, 2.25), 801), 1e-6);
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(-0.8660254).epsilon(1e-7));
  CHECK(d[1] == doctest::Approx(0.8660254).epsilon(1e-7));
  const auto m = support_points(landscape(mirror(2.5), pair(2.0, 2.0), 801), 1e-6);
  REQUIRE(m.size() == 1);
  CHECK(std::abs(m[0]) < 1e-6);
  const auto s = support_points(landscape(single(-1, 0, 3), Eigen::VectorXd::Constant(1, 3.0), 801), 1e-6);
  REQUIRE(s.size() == 1);
  CHECK(std::abs(s[0]) < 1e-6);
  CHECK_THROWS_AS(support_points(FitnessLandscape{}, 1e-6), DimensionError);
}

TEST_CASE("Dirac weights at the reference points") {
  const double xs = std::sqrt(0.75);
  const DiracWeights d = dirac_weights(mirror(1.0), pair(2.25, 2.25), {-xs, xs});
  CHECK(d.weights(0, 0) == doctest::Approx(1.77452).epsilon(1e-5));
  CHECK(d.weights(0, 1) == doctest::Approx(0.47548).epsilon(1e-5));
  CHECK(d.weights(1, 0) == doctest::Approx(0.47548).epsilon(1e-5));
  CHECK(d.weights(1, 1) == doctest::Approx(1.77452).epsilon(1e-5));
  CHECK(d.weights(0, 0) / d.weights(0, 1) == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-10));

  const DiracWeights m = dirac_weights(mirror(2.5), pair(2.0, 2.0), {0.0});
  CHECK(m.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.weights(1, 0) == doctest::Approx(2.0).epsilon(1e-12));

  const DiracWeights s = dirac_weights(single(-1, 0, 3), Eigen::VectorXd::Constant(1, 3.0), {0.0});
  CHECK(s.weights(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.scales[0] == doctest::Approx(3.0).epsilon(1e-12));

  // A point where H is far from zero is not an admissible support point.
  CHECK_THROWS(dirac_weights(mirror(1.0), pair(2.25, 2.25), {0.0}));
}

TEST_CASE("symmetric solver reproduces the oracle") {
  const AsymptoticSolution d = solve_symmetric(mirror(1.0), {0.5, 5.0});
  check_against_oracle(d, 1.0, 1e-8, 1e-6);
  CHECK(d.weights(0, 0) == doctest::Approx(1.77452).epsilon(1e-4));
  CHECK(d.weights(0, 1) == doctest::Approx(0.47548).epsilon(1e-4));
  CHECK(d.residuals.max_H < 1e-10);

  const AsymptoticSolution m = solve_symmetric(mirror(2.5), {0.5, 5.0});
  check_against_oracle(m, 2.5, 1e-8, 1e-6);

  for (int k = 0; k < 20; ++k) {
    const double nu = 0.15 + 0.2 * k;
    check_against_oracle(solve_symmetric(mirror(nu), {0.5, 5.0}), nu, 1e-6, 1e-6);
  }
}

TEST_CASE("symmetric solver preconditions") {
  const PatchModel lopsided(2.0, 1e-3, {GrowthSpec::quadratic(-1, -2, 2, 1), GrowthSpec::quadratic(-1, 1, 2, 1)},
                            {WeightSpec::constant(1), WeightSpec::constant(1)},
                            (Eigen::MatrixXd(2, 2) << 1, 1, 1, 1).finished());
  CHECK_THROWS_AS(solve_symmetric(lopsided, {0.5, 5.0}), SymmetryError);
  CHECK_THROWS_AS(solve_symmetric(mirror(1.0), {2.5, 5.0}), BracketError);
  CHECK_THROWS_AS(solve_symmetric(mirror(1.0), {0.5, 1.0}), BracketError);
}

TEST_CASE("general solver agrees with the symmetric solver") {
  for (double nu : {0.4, 1.0, 1.7, 2.5, 3.5}) {
    const AsymptoticSolution s = solve_symmetric(mirror(nu), {0.5, 5.0});
    const AsymptoticSolution g = solve_general(mirror(nu), pair(1.0, 1.0));
    CAPTURE(nu);
    REQUIRE(g.converged);
    CHECK(std::abs(g.pressure[0] - s.pressure[0]) <= 1e-6);
    CHECK(std::abs(g.pressure[1] - s.pressure[1]) <= 1e-6);
    REQUIRE(g.points.size() == s.points.size());
    for (std::size_t j = 0; j < s.points.size(); ++j) CHECK(std::abs(g.points[j] - s.points[j]) <= 1e-5);
    CHECK(g.points.size() <= 2);
  }
}

TEST_CASE("general solver on the three-patch chain") {
  Eigen::VectorXd I0 = Eigen::VectorXd::Ones(3);
  const AsymptoticSolution sol = solve_general(chain(), I0);
  REQUIRE(sol.converged);
  CHECK(sol.residual_vector.cwiseAbs().maxCoeff() < 1e-6);
  const ConstraintReport r = verify_solution(chain(), sol, 1e-8);
  for (const auto& c : r.checks) {
    CAPTURE(c.name);
    CAPTURE(c.value);
    CHECK(c.passed);
  }
  CHECK(sol.weights.minCoeff() > 0.0);
}

TEST_CASE("general solver on a single patch") {
  const AsymptoticSolution sol = solve_general(single(-1, 0, 3), Eigen::VectorXd::Constant(1, 1.0));
  REQUIRE(sol.converged);
  CHECK(sol.pressure[0] == doctest::Approx(3.0).epsilon(1e-8));
  REQUIRE(sol.points.size() == 1);
  CHECK(std::abs(sol.points[0]) < 1e-6);
  CHECK(sol.weights(0, 0) == doctest::Approx(3.0).epsilon(1e-8));

  const AsymptoticSolution off = solve_general(single(-1, 1, 1.75), Eigen::VectorXd::Constant(1, 0.5));
  REQUIRE(off.converged);
  CHECK(off.pressure[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(off.points[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("general solver rejects nonpositive initial pressures") {
  CHECK_THROWS(solve_general(mirror(1.0), pair(0.0, 1.0)));
  CHECK_THROWS(solve_general(mirror(1.0), Eigen::VectorXd::Ones(3)));
}

TEST_CASE("identical decoupled patches with a flat optimum are degenerate") {
  const GrowthSpec plateau = GrowthSpec::tabulated(Table1D{{-2.0, -0.5, 0.5, 2.0}, {-1.0, 1.0, 1.0, -1.0}}, 1.0);
  const PatchModel m(2.0, 1e-3, {plateau}, {WeightSpec::constant(1.0)}, Eigen::MatrixXd::Zero(1, 1));
  const AsymptoticSolution sol = solve_general(m, Eigen::VectorXd::Constant(1, 0.5));
  CHECK((sol.degenerate || !sol.converged));
}

TEST_CASE("constraint suite on converged solutions") {
  for (double nu : {0.5, 1.0, 2.5}) {
    const AsymptoticSolution sol = solve_symmetric(mirror(nu), {0.5, 5.0});
    const ConstraintReport r = verify_solution(mirror(nu), sol, 1e-8);
    CAPTURE(nu);
    CHECK(r.all_passed());
    REQUIRE(r.find("max_H_zero") != nullptr);
    REQUIRE(r.find("min_G_zero") != nullptr);
    REQUIRE(r.find("normalization[1]") != nullptr);
    REQUIRE(r.find("balance[1]") != nullptr);
    REQUIRE(r.find("rho_ratio_form1[1]") != nullptr);
    REQUIRE(r.find("rho_ratio_form2[1]") != nullptr);
    CHECK(sol.residuals.normalization < 1e-8);
    CHECK(sol.residuals.rho_consistency < 1e-8);
    for (Eigen::Index j = 0; j < sol.weights.cols(); ++j) {
      const Eigen::VectorXd rho = sol.weights.col(j);
      const FitnessMatrix A = fitness_matrix(mirror(nu), sol.points[static_cast<std::size_t>(j)], sol.pressure);
      CHECK((A.A * rho).cwiseAbs().maxCoeff() <= 1e-8 * rho.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("constraint suite negative controls") {
  const AsymptoticSolution good = solve_symmetric(mirror(1.0), {0.5, 5.0});

  AsymptoticSolution shifted = good;
  shifted.pressure.array() += 0.1;
  const ConstraintReport a = verify_solution(mirror(1.0), shifted, 1e-6);
  CHECK_FALSE(a.find("support_H_zero[1]")->passed);
  CHECK_FALSE(a.find("support_H_zero[2]")->passed);
  CHECK_FALSE(a.find("max_H_zero")->passed);

  AsymptoticSolution swapped = good;
  swapped.weights.row(0).swap(swapped.weights.row(1));
  const ConstraintReport b = verify_solution(mirror(1.0), swapped, 1e-6);
  CHECK_FALSE(b.find("rho_ratio_form1[1]")->passed);
  CHECK_FALSE(b.find("rho_ratio_form2[1]")->passed);
  CHECK(b.find("support_H_zero[1]")->passed);
  CHECK_FALSE(b.all_passed());
}

TEST_CASE("raising every pressure lowers max H") {
  for (double nu : {0.5, 2.5}) {
    double last = 1e300;
    for (double I = 0.5; I <= 5.0; I += 0.25) {
      const double h = landscape(mirror(nu), pair(I, I), 401).max_value;
      CHECK(h < last);
      last = h;
    }
  }
}

TEST_CASE("residual block is recomputed consistently") {
  const AsymptoticSolution sol = solve_symmetric(mirror(1.0), {0.5, 5.0});
  const SolutionResiduals r = solution_residuals(mirror(1.0), sol);
  CHECK(r.max_H == doctest::Approx(sol.residuals.max_H).scale(1.0));
  CHECK(r.normalization == doctest::Approx(sol.residuals.normalization).scale(1.0));
}
