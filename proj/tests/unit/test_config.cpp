#include <doctest.h>

#include <string>

#include "migdirac/config.hpp"
#include "migdirac/errors.hpp"

using namespace migdirac;

namespace {

std::string two_patch(double nu) {
  return "[model]\nK = 2\nL = 2\nepsilon = 0.001\n"
         "[patch.1]\ngrowth.kind = quadratic\na = -1\nb = -2\nc = 2\nd = 1\npsi = 1\n"
         "[patch.2]\ngrowth.kind = quadratic\na = -1\nb = 2\nc = 2\nd = 1\npsi = 1\n"
         "[migration]\nrow1 = * " + std::to_string(nu) + "\nrow2 = " + std::to_string(nu) + " *\n";
}

std::string missing_key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST_CASE("two-patch configs reproduce the mirror reference models") {
  for (double nu : {2.5, 1.0}) {
    const PatchModel built = build_model(two_patch(nu));
    const PatchModel ref = mirror_model(3.0, 1.0, nu, 1e-3, 2.0);
    CHECK(built.patches() == 2);
    CHECK(built.migration().isApprox(ref.migration()));
    for (double x = -2.0; x <= 2.0; x += 0.125) {
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(built.growth(i, x, 1.3) == doctest::Approx(ref.growth(i, x, 1.3)).epsilon(1e-14));
        CHECK(built.psi(i, x) == 1.0);
      }
    }
  }
}

TEST_CASE("single patch gets a zero 1x1 migration matrix") {
  const PatchModel m = build_model("[model]\nK = 1\nL = 1\nepsilon = 0.01\n[patch.1]\na = -2\nb = 0\nc = 1\nd = 1\n");
  REQUIRE(m.migration().rows() == 1);
  CHECK(m.migration()(0, 0) == 0.0);
}

TEST_CASE("conservation default fills starred diagonals; explicit ones are kept") {
  const PatchModel m = build_model(
      "[model]\nK = 3\nL = 2\nepsilon = 0.001\n"
      "[patch.1]\na = -1\nb = 0\nc = 1\nd = 1\n[patch.2]\na = -1\nb = 0\nc = 1\nd = 1\n"
      "[patch.3]\na = -1\nb = 0\nc = 1\nd = 1\n"
      "[migration]\nrow1 = * 1 0\nrow2 = 2, 7, 3\nrow3 = 0 4 *\n");
  CHECK(m.migration()(0, 0) == 2.0);
  CHECK(m.migration()(1, 1) == 7.0);
  CHECK(m.migration()(2, 2) == 3.0);
}

TEST_CASE("nonconservative matrices must spell out the diagonal") {
  std::string text = two_patch(1.0);
  text.replace(text.find("[migration]\n"), 12, "[migration]\nnonconservative = true\n");
  CHECK(missing_key_of(text) == "migration.row1");
}

TEST_CASE("parse errors name the offending key") {
  std::string text = two_patch(1.0);
  text.replace(text.find("c = 2"), 5, "c = two");
  CHECK(missing_key_of(text) == "patch.1.c");

  CHECK(missing_key_of("[model]\nK = 2\nL = 2\n") == "model.epsilon");
  CHECK(missing_key_of("[model]\nK = 1\nL = 2\nepsilon = 0.1\n") == "patch.1");
  CHECK(missing_key_of("[model]\nK = 1\nL = 2\nepsilon = 0.1\n[patch.1]\ngrowth.kind = cubic\nd = 1\n") ==
        "patch.1.growth.kind");
  std::string short_row = two_patch(1.0);
  short_row.replace(short_row.find("row2 = "), 7, "row2 = 1 1 ");
  CHECK(missing_key_of(short_row) == "migration.row2");
}

TEST_CASE("invalid quadratic coefficients are assumption errors") {
  std::string text = two_patch(1.0);
  text.replace(text.find("a = -1"), 6, "a = 0.5");
  CHECK_THROWS_AS(parse_config(text), AssumptionError);
  std::string zero_d = two_patch(1.0);
  zero_d.replace(zero_d.find("d = 1"), 5, "d = 0");
  CHECK_THROWS_AS(parse_config(zero_d), AssumptionError);
}

TEST_CASE("unknown keys and sections are warnings") {
  const ParsedConfig c = parse_config(two_patch(1.0) + "colour = blue\n[extras]\nfoo = 1\n");
  REQUIRE(c.warnings.size() == 2);
  CHECK(c.warnings[0].find("extras") != std::string::npos);
  CHECK(c.warnings[1].find("colour") != std::string::npos);
}

TEST_CASE("simulation defaults and overrides") {
  const ParsedConfig d = parse_config(two_patch(1.0));
  CHECK(d.grid_points == 801);
  CHECK(d.run.dt == 1e-3);
  CHECK(d.run.tau_end == 5000.0);
  CHECK(d.run.steady_tol == 1e-8);
  REQUIRE(d.init.size() == 2);
  CHECK(d.init[0].mass == 1.0);

  const ParsedConfig o = parse_config(two_patch(1.0) +
                                      "[sim]\ngrid_points = 201\ndt = 0.002\ntau_end = 10\ncheckpoints = 1, 5\n"
                                      "[init.2]\ncenter = 0.3\nmass = 2\nwidth = 0.1\n");
  CHECK(o.grid_points == 201);
  CHECK(o.run.dt == 0.002);
  CHECK(o.run.checkpoints == std::vector<double>{1.0, 5.0});
  CHECK(o.init[1].center == 0.3);
  CHECK(o.init[1].mass == 2.0);
  CHECK(missing_key_of(two_patch(1.0) + "[init.1]\ncenter = 3\n") == "init.1.center");
}

TEST_CASE("canonical text round-trips exactly and building is pure") {
  const ParsedConfig a = parse_config(two_patch(1.0) + "[sim]\ndt = 0.0007\ncheckpoints = 0.1 2.5\n");
  const std::string text = to_config_text(a);
  const ParsedConfig b = parse_config(text);
  CHECK(to_config_text(b) == text);
  CHECK(b.model.migration() == a.model.migration());
  CHECK(b.run.dt == a.run.dt);
  for (double x = -2.0; x <= 2.0; x += 0.01) {
    CHECK(b.model.growth(1, x, 0.7) == a.model.growth(1, x, 0.7));
  }

  const std::string tab =
      "[model]\nK = 1\nL = 1\nepsilon = 0.01\n"
      "[patch.1]\ngrowth.kind = tabulated\ntable.x = -1 0 1\ntable.y = 0 1 0.1\nd = 2\npsi.x = -1 1\npsi.y = 1 1\n";
  const ParsedConfig t = parse_config(tab);
  CHECK(t.model.growth(0, 0.5, 0.0) == doctest::Approx(0.55));
  CHECK(to_config_text(parse_config(to_config_text(t))) == to_config_text(t));
}
