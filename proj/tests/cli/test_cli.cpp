#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = MIGDIRAC_CONFIG_DIR;
const fs::path kFixtures = MIGDIRAC_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("migdirac_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

// Runs the CLI binary and returns its exit status.
int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MIGDIRAC_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

nlohmann::json manifest(const fs::path& out) { return nlohmann::json::parse(slurp(out / "manifest.json")); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("missing config file exits 2 and still writes a manifest") {
  const fs::path out = scratch("missing");
  CHECK(run("--config " + q(kFixtures / "nope.ini") + " --out " + q(out) + " simulate") == 2);
  const auto m = manifest(out);
  CHECK(m["exit_code"] == 2);
  CHECK(m["command"] == "simulate");
}

TEST_CASE("command-line errors exit 2") {
  CHECK(run("simulate") == 2);
  CHECK(run("--config x.ini") == 2);
  CHECK(run("--config x.ini asymptotic --mode sideways") == 2);
}

TEST_CASE("symmetric mode on an asymmetric config exits 2") {
  const fs::path out = scratch("lopsided");
  CHECK(run("--config " + q(kFixtures / "lopsided.ini") + " --out " + q(out) + " asymptotic --mode symmetric") == 2);
  CHECK(manifest(out)["status"] == "symmetry check failed");
}

TEST_CASE("asymptotic on the dimorphic config") {
  const fs::path out = scratch("asy_dim");
  REQUIRE(run("--config " + q(kConfigs / "dimorphic.ini") + " --out " + q(out) + " asymptotic") == 0);
  CHECK(first_line(out / "solution.csv") == "x_j,s_j,rho_1,rho_2");
  CHECK(first_line(out / "summary.csv") == "I_1,I_2,maxH_residual,norm_residual");
  CHECK(first_line(out / "landscape.csv") == "x,H,F,G");
  CHECK(first_line(out / "constraints.csv") == "name,value,tolerance,passed");

  std::ifstream in(out / "summary.csv");
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(std::stod(row.substr(0, row.find(','))) == doctest::Approx(2.25).epsilon(1e-9));

  const auto m = manifest(out);
  CHECK(m["exit_code"] == 0);
  CHECK(m["status"] == "ok");
  CHECK(m["outputs"].size() >= 4);
  CHECK(m["config"].get<std::string>().find("[migration]") != std::string::npos);
}

TEST_CASE("asymptotic general mode on the chain converges") {
  const fs::path out = scratch("asy_chain");
  CHECK(run("--config " + q(kConfigs / "chain3.ini") + " --out " + q(out) + " asymptotic --mode general --I0 1,1,1") == 0);
  CHECK(first_line(out / "solution.csv") == "x_j,s_j,rho_1,rho_2,rho_3");
  CHECK(first_line(out / "landscape.csv") == "x,H");
  CHECK(run("--config " + q(kConfigs / "chain3.ini") + " --out " + q(out) + " asymptotic --mode general --I0 1,1") == 2);
}

TEST_CASE("asymptotic outputs are byte-identical across runs") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  REQUIRE(run("--config " + q(kConfigs / "chain3.ini") + " --out " + q(a) + " asymptotic --mode general") == 0);
  REQUIRE(run("--config " + q(kConfigs / "chain3.ini") + " --out " + q(b) + " asymptotic --mode general") == 0);
  for (const char* f : {"solution.csv", "summary.csv", "landscape.csv", "constraints.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("simulate writes the time series and checkpoint profiles") {
  const fs::path out = scratch("sim");
  REQUIRE(run("--config " + q(kFixtures / "small_dimorphic.ini") + " --out " + q(out) +
              " simulate --tau-end 20 --checkpoints 5,10") == 0);
  CHECK(first_line(out / "time_series.csv") == "tau,I_1,I_2");
  CHECK(first_line(out / "profile_final.csv") == "x,n_1,n_2");
  CHECK(fs::exists(out / "profile_tau_5.csv"));
  CHECK(fs::exists(out / "profile_tau_10.csv"));
  CHECK(fs::exists(out / "landscape_final.csv"));
  CHECK(manifest(out)["exit_code"] == 0);

  const fs::path again = scratch("sim_again");
  REQUIRE(run("--config " + q(kFixtures / "small_dimorphic.ini") + " --out " + q(again) +
              " simulate --tau-end 20 --checkpoints 5,10") == 0);
  CHECK(slurp(out / "time_series.csv") == slurp(again / "time_series.csv"));
  CHECK(slurp(out / "profile_final.csv") == slurp(again / "profile_final.csv"));
}

TEST_CASE("verify passes at default tolerances and fails when they are too tight") {
  const fs::path ok = scratch("verify_ok");
  CHECK(run("--config " + q(kFixtures / "small_dimorphic.ini") + " --out " + q(ok) + " verify") == 0);
  CHECK(slurp(ok / "report.txt").find("PASS") != std::string::npos);
  CHECK(first_line(ok / "comparison.csv") == "patch,x_expected,mass_expected,x_found,mass_found,dx,dm,passed");
  CHECK(first_line(ok / "atoms.csv") == "patch,x,mass,basin_lo,basin_hi");

  const fs::path tight = scratch("verify_tight");
  CHECK(run("--config " + q(kFixtures / "small_dimorphic.ini") + " --out " + q(tight) + " verify --tol-pos 1e-6") == 1);
  CHECK(manifest(tight)["exit_code"] == 1);
}

TEST_CASE("sweep rows do not depend on the worker count") {
  const fs::path one = scratch("sweep1");
  const fs::path many = scratch("sweep4");
  const std::string values = " sweep --values 0.5,1.0,1.5,1.9,2.1,2.5,3.0";
  REQUIRE(run("--config " + q(kConfigs / "dimorphic.ini") + " --out " + q(one) + values + " --workers 1") == 0);
  REQUIRE(run("--config " + q(kConfigs / "dimorphic.ini") + " --out " + q(many) + values + " --workers 4") == 0);
  CHECK(slurp(one / "sweep.csv") == slurp(many / "sweep.csv"));
  CHECK(slurp(one / "transitions.csv") == slurp(many / "transitions.csv"));

  std::ifstream in(one / "sweep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "nu,n_atoms,I,x_left,x_right");
  std::vector<int> atoms;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    atoms.push_back(std::stoi(line.substr(a + 1, line.find(',', a + 1) - a - 1)));
  }
  CHECK(atoms == std::vector<int>{2, 2, 2, 2, 1, 1, 1});

  std::ifstream t(one / "transitions.csv");
  std::getline(t, line);
  CHECK(line == "nu_lo,nu_hi,n_atoms_lo,n_atoms_hi");
  REQUIRE(std::getline(t, line));
  const double lo = std::stod(line.substr(0, line.find(',')));
  CHECK(lo > 1.95);
  CHECK(lo < 2.0);

  CHECK(run("--config " + q(kConfigs / "dimorphic.ini") + " --out " + q(scratch("sweep_bad")) +
            " sweep --values 1,-1") == 2);
}

TEST_CASE("worker count can come from the environment") {
  const fs::path env = scratch("sweep_env");
  REQUIRE(setenv("MIGDIRAC_WORKERS", "2", 1) == 0);
  CHECK(run("--config " + q(kConfigs / "dimorphic.ini") + " --out " + q(env) + " sweep --values 1,3") == 0);
  unsetenv("MIGDIRAC_WORKERS");
  const auto notes = manifest(env)["notes"];
  bool saw = false;
  for (const auto& n : notes) saw = saw || n.get<std::string>().find("workers: 2") != std::string::npos;
  CHECK(saw);
}
