#include "migdirac_cli/commands.hpp"

#include <fmt/format.h>

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "migdirac/config.hpp"
#include "migdirac/errors.hpp"
#include "migdirac_cli/output.hpp"

namespace migdirac::cli {

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Owns the manifest of one command and writes it on every exit path.
class Session {
 public:
  Session(std::string command, fs::path out, std::ostream& log)
      : out_(std::move(out)), log_(log), start_(Clock::now()) {
    manifest_.command = std::move(command);
  }

  std::ostream& log() { return log_; }
  RunManifest& manifest() { return manifest_; }

  bool prepare_output() {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) {
      log_ << "error: cannot create output directory " << out_ << ": " << ec.message() << '\n';
      return false;
    }
    return true;
  }

  void write(const std::string& name, const std::string& content) {
    write_atomically(out_ / name, content);
    manifest_.outputs.push_back(name);
  }

  int finish(int code, std::string status) {
    manifest_.exit_code = code;
    manifest_.status = std::move(status);
    manifest_.wall_seconds = seconds_since(start_);
    if (code != exit_ok) log_ << manifest_.command << ": " << manifest_.status << '\n';
    std::error_code ec;
    if (fs::is_directory(out_, ec)) {
      try {
        write_atomically(out_ / "manifest.json", manifest_.to_json());
      } catch (const std::exception& e) {
        log_ << "warning: manifest not written: " << e.what() << '\n';
      }
    }
    return code;
  }

 private:
  fs::path out_;
  std::ostream& log_;
  Clock::time_point start_;
  RunManifest manifest_;
};

std::optional<ParsedConfig> read_config(Session& s, const fs::path& path) {
  try {
    ParsedConfig cfg = load_config(path);
    for (const auto& w : cfg.warnings) {
      s.log() << "warning: " << w << '\n';
      s.manifest().notes.push_back("warning: " + w);
    }
    s.manifest().config_text = to_config_text(cfg);
    return cfg;
  } catch (const Error& e) {
    s.log() << "error: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return std::nullopt;
  }
}

std::string pressure_text(const Eigen::VectorXd& I) {
  std::string out;
  for (Eigen::Index i = 0; i < I.size(); ++i) out += (i ? " " : "") + num(I(i));
  return out;
}

SimulationResult simulate(const ParsedConfig& cfg, RunOptions run) {
  const GridSpec grid = GridSpec::make(cfg.model.half_width(), cfg.grid_points);
  DensityState state = init_state(cfg.model, grid, cfg.init);
  return run_to_steady(cfg.model, std::move(state), run);
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["status"] = status;
  j["exit_code"] = exit_code;
  j["wall_seconds"] = wall_seconds;
  j["outputs"] = outputs;
  j["notes"] = notes;
  j["versions"] = {{"migdirac", kVersion},
                   {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                         EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  j["config"] = config_text;
  return j.dump(2) + "\n";
}

std::pair<double, double> default_bracket(const PatchModel& model) {
  const double L = model.half_width();
  const auto& nu = model.migration();
  constexpr int samples = 4001;
  double hi = 1.0;
  for (std::size_t i = 0; i < model.patches(); ++i) {
    const auto& g = model.growth_spec(i);
    if (!(g.pressure_slope() > 0.0)) throw AssumptionError("pressure slope d must be positive");
    double sup = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) sup = std::max(sup, g.base(-L + 2.0 * L * s / (samples - 1)));
    if (g.kind() == GrowthSpec::Kind::quadratic) {
      const double vertex = -g.b() / (2.0 * g.a());
      if (std::abs(vertex) <= L) sup = std::max(sup, g.base(vertex));
    }
    const auto ii = static_cast<Eigen::Index>(i);
    const double inflow = nu.row(ii).sum() - nu(ii, ii);
    hi = std::max(hi, (sup + inflow - nu(ii, ii) + 1.0) / g.pressure_slope());
  }
  return {0.0, hi};
}

unsigned resolve_workers(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("MIGDIRAC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_simulate(const SimulateFlags& flags, std::ostream& log) {
  Session s("simulate", flags.out, log);
  if (!s.prepare_output()) return s.finish(exit_config, "output directory error");
  auto cfg = read_config(s, flags.config);
  if (!cfg) return s.finish(exit_config, "config error");

  RunOptions run = cfg->run;
  if (flags.tau_end) run.tau_end = *flags.tau_end;
  run.checkpoints.insert(run.checkpoints.end(), flags.checkpoints.begin(), flags.checkpoints.end());
  std::sort(run.checkpoints.begin(), run.checkpoints.end());
  run.checkpoints.erase(std::unique(run.checkpoints.begin(), run.checkpoints.end()), run.checkpoints.end());

  SimulationResult result;
  try {
    result = simulate(*cfg, run);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return s.finish(exit_numerical, "numerical abort");
  }

  s.write("time_series.csv", time_series_csv(result));
  s.write("profile_final.csv", profile_csv(result.final_state));
  for (const auto& cp : result.checkpoints) {
    s.write(fmt::format("profile_tau_{}.csv", num(cp.tau)), profile_csv(cp));
  }
  const Eigen::VectorXd I = pressures(cfg->model, result.final_state);
  s.write("landscape_final.csv", landscape_csv(landscape(cfg->model, I, cfg->grid_points)));

  log << fmt::format("tau {} steps {} steady {} (rate {}) clamps {} wall {:.2f}s\n", num(result.final_state.tau),
                     result.steps, result.steady ? "yes" : "no", num(result.steady_rate), result.clamp_events,
                     result.wall_seconds);
  log << "final I: " << pressure_text(I) << '\n';
  s.manifest().notes.push_back("final I: " + pressure_text(I));
  return s.finish(exit_ok, "ok");
}

int cmd_asymptotic(const AsymptoticFlags& flags, std::ostream& log) {
  Session s("asymptotic", flags.out, log);
  if (!s.prepare_output()) return s.finish(exit_config, "output directory error");
  auto cfg = read_config(s, flags.config);
  if (!cfg) return s.finish(exit_config, "config error");
  const PatchModel& model = cfg->model;

  SolverOptions opts;
  opts.grid_points = cfg->grid_points;
  AsymptoticSolution sol;
  try {
    if (flags.mode == AsymptoticFlags::Mode::symmetric) {
      sol = solve_symmetric(model, flags.bracket ? *flags.bracket : default_bracket(model), opts);
    } else {
      Eigen::VectorXd I0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(model.patches()));
      if (!flags.initial_pressure.empty()) {
        if (flags.initial_pressure.size() != model.patches()) {
          log << "error: --I0 needs " << model.patches() << " values\n";
          return s.finish(exit_config, "bad initial pressure");
        }
        I0 = Eigen::Map<const Eigen::VectorXd>(flags.initial_pressure.data(), I0.size());
      }
      sol = solve_general(model, I0, opts);
    }
  } catch (const SymmetryError& e) {
    log << "error: symmetry check failed: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return s.finish(exit_config, "symmetry check failed");
  } catch (const BracketError& e) {
    log << "error: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return s.finish(exit_config, "bad bracket");
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return s.finish(exit_numerical, "numerical abort");
  }

  s.write("solution.csv", solution_csv(sol));
  s.write("summary.csv", summary_csv(sol));
  s.write("landscape.csv", landscape_csv(landscape(model, sol.pressure, cfg->grid_points)));
  log << "I: " << pressure_text(sol.pressure) << '\n';
  for (std::size_t j = 0; j < sol.points.size(); ++j) {
    log << fmt::format("atom x={} s={}\n", num(sol.points[j]), num(j < sol.scales.size() ? sol.scales[j] : 0.0));
  }
  if (!sol.converged || sol.degenerate) {
    log << "solver did not converge: " << sol.message << '\n';
    s.manifest().notes.push_back(sol.message);
    return s.finish(exit_no_convergence, "no convergence");
  }
  const ConstraintReport report = verify_solution(model, sol, flags.tolerance, cfg->grid_points);
  s.write("constraints.csv", constraints_csv(report));
  for (const auto& c : report.checks) {
    if (!c.passed) log << fmt::format("constraint {} failed: {} > {}\n", c.name, num(c.value), num(c.tolerance));
  }
  return report.all_passed() ? s.finish(exit_ok, "ok") : s.finish(exit_tolerance, "constraint check failed");
}

VerifyOutcome verify_pipeline(const ParsedConfig& cfg, const VerifyFlags& flags) {
  const PatchModel& model = cfg.model;
  RunOptions run = cfg.run;
  if (flags.tau_end) run.tau_end = *flags.tau_end;
  VerifyOutcome out;
  out.pde = simulate(cfg, run);
  out.pressure = pressures(model, out.pde.final_state);

  SolverOptions opts;
  opts.grid_points = cfg.grid_points;
  try {
    out.limit = solve_symmetric(model, default_bracket(model), opts);
    out.mode = "symmetric";
  } catch (const SymmetryError&) {
    out.limit = solve_general(model, out.pressure, opts);
    out.mode = "general";
  }
  if (!out.limit.converged || out.limit.degenerate) return out;

  out.atoms = extract_diracs(out.pde.final_state, flags.rel_threshold);
  out.report = compare_limits(out.atoms, out.pressure, out.limit, flags.tol);
  const HopfColeProfile profile = hopf_cole(out.pde.final_state, model.epsilon());
  out.report.coupling_gap = patch_coupling_gap(profile, SupportWindow{});
  out.report.semiconvexity = semiconvexity_deficit(profile);
  return out;
}

int cmd_verify(const VerifyFlags& flags, std::ostream& log) {
  Session s("verify", flags.out, log);
  if (!s.prepare_output()) return s.finish(exit_config, "output directory error");
  auto cfg = read_config(s, flags.config);
  if (!cfg) return s.finish(exit_config, "config error");

  VerifyOutcome v;
  try {
    v = verify_pipeline(*cfg, flags);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    s.manifest().notes.push_back(e.what());
    return s.finish(exit_numerical, "numerical abort");
  }
  s.manifest().notes.push_back("asymptotic mode: " + v.mode);
  s.write("time_series.csv", time_series_csv(v.pde));
  s.write("profile_final.csv", profile_csv(v.pde.final_state));
  s.write("solution.csv", solution_csv(v.limit));
  s.write("summary.csv", summary_csv(v.limit));
  if (!v.limit.converged || v.limit.degenerate) {
    log << "asymptotic solver did not converge: " << v.limit.message << '\n';
    return s.finish(exit_no_convergence, "no convergence");
  }

  s.write("atoms.csv", atoms_csv(v.atoms));
  s.write("comparison.csv", comparison_csv(v.report));
  const std::string summary =
      fmt::format("PDE: tau {} steady {} final I {}\nlimit: I {}\n", num(v.pde.final_state.tau),
                  v.pde.steady ? "yes" : "no", pressure_text(v.pressure), pressure_text(v.limit.pressure)) +
      v.report.summary();
  s.write("report.txt", summary);
  log << summary;
  return v.report.passed() ? s.finish(exit_ok, "ok") : s.finish(exit_tolerance, "tolerance check failed");
}

SweepRow sweep_point(const PatchModel& base, double value) {
  SweepRow row;
  row.value = value;
  try {
    const PatchModel model = base.with_migration_scale(value);
    const AsymptoticSolution sol = solve_symmetric(model, default_bracket(model));
    if (!sol.converged || sol.degenerate || sol.points.empty()) {
      row.error = sol.message.empty() ? "no convergence" : sol.message;
      return row;
    }
    row.atoms = static_cast<int>(sol.points.size());
    row.pressure = sol.pressure(0);
    row.x_left = *std::min_element(sol.points.begin(), sol.points.end());
    row.x_right = *std::max_element(sol.points.begin(), sol.points.end());
    row.ok = true;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<Transition> locate_transitions(const PatchModel& base, const std::vector<SweepRow>& rows,
                                           double width) {
  std::vector<SweepRow> good;
  for (const auto& r : rows) {
    if (r.ok) good.push_back(r);
  }
  std::sort(good.begin(), good.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  std::vector<Transition> out;
  for (std::size_t k = 0; k + 1 < good.size(); ++k) {
    if (good[k].atoms == good[k + 1].atoms) continue;
    Transition t{good[k].value, good[k + 1].value, good[k].atoms, good[k + 1].atoms};
    while (t.hi - t.lo > width) {
      const double mid = 0.5 * (t.lo + t.hi);
      const SweepRow r = sweep_point(base, mid);
      if (!r.ok) break;
      if (r.atoms == t.atoms_lo) {
        t.lo = mid;
      } else if (r.atoms == t.atoms_hi) {
        t.hi = mid;
      } else {
        break;
      }
    }
    out.push_back(t);
  }
  return out;
}

int cmd_sweep(const SweepFlags& flags, std::ostream& log) {
  Session s("sweep", flags.out, log);
  if (!s.prepare_output()) return s.finish(exit_config, "output directory error");
  auto cfg = read_config(s, flags.config);
  if (!cfg) return s.finish(exit_config, "config error");
  if (flags.param != "migration-scale") {
    log << "error: unsupported sweep parameter '" << flags.param << "'\n";
    return s.finish(exit_config, "unsupported parameter");
  }
  if (flags.values.empty() ||
      std::any_of(flags.values.begin(), flags.values.end(), [](double v) { return !(v > 0.0); })) {
    log << "error: sweep values must be positive\n";
    return s.finish(exit_config, "bad sweep values");
  }

  const unsigned workers =
      std::min<unsigned>(resolve_workers(flags.workers), static_cast<unsigned>(flags.values.size()));
  std::vector<SweepRow> rows(flags.values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) rows[k] = sweep_point(cfg->model, flags.values[k]);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::string csv = "nu,n_atoms,I,x_left,x_right\n";
  for (const auto& r : rows) {
    if (r.ok) {
      csv += fmt::format("{},{},{},{},{}\n", num(r.value), r.atoms, num(r.pressure), num(r.x_left), num(r.x_right));
    } else {
      csv += fmt::format("{},0,nan,nan,nan\n", num(r.value));
      log << fmt::format("value {} failed: {}\n", num(r.value), r.error);
      s.manifest().notes.push_back(fmt::format("value {} failed: {}", num(r.value), r.error));
    }
  }
  s.write("sweep.csv", csv);

  const auto transitions = locate_transitions(cfg->model, rows, flags.refine_width);
  std::string tcsv = "nu_lo,nu_hi,n_atoms_lo,n_atoms_hi\n";
  for (const auto& t : transitions) {
    tcsv += fmt::format("{},{},{},{}\n", num(t.lo), num(t.hi), t.atoms_lo, t.atoms_hi);
    log << fmt::format("atom count {} -> {} between {} and {}\n", t.atoms_lo, t.atoms_hi, num(t.lo), num(t.hi));
  }
  s.write("transitions.csv", tcsv);
  s.manifest().notes.push_back(fmt::format("workers: {}", workers));
  return s.finish(exit_ok, "ok");
}

}  // namespace migdirac::cli
