#include "migdirac/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "migdirac/errors.hpp"

namespace migdirac {

namespace {

using Section = std::map<std::string, std::string>;
using Document = std::map<std::string, Section>;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

Document read_document(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("<document>", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  Document doc;
  for (const auto& [name, section] : tree) {
    if (section.empty()) throw ConfigError(name, "key outside of a section");
    auto& out = doc[name];
    for (const auto& [key, value] : section) out[key] = unquote(value.data());
  }
  return doc;
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(key, "expected a number, got '" + raw + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::string s = raw;
  for (char& c : s) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& tok : split_list(raw)) out.push_back(parse_number(key, tok));
  return out;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + raw + "'");
}

// Tracks which keys were consumed so the rest can be reported as unknown.
class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has_section(const std::string& section) const { return doc_.count(section) != 0; }

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    used_.insert(section);
    const auto s = doc_.find(section);
    if (s == doc_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    used_keys_.insert(section + "/" + key);
    return k->second;
  }

  std::string require(const std::string& section, const std::string& key) {
    auto v = get(section, key);
    if (!v) throw ConfigError(section + "." + key, "missing");
    return *v;
  }

  double number(const std::string& section, const std::string& key) {
    return parse_number(section + "." + key, require(section, key));
  }

  double number_or(const std::string& section, const std::string& key, double fallback) {
    auto v = get(section, key);
    return v ? parse_number(section + "." + key, *v) : fallback;
  }

  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) {
    auto v = get(section, key);
    if (!v) return fallback;
    const double d = parse_number(section + "." + key, *v);
    if (!(d >= 0.0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
      throw ConfigError(section + "." + key, "expected a nonnegative integer");
    }
    return static_cast<std::size_t>(d);
  }

  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (const auto& [section, keys] : doc_) {
      if (!used_.count(section)) {
        out.push_back("unknown section [" + section + "]");
        continue;
      }
      for (const auto& [key, value] : keys) {
        if (!used_keys_.count(section + "/" + key)) {
          out.push_back("unknown key '" + key + "' in [" + section + "]");
        }
      }
    }
    return out;
  }

 private:
  const Document& doc_;
  std::set<std::string> used_;
  std::set<std::string> used_keys_;
};

Table1D read_table(Reader& r, const std::string& section, const std::string& stem) {
  Table1D t;
  t.x = parse_list(section + "." + stem + ".x", r.require(section, stem + ".x"));
  t.y = parse_list(section + "." + stem + ".y", r.require(section, stem + ".y"));
  if (t.x.size() < 2 || t.x.size() != t.y.size()) {
    throw ConfigError(section + "." + stem, "table needs matching x and y lists with at least 2 entries");
  }
  for (std::size_t k = 1; k < t.x.size(); ++k) {
    if (!(t.x[k] > t.x[k - 1])) throw ConfigError(section + "." + stem + ".x", "abscissae must increase");
  }
  return t;
}

PatchModel read_model(Reader& r) {
  const std::size_t K = r.count("model", "K", 0);
  if (K == 0) throw ConfigError("model.K", "missing or zero");
  const double L = r.number("model", "L");
  const double eps = r.number("model", "epsilon");
  if (!(L > 0.0)) throw ConfigError("model.L", "must be positive");
  if (!(eps > 0.0)) throw ConfigError("model.epsilon", "must be positive");

  std::vector<GrowthSpec> growth;
  std::vector<WeightSpec> psi;
  for (std::size_t i = 1; i <= K; ++i) {
    const std::string sec = "patch." + std::to_string(i);
    if (!r.has_section(sec)) throw ConfigError(sec, "missing section");
    const std::string kind = trim(r.get(sec, "growth.kind").value_or("quadratic"));
    const double d = r.number(sec, "d");
    if (kind == "quadratic") {
      growth.push_back(GrowthSpec::quadratic(r.number(sec, "a"), r.number(sec, "b"), r.number(sec, "c"), d));
    } else if (kind == "tabulated") {
      growth.push_back(GrowthSpec::tabulated(read_table(r, sec, "table"), d));
    } else {
      throw ConfigError(sec + ".growth.kind", "expected quadratic or tabulated, got '" + kind + "'");
    }
    if (r.get(sec, "psi.x")) {
      psi.push_back(WeightSpec::tabulated(read_table(r, sec, "psi")));
    } else {
      psi.push_back(WeightSpec::constant(r.number_or(sec, "psi", 1.0)));
    }
  }

  Eigen::MatrixXd nu = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  if (K > 1) {
    const bool nonconservative = parse_bool("migration.nonconservative",
                                            r.get("migration", "nonconservative").value_or("false"));
    bool any_default = false;
    for (std::size_t i = 0; i < K; ++i) {
      const std::string key = "row" + std::to_string(i + 1);
      const auto tokens = split_list(r.require("migration", key));
      if (tokens.size() != K) {
        throw ConfigError("migration." + key, "expected " + std::to_string(K) + " entries");
      }
      for (std::size_t j = 0; j < K; ++j) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        if (tokens[j] == "*") {
          if (i != j) throw ConfigError("migration." + key, "'*' is only allowed on the diagonal");
          if (nonconservative) {
            throw ConfigError("migration." + key, "nonconservative matrices need explicit diagonals");
          }
          any_default = true;
          nu(ii, jj) = 0.0;
        } else {
          nu(ii, jj) = parse_number("migration." + key, tokens[j]);
        }
      }
    }
    if (any_default) {
      const Eigen::MatrixXd filled = conservative_diagonal(nu);
      for (std::size_t i = 0; i < K; ++i) {
        const std::string key = "row" + std::to_string(i + 1);
        if (split_list(r.require("migration", key))[i] == "*") {
          nu(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
              filled(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        }
      }
    }
  }
  try {
    return PatchModel(L, eps, std::move(growth), std::move(psi), std::move(nu));
  } catch (const AssumptionError& e) {
    throw ConfigError("migration", e.what());
  }
}

std::string number_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string list_text(const std::vector<double>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ' ';
    out += number_text(values[k]);
  }
  return out;
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
  const Document doc = read_document(text);
  Reader r(doc);
  PatchModel model = read_model(r);
  const std::size_t K = model.patches();

  RunOptions run;
  const std::size_t grid_points = r.count("sim", "grid_points", 801);
  if (grid_points < 3) throw ConfigError("sim.grid_points", "need at least 3 nodes");
  run.dt = r.number_or("sim", "dt", run.dt);
  run.tau_end = r.number_or("sim", "tau_end", run.tau_end);
  run.steady_tol = r.number_or("sim", "steady_tol", run.steady_tol);
  run.sample_stride = r.count("sim", "sample_stride", run.sample_stride);
  if (auto cp = r.get("sim", "checkpoints")) run.checkpoints = parse_list("sim.checkpoints", *cp);
  if (!(run.dt > 0.0)) throw ConfigError("sim.dt", "must be positive");
  if (!(run.tau_end >= 0.0)) throw ConfigError("sim.tau_end", "must be nonnegative");
  if (run.sample_stride == 0) throw ConfigError("sim.sample_stride", "must be positive");

  std::vector<InitialBump> init(K);
  for (std::size_t i = 0; i < K; ++i) {
    const std::string sec = "init." + std::to_string(i + 1);
    init[i].center = r.number_or(sec, "center", init[i].center);
    init[i].mass = r.number_or(sec, "mass", init[i].mass);
    init[i].width = r.number_or(sec, "width", init[i].width);
    if (!(init[i].mass > 0.0)) throw ConfigError(sec + ".mass", "must be positive");
    if (!(init[i].width > 0.0)) throw ConfigError(sec + ".width", "must be positive");
    if (!(std::abs(init[i].center) < model.half_width())) throw ConfigError(sec + ".center", "must lie inside (-L, L)");
  }

  ParsedConfig out{std::move(model), grid_points, run, init, {}};
  out.warnings = r.unknown();
  return out;
}

ParsedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

PatchModel build_model(const std::string& text) {
  const Document doc = read_document(text);
  Reader r(doc);
  return read_model(r);
}

std::string to_config_text(const ParsedConfig& c) {
  const auto& m = c.model;
  const std::size_t K = m.patches();
  std::ostringstream os;
  os << "[model]\nK = " << K << "\nL = " << number_text(m.half_width())
     << "\nepsilon = " << number_text(m.epsilon()) << "\n";
  for (std::size_t i = 0; i < K; ++i) {
    const auto& g = m.growth_spec(i);
    os << "\n[patch." << i + 1 << "]\n";
    if (g.kind() == GrowthSpec::Kind::quadratic) {
      os << "growth.kind = quadratic\na = " << number_text(g.a()) << "\nb = " << number_text(g.b())
         << "\nc = " << number_text(g.c()) << "\n";
    } else {
      os << "growth.kind = tabulated\ntable.x = " << list_text(g.table().x)
         << "\ntable.y = " << list_text(g.table().y) << "\n";
    }
    os << "d = " << number_text(g.pressure_slope()) << "\n";
    const auto& w = m.weight_spec(i);
    if (w.is_constant()) {
      os << "psi = " << number_text(w(0.0)) << "\n";
    } else {
      os << "psi.x = " << list_text(w.table().x) << "\npsi.y = " << list_text(w.table().y) << "\n";
    }
  }
  if (K > 1) {
    os << "\n[migration]\nnonconservative = true\n";
    for (std::size_t i = 0; i < K; ++i) {
      os << "row" << i + 1 << " =";
      for (std::size_t j = 0; j < K; ++j) {
        os << ' ' << number_text(m.migration()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
      os << "\n";
    }
  }
  os << "\n[sim]\ngrid_points = " << c.grid_points << "\ndt = " << number_text(c.run.dt)
     << "\ntau_end = " << number_text(c.run.tau_end) << "\nsteady_tol = " << number_text(c.run.steady_tol)
     << "\nsample_stride = " << c.run.sample_stride << "\n";
  if (!c.run.checkpoints.empty()) os << "checkpoints = " << list_text(c.run.checkpoints) << "\n";
  for (std::size_t i = 0; i < c.init.size(); ++i) {
    os << "\n[init." << i + 1 << "]\ncenter = " << number_text(c.init[i].center)
       << "\nmass = " << number_text(c.init[i].mass) << "\nwidth = " << number_text(c.init[i].width) << "\n";
  }
  return os.str();
}

}  // namespace migdirac
