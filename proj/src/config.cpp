#include "damflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "damflow/error.hpp"

namespace damflow {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += sep;
    out += items[k];
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "run.name", "run.mode", "run.seed",
      "geometry.L", "geometry.K",
      "grid.nx", "grid.ny",
      "permeability.kind", "permeability.a11", "permeability.a12", "permeability.a22",
      "permeability.a22_slope", "permeability.amplitude", "permeability.samples",
      "permeability.file",
      "data.head", "data.level", "data.left", "data.right", "data.eps0", "data.initial",
      "data.initial_level", "data.initial_file", "data.project",
      "physics.alpha",
      "penalty.eps",
      "solver.method", "solver.linear", "solver.tol", "solver.max_iters", "solver.max_halvings",
      "solver.relaxation", "solver.max_picard_iters", "solver.tol_neg", "solver.krylov_tol",
      "solver.fallback",
      "time.T", "time.dt", "time.reg", "time.mass_lumping",
      "output.root", "output.every_n_steps",
      "checks.ordering", "checks.strips", "checks.conservation", "checks.complementarity",
      "checks.tol_order", "checks.tol_chi", "checks.tol_mass", "checks.tol_flux",
      "certify.second", "certify.tol_unique",
      "sweep.param", "sweep.values", "sweep.jobs", "sweep.mode",
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  const std::string* find(const std::string& key) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
  }

  void get(const std::string& key, std::string& out) const {
    if (const auto* v = find(key)) out = *v;
  }

  void get(const std::string& key, double& out) const {
    if (const auto* v = find(key)) out = number(key, *v);
  }

  void get(const std::string& key, std::optional<double>& out) const {
    if (const auto* v = find(key)) out = number(key, *v);
  }

  void get(const std::string& key, int& out) const {
    if (const auto* v = find(key)) {
      const double d = number(key, *v);
      if (d != std::floor(d) || std::abs(d) > 1e9) {
        throw ConfigError(key + ": expected an integer, got '" + *v + "'");
      }
      out = static_cast<int>(d);
    }
  }

  void get(const std::string& key, unsigned long long& out) const {
    if (const auto* v = find(key)) {
      try {
        std::size_t pos = 0;
        out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
      } catch (const std::exception&) {
        throw ConfigError(key + ": expected a nonnegative integer, got '" + *v + "'");
      }
    }
  }

  void get(const std::string& key, bool& out) const {
    if (const auto* v = find(key)) {
      std::string s = *v;
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "true" || s == "1" || s == "yes" || s == "on") {
        out = true;
      } else if (s == "false" || s == "0" || s == "no" || s == "off") {
        out = false;
      } else {
        throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
      }
    }
  }

 private:
  static double number(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
  }

  const KeyValues& kv_;
};

template <typename E>
E pick(const std::string& key, const std::string& value,
       std::initializer_list<std::pair<const char*, E>> options) {
  std::vector<std::string> names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names.emplace_back(name);
  }
  throw ConfigError(key + ": unknown value '" + value + "' (expected one of " + join(names, ", ") + ")");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Deterministic uniform [0, 1) from the raw 64-bit engine output.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

PermeabilityField random_field(const RunConfig& c) {
  std::mt19937_64 rng(c.seed);
  const int n = c.permeability.samples;
  std::vector<double> x1s(n), x2s(n);
  for (int k = 0; k < n; ++k) {
    x1s[k] = c.geometry.L * k / (n - 1);
    x2s[k] = c.geometry.K * k / (n - 1);
  }
  std::vector<SymTensor2> values(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> col(n);
    for (int j = 0; j < n; ++j) col[j] = c.permeability.a22 * (0.5 + unit(rng));
    // Nondecreasing a22 in x2 keeps div(a e) >= 0 for a12 = 0.
    std::sort(col.begin(), col.end());
    for (int j = 0; j < n; ++j) {
      SymTensor2& t = values[static_cast<std::size_t>(j) * n + i];
      t.a11 = c.permeability.a11 * (0.5 + unit(rng));
      t.a12 = 0.0;
      t.a22 = col[j];
    }
  }
  return PermeabilityField::grid_sampled(c.geometry, x1s, x2s, values);
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Stationary: return "stationary";
    case RunMode::Unsteady: return "unsteady";
    case RunMode::Certify: return "certify";
    case RunMode::Sweep: return "sweep";
  }
  return "?";
}

const char* to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::Hydrostatic: return "hydrostatic";
    case HeadKind::Dam: return "dam";
    case HeadKind::BarrierLower: return "barrier-lower";
    case HeadKind::BarrierUpper: return "barrier-upper";
  }
  return "?";
}

const char* to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::Midpoint: return "midpoint";
    case InitialKind::StationaryLower: return "stationary-lower";
    case InitialKind::StationaryUpper: return "stationary-upper";
    case InitialKind::Hydrostatic: return "hydrostatic";
    case InitialKind::File: return "file";
  }
  return "?";
}

double RunConfig::dt() const { return time.dt.value_or(geometry.K / ny); }

double RunConfig::tol_order() const {
  return checks.tol_order.value_or(computed_order_tolerance(geometry));
}

KeyValues read_ini_string(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  KeyValues kv;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) kv[section + "." + key] = value.get_value<std::string>();
  }
  return kv;
}

KeyValues read_ini_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return read_ini_string(os.str());
}

std::string write_ini(const KeyValues& kv) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [k, v] : kv) {
    const auto dot = k.find('.');
    sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
  }
  std::string out;
  for (const auto& [name, entries] : sections) {
    if (!out.empty()) out += '\n';
    out += '[' + name + "]\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + '\n';
  }
  return out;
}

RunConfig parse_config(const KeyValues& kv) {
  std::vector<std::string> unknown;
  for (const auto& [k, v] : kv) {
    if (!known_keys().count(k)) unknown.push_back(k);
  }
  if (!unknown.empty()) throw ConfigError("unknown config keys: " + join(unknown, ", "));

  const Reader r(kv);
  RunConfig c;
  c.source = kv;
  std::string s;

  r.get("run.name", c.name);
  s = "stationary";
  r.get("run.mode", s);
  c.mode = pick<RunMode>("run.mode", s,
                         {{"stationary", RunMode::Stationary},
                          {"unsteady", RunMode::Unsteady},
                          {"certify", RunMode::Certify},
                          {"sweep", RunMode::Sweep}});
  r.get("run.seed", c.seed);

  r.get("geometry.L", c.geometry.L);
  r.get("geometry.K", c.geometry.K);
  r.get("grid.nx", c.nx);
  r.get("grid.ny", c.ny);

  auto& p = c.permeability;
  r.get("permeability.kind", p.kind);
  pick<int>("permeability.kind", p.kind,
            {{"identity", 0}, {"layered", 0}, {"smooth", 0}, {"random", 0}, {"file", 0}});
  r.get("permeability.a11", p.a11);
  r.get("permeability.a12", p.a12);
  r.get("permeability.a22", p.a22);
  r.get("permeability.a22_slope", p.a22_slope);
  r.get("permeability.amplitude", p.amplitude);
  r.get("permeability.samples", p.samples);
  r.get("permeability.file", p.file);

  auto& d = c.data;
  s = "hydrostatic";
  r.get("data.head", s);
  d.head = pick<HeadKind>("data.head", s,
                          {{"hydrostatic", HeadKind::Hydrostatic},
                           {"dam", HeadKind::Dam},
                           {"barrier-lower", HeadKind::BarrierLower},
                           {"barrier-upper", HeadKind::BarrierUpper}});
  r.get("data.level", d.level);
  r.get("data.left", d.left);
  r.get("data.right", d.right);
  r.get("data.eps0", d.eps0);
  s = "midpoint";
  r.get("data.initial", s);
  d.initial = pick<InitialKind>("data.initial", s,
                                {{"midpoint", InitialKind::Midpoint},
                                 {"stationary-lower", InitialKind::StationaryLower},
                                 {"stationary-upper", InitialKind::StationaryUpper},
                                 {"hydrostatic", InitialKind::Hydrostatic},
                                 {"file", InitialKind::File}});
  r.get("data.initial_level", d.initial_level);
  r.get("data.initial_file", d.initial_file);
  r.get("data.project", d.project);

  r.get("physics.alpha", c.penalty.alpha);
  r.get("penalty.eps", c.penalty.eps);

  auto& sv = c.solver;
  s = "newton";
  r.get("solver.method", s);
  sv.method = pick<NonlinearMethod>("solver.method", s,
                                    {{"newton", NonlinearMethod::Newton},
                                     {"picard", NonlinearMethod::Picard}});
  s = "direct";
  r.get("solver.linear", s);
  sv.linear = pick<LinearSolverKind>("solver.linear", s,
                                     {{"direct", LinearSolverKind::Direct},
                                      {"krylov", LinearSolverKind::Krylov}});
  r.get("solver.tol", sv.tol);
  r.get("solver.max_iters", sv.max_iters);
  r.get("solver.max_halvings", sv.max_halvings);
  r.get("solver.relaxation", sv.picard_relaxation);
  r.get("solver.max_picard_iters", sv.max_picard_iters);
  r.get("solver.tol_neg", sv.tol_neg);
  r.get("solver.krylov_tol", sv.krylov_tol);
  r.get("solver.fallback", sv.fallback);

  r.get("time.T", c.time.T);
  r.get("time.dt", c.time.dt);
  r.get("time.reg", c.time.reg);
  r.get("time.mass_lumping", c.time.mass_lumping);

  r.get("output.root", c.output.root);
  r.get("output.every_n_steps", c.output.every_n_steps);

  auto& ck = c.checks;
  r.get("checks.ordering", ck.ordering);
  r.get("checks.strips", ck.strips);
  r.get("checks.conservation", ck.conservation);
  r.get("checks.complementarity", ck.complementarity);
  r.get("checks.tol_order", ck.tol_order);
  r.get("checks.tol_chi", ck.tol_chi);
  r.get("checks.tol_mass", ck.tol_mass);
  r.get("checks.tol_flux", ck.tol_flux);

  r.get("certify.second", c.certify.second);
  pick<int>("certify.second", c.certify.second, {{"picard", 0}, {"same", 0}});
  r.get("certify.tol_unique", c.certify.tol_unique);

  r.get("sweep.param", c.sweep.param);
  if (const auto* v = r.find("sweep.values")) c.sweep.values = split_list(*v);
  r.get("sweep.jobs", c.sweep.jobs);
  if (const auto* v = r.find("sweep.mode")) {
    c.sweep.mode = pick<RunMode>("sweep.mode", *v,
                                 {{"stationary", RunMode::Stationary},
                                  {"unsteady", RunMode::Unsteady},
                                  {"certify", RunMode::Certify}});
  }

  // Range checks: everything that can be decided without touching files.
  std::vector<std::string> bad;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  need(c.geometry.L > 0.0, "geometry.L must be > 0");
  need(c.geometry.K > 0.0, "geometry.K must be > 0");
  need(c.nx >= 2 && c.ny >= 2, "grid.nx and grid.ny must be >= 2");
  need(c.penalty.eps > 0.0, "penalty.eps must be > 0");
  need(c.penalty.alpha >= 0.0, "physics.alpha must be >= 0");
  need(d.eps0 > 0.0 && d.eps0 < 0.5 * c.geometry.K, "data.eps0 must lie in (0, K/2)");
  if (d.head == HeadKind::Hydrostatic) {
    need(d.level > 0.0 && d.level < c.geometry.K, "data.level must lie in (0, K)");
  }
  if (d.head == HeadKind::Dam) {
    need(d.left >= 0.0 && d.left <= c.geometry.K && d.right >= 0.0 && d.right <= c.geometry.K,
         "data.left and data.right must lie in [0, K]");
  }
  if (d.initial == InitialKind::Hydrostatic) {
    need(d.initial_level > 0.0 && d.initial_level < c.geometry.K,
         "data.initial_level must lie in (0, K)");
  }
  if (d.initial == InitialKind::File) need(!d.initial_file.empty(), "data.initial_file is required");
  if (p.kind == "file") need(!p.file.empty(), "permeability.file is required");
  if (p.kind == "random") need(p.samples >= 2, "permeability.samples must be >= 2");
  need(p.a11 > 0.0 && p.a22 > 0.0, "permeability.a11 and permeability.a22 must be > 0");
  need(sv.tol > 0.0, "solver.tol must be > 0");
  need(sv.max_iters >= 1, "solver.max_iters must be >= 1");
  need(sv.max_halvings >= 0, "solver.max_halvings must be >= 0");
  need(sv.picard_relaxation > 0.0 && sv.picard_relaxation <= 1.0,
       "solver.relaxation must lie in (0, 1]");
  need(sv.max_picard_iters >= 1, "solver.max_picard_iters must be >= 1");
  need(sv.tol_neg >= 0.0, "solver.tol_neg must be >= 0");
  need(sv.krylov_tol > 0.0, "solver.krylov_tol must be > 0");
  need(c.time.T > 0.0, "time.T must be > 0");
  need(c.time.reg >= 0.0, "time.reg must be >= 0");
  if (c.time.dt) need(*c.time.dt > 0.0, "time.dt must be > 0");
  if (c.time.T > 0.0 && c.dt() > 0.0 && c.ny > 0) {
    const double ratio = c.time.T / c.dt();
    need(std::abs(std::round(ratio) * c.dt() - c.time.T) <= 1e-12 * c.time.T && ratio >= 0.5,
         "time.T / time.dt must be an integer");
  }
  need(c.output.every_n_steps >= 1, "output.every_n_steps must be >= 1");
  if (ck.tol_order) need(*ck.tol_order >= 0.0, "checks.tol_order must be >= 0");
  need(ck.tol_chi > 0.0 && ck.tol_chi < 0.5, "checks.tol_chi must lie in (0, 0.5)");
  need(ck.tol_mass > 0.0, "checks.tol_mass must be > 0");
  if (c.certify.tol_unique) need(*c.certify.tol_unique > 0.0, "certify.tol_unique must be > 0");
  if (c.mode == RunMode::Sweep) {
    need(!c.sweep.param.empty(), "sweep.param is required in sweep mode");
    need(!c.sweep.values.empty(), "sweep.values is required in sweep mode");
  }
  need(c.sweep.jobs >= 1, "sweep.jobs must be >= 1");
  if (!bad.empty()) throw ValidationError(bad);
  return c;
}

RunConfig load_config(const fs::path& path) {
  KeyValues kv = read_ini_file(path);
  // Relative data files are taken relative to the config file.
  const fs::path base = fs::absolute(path).parent_path();
  for (const char* key : {"permeability.file", "data.initial_file"}) {
    auto it = kv.find(key);
    if (it != kv.end() && !it->second.empty() && fs::path(it->second).is_relative()) {
      it->second = (base / it->second).lexically_normal().string();
    }
  }
  return parse_config(kv);
}

namespace {

PermeabilityField make_field(const RunConfig& c) {
  const auto& p = c.permeability;
  if (p.kind == "identity") return PermeabilityField::identity(c.geometry);
  if (p.kind == "layered") return PermeabilityField::layered(c.geometry, p.a11, p.a22, p.a22_slope);
  if (p.kind == "smooth") {
    return PermeabilityField::smooth_analytic(c.geometry, p.a11, p.a12, p.a22, p.amplitude);
  }
  if (p.kind == "random") return random_field(c);
  return load_permeability_csv(p.file, c.geometry);
}

BoundaryHead make_head(const RunConfig& c, const BarrierHeads& barriers) {
  switch (c.data.head) {
    case HeadKind::Hydrostatic: return hydrostatic_head(c.data.level);
    case HeadKind::Dam: return dam_head(c.data.left, c.data.right, c.geometry);
    case HeadKind::BarrierLower: return barriers.phi0;
    case HeadKind::BarrierUpper: return barriers.phi1;
  }
  return hydrostatic_head(c.data.level);
}

}  // namespace

Problem build_problem(const RunConfig& c) {
  Grid grid(c.geometry, c.nx, c.ny);
  PermeabilityField field = make_field(c);
  BarrierHeads barriers = make_barrier_data(c.data.eps0, c.geometry);
  BoundaryHead phi = make_head(c, barriers);
  AssumptionReport report = validate_assumptions(field, grid);
  return Problem{std::move(grid), std::move(field), std::move(phi), std::move(barriers), report};
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> bad;
  if (c.permeability.kind == "file" && !fs::exists(c.permeability.file)) {
    bad.push_back("permeability.file not found: " + c.permeability.file);
  }
  if (c.data.initial == InitialKind::File && !fs::exists(c.data.initial_file)) {
    bad.push_back("data.initial_file not found: " + c.data.initial_file);
  }
  if (!bad.empty()) return bad;
  try {
    const Problem p = build_problem(c);
    const bool evolves = c.mode != RunMode::Stationary;
    if (evolves && c.checks.ordering) {
      // The sandwich argument needs phi0 <= phi <= phi1 on the Dirichlet boundary.
      const BoundaryTags tags = classify_boundary(p.grid, p.phi);
      double worst = 0.0;
      for (std::size_t n = 0; n < p.grid.num_nodes(); ++n) {
        if (!tags.is_dirichlet(n)) continue;
        const Point x = p.grid.node(n);
        const double f = p.phi(x);
        worst = std::max({worst, p.barriers.phi0(x) - f, f - p.barriers.phi1(x)});
      }
      if (worst > kTolOrderData) {
        std::ostringstream os;
        os << "boundary head is not between the barrier heads (violation " << worst
           << "); disable checks.ordering or adjust data.eps0";
        bad.push_back(os.str());
      }
    }
  } catch (const AssumptionViolation& e) {
    bad.push_back(e.what());
  } catch (const InvalidData& e) {
    bad.push_back(e.what());
  } catch (const InvalidArgument& e) {
    bad.push_back(e.what());
  }
  return bad;
}

}  // namespace damflow
