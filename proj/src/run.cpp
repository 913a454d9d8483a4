#include "damflow/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <limits>

#include <json.hpp>

#include "damflow/error.hpp"
#include "damflow/evolution.hpp"
#include "damflow/io.hpp"
#include "damflow/stationary.hpp"

namespace damflow {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kComplementarityRoundoff = 1e-12;

struct Check {
  std::string name;
  bool pass = true;
  json detail;
};

json checks_json(const std::vector<Check>& checks) {
  json out = json::object();
  for (const auto& c : checks) {
    json j = c.detail;
    j["pass"] = c.pass;
    out[c.name] = std::move(j);
  }
  return out;
}

void collect_failures(const std::vector<Check>& checks, RunOutcome& outcome) {
  for (const auto& c : checks) {
    if (!c.pass) outcome.failures.push_back(c.name);
  }
  if (!outcome.failures.empty() && outcome.exit_code == kExitOk) {
    outcome.exit_code = kExitCheckFailure;
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json solve_json(const StationarySolve& s) {
  return json{{"residual_norm", s.residual_norm},
              {"initial_residual", s.initial_residual},
              {"newton_iters", s.newton_iters},
              {"picard_iters", s.picard_iters},
              {"used_fallback", s.used_fallback},
              {"min_before_clamp", s.min_before_clamp}};
}

std::string free_boundary_csv(const std::vector<ColumnInterface>& cols) {
  std::string out = "i,x1,state,height\n";
  for (const auto& c : cols) {
    out += std::to_string(c.i) + ',' + format_double(c.x1) + ',' + to_string(c.state) + ',' +
           format_double(c.height) + '\n';
  }
  return out;
}

std::string diagnostics_csv(const std::vector<StepDiagnostics>& diags) {
  std::string out =
      "step,time,substeps,newton_iters,picard_iters,used_fallback,initial_residual,residual,"
      "storage_change,boundary_inflow,mass_balance,max_dry_flux\n";
  for (const auto& d : diags) {
    out += std::to_string(d.step) + ',' + format_double(d.time) + ',' + std::to_string(d.substeps) +
           ',' + std::to_string(d.newton_iters) + ',' + std::to_string(d.picard_iters) + ',' +
           (d.used_fallback ? "1" : "0") + ',' + format_double(d.initial_residual) + ',' +
           format_double(d.residual) + ',' + format_double(d.storage_change) + ',' +
           format_double(d.boundary_inflow) + ',' + format_double(d.mass_balance) + ',' +
           format_double(d.max_dry_flux) + '\n';
  }
  return out;
}

std::string snapshot_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d.csv", step);
  return buf;
}

double max_complementarity(const SolutionField& s) { return s.complementarity_residual(); }

// Stationary barrier pair for the configured eps0 and penalty.
struct BarrierSolves {
  StationarySolve lower;
  StationarySolve upper;
};

// Barriers are reference data, so they always come from the Newton solver;
// solver.method only selects the path of the time stepping.
BarrierSolves solve_barriers(const RunConfig& c, const Problem& p, const Discretization& disc) {
  SolverParams params = c.solver;
  params.method = NonlinearMethod::Newton;
  BarrierSolves b;
  b.lower = solve_stationary(disc, classify_boundary(p.grid, p.barriers.phi0), p.barriers.phi0,
                             c.penalty, params);
  b.upper = solve_stationary(disc, classify_boundary(p.grid, p.barriers.phi1), p.barriers.phi1,
                             c.penalty, params);
  return b;
}

Check ordering_check(const std::string& name, const Field& lower, const Field& upper,
                     const std::vector<const Field*>& states, double tol) {
  Check c{name, true, json::object()};
  double below = 0.0;
  double above = 0.0;
  for (const Field* u : states) {
    const OrderingReport r = check_sandwich(*u, lower, upper, tol);
    below = std::max(below, r.below);
    above = std::max(above, r.above);
    c.pass = c.pass && r.pass;
  }
  c.detail = {{"below", below}, {"above", above}, {"tol", tol}};
  return c;
}

json strip_json(const StripReport& r) {
  return json{{"delta", r.delta},
              {"lower_nodes", r.lower_nodes},
              {"upper_nodes", r.upper_nodes},
              {"lower_min_u", r.lower_min_u},
              {"lower_min_chi", r.lower_min_chi},
              {"upper_max_u", r.upper_max_u},
              {"upper_max_chi", r.upper_max_chi}};
}

// ---------------------------------------------------------------- stationary

void run_stationary(const RunConfig& c, const fs::path& dir, json& summary,
                    std::vector<Check>& checks, RunOutcome& outcome) {
  const Problem p = build_problem(c);
  const Discretization disc(p.grid, p.field);
  const BoundaryTags tags = classify_boundary(p.grid, p.phi);
  const StationarySolve s = solve_stationary(disc, tags, p.phi, c.penalty, c.solver);

  SolutionField sol{s.v, s.chi, 0.0};
  write_field_csv(dir / "solution.csv", p.grid, sol);
  write_file_atomic(dir / "free_boundary.csv",
                    free_boundary_csv(extract_free_boundary(sol, p.grid)));

  summary["residual_norm"] = s.residual_norm;
  summary["newton_iters"] = s.newton_iters;
  summary["eps"] = c.penalty.eps;
  summary["solve"] = solve_json(s);
  summary["lambda_est"] = p.assumptions.lambda_est;

  outcome.complementarity_max = max_complementarity(sol);
  if (c.checks.complementarity) {
    const double bound = c.penalty.eps / 4.0 + kComplementarityRoundoff;
    checks.push_back({"complementarity", outcome.complementarity_max <= bound,
                      {{"max", outcome.complementarity_max}, {"bound", bound}}});
  }

  const bool barrier_head =
      c.data.head == HeadKind::BarrierLower || c.data.head == HeadKind::BarrierUpper;
  if (!barrier_head) return;
  const bool lower = c.data.head == HeadKind::BarrierLower;
  const double tol = c.tol_order();

  if (c.checks.ordering) {
    // (eps0 - x2)^+ <= v0 <= v1 <= (K - eps0 - x2)^+ up to tol.
    const BoundaryHead& other_head = lower ? p.barriers.phi1 : p.barriers.phi0;
    const StationarySolve other = solve_stationary(disc, classify_boundary(p.grid, other_head),
                                                   other_head, c.penalty, c.solver);
    const Field& v0 = lower ? s.v : other.v;
    const Field& v1 = lower ? other.v : s.v;
    const Field floor = sample(p.grid, p.barriers.phi0);
    const Field ceil = sample(p.grid, p.barriers.phi1);
    Check chk = ordering_check("ordering", floor, ceil, {&v0, &v1}, tol);
    const double cross = (v0 - v1).maxCoeff();
    chk.detail["v0_minus_v1"] = cross;
    chk.pass = chk.pass && cross <= tol;
    checks.push_back(std::move(chk));
  }
  if (c.checks.strips) {
    const StripReport r = check_strips(sol, p.grid, c.data.eps0, c.penalty.eps, c.checks.tol_chi, tol);
    const bool ok = lower ? (r.lower_wet && r.lower_saturated) : r.upper_dry;
    checks.push_back({"strips", ok, strip_json(r)});
  }
}

// ------------------------------------------------------------------ unsteady

struct Initial {
  Field u0;
  Field chi0;
};

Initial make_initial(const RunConfig& c, const Problem& p, const BarrierSolves* b) {
  switch (c.data.initial) {
    case InitialKind::Midpoint:
      return {0.5 * (b->lower.v + b->upper.v), 0.5 * (b->lower.chi + b->upper.chi)};
    case InitialKind::StationaryLower:
      return {b->lower.v, b->lower.chi};
    case InitialKind::StationaryUpper:
      return {b->upper.v, b->upper.chi};
    case InitialKind::Hydrostatic: {
      SolutionField h = hydrostatic_profile(c.data.initial_level, p.grid);
      return {std::move(h.u), std::move(h.chi)};
    }
    case InitialKind::File: {
      SolutionField f = read_field_csv(c.data.initial_file, p.grid);
      return {std::move(f.u), std::move(f.chi)};
    }
  }
  throw InvalidArgument("unknown initial data kind");
}

bool needs_barriers(const RunConfig& c) {
  return c.checks.ordering || c.checks.strips || c.data.project ||
         c.data.initial == InitialKind::Midpoint || c.data.initial == InitialKind::StationaryLower ||
         c.data.initial == InitialKind::StationaryUpper;
}

void run_unsteady(const RunConfig& c, const fs::path& dir, json& summary,
                  std::vector<Check>& checks, RunOutcome& outcome) {
  const Problem p = build_problem(c);
  const Discretization disc(p.grid, p.field);

  std::optional<BarrierSolves> barriers;
  if (needs_barriers(c)) {
    barriers = solve_barriers(c, p, disc);
    write_field_csv(dir / "barrier_lower.csv", p.grid,
                    SolutionField{barriers->lower.v, barriers->lower.chi, 0.0});
    write_field_csv(dir / "barrier_upper.csv", p.grid,
                    SolutionField{barriers->upper.v, barriers->upper.chi, 0.0});
    summary["barriers"] = {{"lower", solve_json(barriers->lower)},
                           {"upper", solve_json(barriers->upper)}};
  }

  ProblemData data;
  data.alpha = c.penalty.alpha;
  data.T_final = c.time.T;
  data.eps0 = c.data.eps0;
  data.phi = p.phi;
  Initial init = make_initial(c, p, barriers ? &*barriers : nullptr);
  data.u0 = std::move(init.u0);
  data.chi0 = std::move(init.chi0);
  data.M = data.u0.maxCoeff();

  if (barriers) {
    const InitialValidation iv = validate_initial(data, barriers->lower.v, barriers->upper.v,
                                                  barriers->lower.chi, barriers->upper.chi);
    summary["initial_validation"] = {{"u_below", iv.u_below},   {"u_above", iv.u_above},
                                     {"chi_below", iv.chi_below}, {"chi_above", iv.chi_above},
                                     {"bounds_ok", iv.bounds_ok}, {"pass", iv.pass}};
  }

  EvolutionConfig ec = make_evolution_config(c.time.T, c.dt(), c.penalty);
  ec.time_reg = c.time.reg;
  ec.mass_lumping = c.time.mass_lumping;
  ec.solver = c.solver;
  ec.tol_flux = c.checks.tol_flux;

  const bool project = c.data.project && barriers.has_value();
  const Trajectory traj = solve_unsteady(data, disc, ec, project ? &barriers->upper : nullptr);

  const int n = ec.n_steps;
  std::vector<int> saved;
  json snaps = json::array();
  for (int k = 0; k <= n; ++k) {
    if (k % c.output.every_n_steps != 0 && k != n) continue;
    const std::string rel = "snapshots/" + snapshot_name(k);
    write_field_csv(dir / rel, p.grid, traj.snapshots[static_cast<std::size_t>(k)]);
    snaps.push_back({{"step", k}, {"time", traj.snapshots[static_cast<std::size_t>(k)].time},
                     {"file", rel}});
    saved.push_back(k);
  }
  write_file_atomic(dir / "diagnostics.csv", diagnostics_csv(traj.diagnostics));

  int newton = 0;
  int picard = 0;
  int fallbacks = 0;
  int max_sub = 1;
  double max_dry = 0.0;
  for (const auto& d : traj.diagnostics) {
    newton += d.newton_iters;
    picard += d.picard_iters;
    fallbacks += d.used_fallback ? 1 : 0;
    max_sub = std::max(max_sub, d.substeps);
    max_dry = std::max(max_dry, d.max_dry_flux);
  }
  summary["eps"] = c.penalty.eps;
  summary["alpha"] = c.penalty.alpha;
  summary["dt"] = ec.dt;
  summary["n_steps"] = n;
  summary["projected"] = project;
  summary["snapshots"] = std::move(snaps);
  summary["newton_iters"] = newton;
  summary["picard_iters"] = picard;
  summary["fallback_steps"] = fallbacks;
  summary["max_substeps"] = max_sub;

  double compl_max = 0.0;
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    compl_max = std::max(compl_max, max_complementarity(traj.snapshots[k]));
  }
  outcome.complementarity_max = compl_max;
  const double tol = c.tol_order();

  if (c.checks.ordering) {
    std::vector<const Field*> states;
    for (const auto& s : traj.snapshots) states.push_back(&s.u);
    checks.push_back(ordering_check("ordering", barriers->lower.v, barriers->upper.v, states, tol));
  }
  if (c.checks.strips) {
    Check chk{"strips", true, json::object()};
    StripReport worst;
    worst.lower_min_u = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
      const StripReport r = check_strips(traj.snapshots[k], p.grid, c.data.eps0, c.penalty.eps,
                                         c.checks.tol_chi, tol);
      chk.pass = chk.pass && r.lower_wet && r.lower_saturated && r.upper_dry;
      worst.delta = r.delta;
      worst.lower_nodes = r.lower_nodes;
      worst.upper_nodes = r.upper_nodes;
      worst.lower_min_u = std::min(worst.lower_min_u, r.lower_min_u);
      worst.lower_min_chi = std::min(worst.lower_min_chi, r.lower_min_chi);
      worst.upper_max_u = std::max(worst.upper_max_u, r.upper_max_u);
      worst.upper_max_chi = std::max(worst.upper_max_chi, r.upper_max_chi);
    }
    chk.detail = strip_json(worst);
    checks.push_back(std::move(chk));
  }
  if (c.checks.conservation) {
    const double mb = traj.max_mass_balance();
    checks.push_back({"conservation", mb <= c.checks.tol_mass,
                      {{"max_mass_balance", mb}, {"tol", c.checks.tol_mass}}});
  }
  if (c.checks.complementarity) {
    const double bound = c.penalty.eps / 4.0 + kComplementarityRoundoff;
    checks.push_back({"complementarity", compl_max <= bound, {{"max", compl_max}, {"bound", bound}}});
  }
  // Report only: flux leaving through dry boundary nodes.
  summary["outflow"] = {{"max_dry_flux", max_dry},
                        {"tol", c.checks.tol_flux},
                        {"ok", max_dry <= c.checks.tol_flux}};
}

// ------------------------------------------------------------------- certify

void run_certify(const RunConfig& c, const fs::path& dir, json& summary,
                 std::vector<Check>& checks, RunOutcome& outcome) {
  KeyValues kv_a = c.source;
  kv_a["run.mode"] = "unsteady";
  kv_a["solver.method"] = "newton";
  KeyValues kv_b = kv_a;
  if (c.certify.second == "picard") kv_b["solver.method"] = "picard";

  const RunOutcome a = run(parse_config(kv_a), dir / "a");
  const RunOutcome b = run(parse_config(kv_b), dir / "b");
  for (const auto& f : a.failures) outcome.failures.push_back("a:" + f);
  for (const auto& f : b.failures) outcome.failures.push_back("b:" + f);
  const int sub = std::max(a.exit_code, b.exit_code);
  if (sub == kExitNonconvergence || sub == kExitValidation || sub == kExitParseError) {
    outcome.exit_code = sub;
    return;
  }
  outcome.exit_code = sub;
  outcome.complementarity_max = std::max(a.complementarity_max, b.complementarity_max);

  const CertificateReport rep = compare_runs(dir / "a", dir / "b", dir);
  summary["second"] = c.certify.second;
  summary["sup_E"] = rep.sup_E;
  summary["tol_unique"] = rep.tol_unique;
  checks.push_back({"certificate", rep.pass, {{"sup_E", rep.sup_E}, {"tol_unique", rep.tol_unique}}});
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
  }
}

struct LoadedRun {
  RunConfig config;
  json summary;
};

LoadedRun load_run(const fs::path& dir) {
  LoadedRun r;
  r.summary = read_json(dir / "summary.json");
  if (!r.summary.value("complete", false)) {
    throw InvalidArgument(dir.string() + " does not hold a complete run");
  }
  if (r.summary.value("mode", std::string()) != "unsteady") {
    throw InvalidArgument(dir.string() + " is not an unsteady run");
  }
  r.config = parse_config(read_ini_file(dir / "config.ini"));
  return r;
}

Trajectory load_trajectory(const fs::path& dir, const LoadedRun& r, const Grid& grid) {
  Trajectory t;
  t.alpha = r.config.penalty.alpha;
  t.eps = r.config.penalty.eps;
  t.dt = r.config.dt();
  for (const auto& s : r.summary.at("snapshots")) {
    SolutionField f = read_field_csv(dir / s.at("file").get<std::string>(), grid);
    f.time = s.at("time").get<double>();
    t.snapshots.push_back(std::move(f));
  }
  return t;
}

json report_json(const CertificateReport& r) {
  return json{{"sup_E", r.sup_E},
              {"F_final", r.F_final},
              {"C_fit", r.C_fit},
              {"cross_term_min", r.cross_term_min},
              {"sign_min", r.sign_min},
              {"ordering_violations", r.ordering_violations},
              {"tol_unique", r.tol_unique},
              {"solution_max", r.solution_max},
              {"energy_identity_max", r.energy_identity_max},
              {"dual_stability_max", r.dual_stability_max},
              {"dual_stability_flag", r.dual_stability_flag},
              {"gronwall_margin", r.gronwall_margin},
              {"pass", r.pass}};
}

// Keys two runs must share to be compared; boundary heads and eps may differ.
std::vector<std::string> compatibility_mismatches(const LoadedRun& a, const LoadedRun& b) {
  std::vector<std::string> bad;
  const RunConfig& x = a.config;
  const RunConfig& y = b.config;
  if (x.nx != y.nx) bad.push_back("grid.nx");
  if (x.ny != y.ny) bad.push_back("grid.ny");
  if (x.geometry.L != y.geometry.L) bad.push_back("geometry.L");
  if (x.geometry.K != y.geometry.K) bad.push_back("geometry.K");
  if (x.penalty.alpha != y.penalty.alpha) bad.push_back("physics.alpha");
  const auto& p = x.permeability;
  const auto& q = y.permeability;
  if (p.kind != q.kind) bad.push_back("permeability.kind");
  if (p.a11 != q.a11) bad.push_back("permeability.a11");
  if (p.a12 != q.a12) bad.push_back("permeability.a12");
  if (p.a22 != q.a22) bad.push_back("permeability.a22");
  if (p.a22_slope != q.a22_slope) bad.push_back("permeability.a22_slope");
  if (p.amplitude != q.amplitude) bad.push_back("permeability.amplitude");
  if (p.kind == "random" && (p.samples != q.samples || x.seed != y.seed)) {
    bad.push_back("permeability.random");
  }
  if (p.kind == "file" && p.file != q.file) bad.push_back("permeability.file");
  const auto& sa = a.summary.at("snapshots");
  const auto& sb = b.summary.at("snapshots");
  bool same_times = sa.size() == sb.size();
  for (std::size_t k = 0; same_times && k < sa.size(); ++k) {
    const double ta = sa[k].at("time").get<double>();
    const double tb = sb[k].at("time").get<double>();
    same_times = std::abs(ta - tb) <= 1e-12 * std::max(1.0, std::abs(ta));
  }
  if (!same_times) bad.push_back("times");
  return bad;
}

}  // namespace

fs::path output_root(const RunConfig& config) {
  if (const char* env = std::getenv("DAMFLOW_OUT"); env != nullptr && *env != '\0') return env;
  return config.output.root;
}

CertificateReport compare_runs(const fs::path& dir_a, const fs::path& dir_b, const fs::path& out_dir) {
  const LoadedRun a = load_run(dir_a);
  const LoadedRun b = load_run(dir_b);
  const auto bad = compatibility_mismatches(a, b);
  if (!bad.empty()) {
    std::string msg = "incompatible runs, mismatched keys:";
    for (const auto& k : bad) msg += " " + k;
    throw InvalidArgument(msg);
  }
  const Problem p = build_problem(a.config);
  const Discretization disc(p.grid, p.field);
  const BoundaryTags tags = classify_boundary(p.grid, p.phi);
  const Trajectory ta = load_trajectory(dir_a, a, p.grid);
  const Trajectory tb = load_trajectory(dir_b, b, p.grid);

  MonitorOptions opts;
  opts.tol_unique = a.config.certify.tol_unique;
  opts.linear = a.config.solver.linear;
  auto [series, report] = gronwall_monitor(ta, tb, disc, tags, opts);

  if (!out_dir.empty()) {
    json cert = report_json(report);
    cert["run_a"] = fs::absolute(dir_a).lexically_normal().string();
    cert["run_b"] = fs::absolute(dir_b).lexically_normal().string();
    cert["eps_a"] = ta.eps;
    cert["eps_b"] = tb.eps;
    write_json(out_dir / "certificate.json", cert);
    write_file_atomic(out_dir / "energy.csv",
                      table_csv({"t", "E", "F", "cross"}, {series.times, series.E, series.F, series.cross}));
  }
  return report;
}

RunOutcome run(const RunConfig& config, const fs::path& dir) {
  RunOutcome outcome;
  outcome.dir = dir;
  outcome.eps = config.penalty.eps;
  fs::create_directories(dir);
  // A stale summary must never vouch for this run.
  fs::remove(dir / "summary.json");
  write_file_atomic(dir / "config.ini", write_ini(config.source));

  json summary;
  summary["name"] = config.name;
  summary["mode"] = to_string(config.mode);
  summary["complete"] = false;
  std::vector<Check> checks;
  std::string error;
  try {
    if (const auto problems = validate_config(config); !problems.empty()) {
      throw ValidationError(problems);
    }
    switch (config.mode) {
      case RunMode::Stationary: run_stationary(config, dir, summary, checks, outcome); break;
      case RunMode::Unsteady: run_unsteady(config, dir, summary, checks, outcome); break;
      case RunMode::Certify: run_certify(config, dir, summary, checks, outcome); break;
      case RunMode::Sweep:
        throw ValidationError({"sweep configs are run through the sweep command"});
    }
    collect_failures(checks, outcome);
    summary["complete"] = true;
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitParseError;
    error = e.what();
  } catch (const ValidationError& e) {
    outcome.exit_code = kExitValidation;
    error = e.what();
  } catch (const AssumptionViolation& e) {
    outcome.exit_code = kExitValidation;
    error = e.what();
  } catch (const InvalidData& e) {
    outcome.exit_code = kExitValidation;
    error = e.what();
  } catch (const NonConvergence& e) {
    outcome.exit_code = kExitNonconvergence;
    error = e.what();
  } catch (const InvalidArgument& e) {
    outcome.exit_code = kExitValidation;
    error = e.what();
  }
  if (!error.empty()) outcome.failures.push_back(error);

  summary["exit_code"] = outcome.exit_code;
  summary["checks"] = checks_json(checks);
  summary["failures"] = outcome.failures;
  if (!error.empty()) summary["error"] = error;
  summary["complementarity_max"] = outcome.complementarity_max;
  write_json(dir / "summary.json", summary);
  return outcome;
}

RunOutcome run(const RunConfig& config) { return run(config, output_root(config) / config.name); }

SweepOutcome sweep(const RunConfig& config, const std::string& param,
                   const std::vector<std::string>& values, int jobs) {
  if (values.empty()) throw ValidationError({"sweep needs at least one value"});
  if (jobs < 1) throw ValidationError({"jobs must be >= 1"});
  SweepOutcome out;
  out.dir = output_root(config) / config.name;
  fs::create_directories(out.dir);
  fs::remove(out.dir / "sweep_summary.json");

  // Parse every job first so a bad value fails before any solve starts.
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    KeyValues kv = config.source;
    kv[param] = v;
    kv["run.mode"] = to_string(config.sweep.mode);
    kv["run.name"] = config.name + "/" + param + "=" + v;
    kv.erase("sweep.param");
    kv.erase("sweep.values");
    kv.erase("sweep.jobs");
    kv.erase("sweep.mode");
    configs.push_back(parse_config(kv));
  }

  out.runs.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      out.runs[k] = run(configs[k], out.dir / (param + "=" + values[k]));
    }
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(configs.size()));
  std::vector<std::future<void>> pool;
  for (int t = 1; t < n_threads; ++t) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();

  json entries = json::array();
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const RunOutcome& r = out.runs[k];
    entries.push_back({{"value", values[k]},
                       {"dir", param + "=" + values[k]},
                       {"exit_code", r.exit_code},
                       {"eps", r.eps},
                       {"complementarity_max", r.complementarity_max},
                       {"failures", r.failures}});
    out.exit_code = std::max(out.exit_code, r.exit_code);
  }

  // The residual bound eps/4 shrinks with eps, so the observed maxima should too.
  std::vector<std::size_t> order(out.runs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return out.runs[x].eps < out.runs[y].eps; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const RunOutcome& lo = out.runs[order[k - 1]];
    const RunOutcome& hi = out.runs[order[k]];
    if (lo.exit_code == kExitOk && hi.exit_code == kExitOk &&
        lo.complementarity_max > hi.complementarity_max) {
      out.complementarity_monotone = false;
    }
  }
  if (!out.complementarity_monotone && out.exit_code == kExitOk) out.exit_code = kExitCheckFailure;

  json s;
  s["name"] = config.name;
  s["param"] = param;
  s["mode"] = to_string(config.sweep.mode);
  s["runs"] = std::move(entries);
  s["complementarity_monotone"] = out.complementarity_monotone;
  s["exit_code"] = out.exit_code;
  s["complete"] = true;
  write_json(out.dir / "sweep_summary.json", s);
  return out;
}

}  // namespace damflow
