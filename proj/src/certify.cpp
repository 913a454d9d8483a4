#include "damflow/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "damflow/coeffs.hpp"
#include "damflow/error.hpp"

namespace damflow {

DifferencePair make_difference(const SolutionField& s1, const SolutionField& s2, double alpha) {
  if (s1.u.size() != s2.u.size() || s1.chi.size() != s2.chi.size() ||
      s1.u.size() != s1.chi.size()) {
    throw InvalidArgument("make_difference: field sizes differ");
  }
  DifferencePair p;
  p.w = s1.u - s2.u;
  p.dchi = s1.chi - s2.chi;
  p.eta = alpha * p.w + p.dchi;
  p.time = s1.time;
  return p;
}

struct DualSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  SparseMatrix Kff;
};

DualSolver::DualSolver(const Discretization& disc, const BoundaryTags& tags, LinearSolverKind kind,
                       double krylov_tol)
    : disc_(disc), dofs_(tags), kind_(kind), krylov_tol_(krylov_tol), impl_(std::make_unique<Impl>()) {
  if (tags.size() != disc.grid().num_nodes()) {
    throw InvalidArgument("DualSolver: boundary tags do not match the grid");
  }
  impl_->Kff = dofs_.restrict(disc.stiffness());
  if (kind_ == LinearSolverKind::Direct) {
    impl_->ldlt.compute(impl_->Kff);
    if (impl_->ldlt.info() != Eigen::Success) {
      throw NonConvergence("dual stiffness factorization failed", 0.0);
    }
  } else {
    impl_->cg.setTolerance(krylov_tol_);
    impl_->cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * impl_->Kff.rows()));
    impl_->cg.compute(impl_->Kff);
  }
  lambda_ = validate_assumptions(disc.field(), disc.grid()).lambda_est;
  laplace_ = Discretization(disc.grid(), PermeabilityField::identity(disc.grid().geometry())).stiffness();
}

DualSolver::~DualSolver() = default;

Field DualSolver::solve(const Field& eta) const {
  if (eta.size() != static_cast<Eigen::Index>(dofs_.num_nodes())) {
    throw InvalidArgument("DualSolver::solve: eta size does not match the grid");
  }
  if (!eta.allFinite()) throw InvalidArgument("DualSolver::solve: eta is not finite");
  const Field b = dofs_.restrict(disc_.consistent_mass() * eta);
  Field x;
  if (kind_ == LinearSolverKind::Direct) {
    x = impl_->ldlt.solve(b);
  } else {
    x = impl_->cg.solve(b);
    if (impl_->cg.info() != Eigen::Success) {
      throw NonConvergence("dual CG did not converge", impl_->cg.error());
    }
  }
  if (!x.allFinite()) throw NonConvergence("dual solve produced non-finite values", b.norm());
  Field v = Field::Zero(eta.size());
  dofs_.scatter(x, v);
  return v;
}

DualCheck DualSolver::check(const Field& v, const Field& eta) const {
  DualCheck c;
  c.energy = disc_.energy(v);
  c.load = eta.dot(disc_.consistent_mass() * v);
  const double denom = std::max(std::abs(c.energy), std::abs(c.load));
  c.identity_error = denom > 0.0 ? std::abs(c.energy - c.load) / denom : 0.0;
  c.grad_sq = v.dot(laplace_ * v);
  c.eta_sq = eta.dot(disc_.consistent_mass() * eta);
  const double bound = c.eta_sq / (lambda_ * lambda_);
  c.stability_ratio = bound > 0.0 ? c.grad_sq / bound : 0.0;
  return c;
}

Field solve_dual(const Field& eta, const PermeabilityField& field, const Grid& grid,
                 const BoundaryTags& tags) {
  const Discretization disc(grid, field);
  const DualSolver solver(disc, tags);
  return solver.solve(eta);
}

double energy(const Field& v, const PermeabilityField& field, const Grid& grid) {
  if (v.size() != static_cast<Eigen::Index>(grid.num_nodes())) {
    throw InvalidArgument("energy: field size does not match the grid");
  }
  return Discretization(grid, field).energy(v);
}

TimeSeries time_series(const Trajectory& traj) {
  TimeSeries s;
  for (const auto& snap : traj.snapshots) {
    s.times.push_back(snap.time);
    s.values.push_back(snap.u);
  }
  return s;
}

namespace {

void require_series(const TimeSeries& s) {
  if (s.times.size() < 2 || s.times.size() != s.values.size()) {
    throw InvalidArgument("time series needs at least two samples and matching sizes");
  }
  for (std::size_t k = 1; k < s.times.size(); ++k) {
    if (!(s.times[k] > s.times[k - 1])) throw InvalidArgument("time series times must increase");
    if (s.values[k].size() != s.values[0].size()) {
      throw InvalidArgument("time series fields differ in size");
    }
  }
}

// Segment k with t_k <= t <= t_{k+1}.
std::size_t segment_of(const TimeSeries& s, double t) {
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - s.times.begin());
  if (k == 0) return 0;
  k -= 1;
  return std::min(k, s.times.size() - 2);
}

Field value_at(const TimeSeries& s, std::size_t k, double t) {
  const double t0 = s.times[k];
  const double t1 = s.times[k + 1];
  const double theta = (t - t0) / (t1 - t0);
  return (1.0 - theta) * s.values[k] + theta * s.values[k + 1];
}

// Exact integral of the interpolant over [a, b].
Field integrate(const TimeSeries& s, double a, double b) {
  Field acc = Field::Zero(s.values[0].size());
  std::size_t k = segment_of(s, a);
  for (; k + 1 < s.times.size(); ++k) {
    const double lo = std::max(a, s.times[k]);
    const double hi = std::min(b, s.times[k + 1]);
    if (hi > lo) acc += 0.5 * (hi - lo) * (value_at(s, k, lo) + value_at(s, k, hi));
    if (s.times[k + 1] >= b) break;
  }
  return acc;
}

double time_slack(const TimeSeries& s) {
  return 1e-12 * std::max(1.0, std::abs(s.times.back()));
}

}  // namespace

Field interpolate(const TimeSeries& series, double t) {
  require_series(series);
  const double slack = time_slack(series);
  if (t < series.times.front() - slack || t > series.times.back() + slack) {
    throw InvalidArgument("interpolate: time outside the series");
  }
  return value_at(series, segment_of(series, t), t);
}

Field steklov_average_at(const TimeSeries& series, double h, double t) {
  require_series(series);
  const double span = series.times.back() - series.times.front();
  if (!(h > 0.0) || h > span + time_slack(series)) {
    throw InvalidArgument("steklov_average: h must lie in (0, T]");
  }
  if (t < series.times.front() - time_slack(series) ||
      t + h > series.times.back() + time_slack(series)) {
    throw InvalidArgument("steklov_average: t + h beyond the series");
  }
  const double b = std::min(t + h, series.times.back());
  return integrate(series, t, b) / h;
}

TimeSeries steklov_average(const TimeSeries& series, double h) {
  require_series(series);
  const double span = series.times.back() - series.times.front();
  if (!(h > 0.0) || h > span + time_slack(series)) {
    throw InvalidArgument("steklov_average: h must lie in (0, T]");
  }
  TimeSeries out;
  const double last = series.times.back() - h + time_slack(series);
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double t = series.times[k];
    if (t > last) break;
    out.times.push_back(t);
    out.values.push_back(steklov_average_at(series, h, t));
  }
  return out;
}

double fit_gronwall_constant(const std::vector<double>& times, const std::vector<double>& F) {
  const double floor = 1e3 * std::numeric_limits<double>::epsilon();
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = 0; k < times.size() && k < F.size(); ++k) {
    if (!(F[k] > floor)) continue;
    const double y = std::log(F[k]);
    n += 1;
    st += times[k];
    sy += y;
    stt += times[k] * times[k];
    sty += times[k] * y;
  }
  if (n < 2) return 0.0;
  const double den = n * stt - st * st;
  if (den <= 0.0) return 0.0;
  return (n * sty - st * sy) / den;
}

void require_compatible(const Trajectory& a, const Trajectory& b) {
  std::vector<std::string> bad;
  if (a.snapshots.size() != b.snapshots.size()) bad.push_back("snapshot_count");
  if (a.alpha != b.alpha) bad.push_back("alpha");
  if (!a.snapshots.empty() && !b.snapshots.empty() &&
      a.snapshots[0].u.size() != b.snapshots[0].u.size()) {
    bad.push_back("grid");
  }
  if (a.snapshots.size() == b.snapshots.size()) {
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      const double ta = a.snapshots[k].time;
      const double tb = b.snapshots[k].time;
      if (std::abs(ta - tb) > 1e-12 * std::max(1.0, std::abs(ta))) {
        bad.push_back("times");
        break;
      }
    }
  }
  if (a.snapshots.empty()) bad.push_back("empty");
  if (!bad.empty()) {
    std::ostringstream os;
    os << "incompatible trajectories, mismatched:";
    for (const auto& k : bad) os << ' ' << k;
    throw InvalidArgument(os.str());
  }
}

std::vector<DifferencePair> differences(const Trajectory& traj1, const Trajectory& traj2) {
  require_compatible(traj1, traj2);
  std::vector<DifferencePair> out;
  out.reserve(traj1.snapshots.size());
  for (std::size_t k = 0; k < traj1.snapshots.size(); ++k) {
    out.push_back(make_difference(traj1.snapshots[k], traj2.snapshots[k], traj1.alpha));
  }
  return out;
}

double sign_check(const std::vector<DifferencePair>& pairs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) {
    for (Eigen::Index k = 0; k < p.w.size(); ++k) m = std::min(m, p.w[k] * p.dchi[k]);
  }
  return pairs.empty() ? 0.0 : m;
}

std::pair<EnergySeries, CertificateReport> gronwall_monitor(const Trajectory& traj1,
                                                            const Trajectory& traj2,
                                                            const Discretization& disc,
                                                            const BoundaryTags& tags,
                                                            const MonitorOptions& options) {
  require_compatible(traj1, traj2);
  const auto nn = static_cast<Eigen::Index>(disc.grid().num_nodes());
  if (traj1.snapshots[0].u.size() != nn) {
    throw InvalidArgument("gronwall_monitor: trajectories do not live on this grid");
  }
  const DualSolver dual(disc, tags, options.linear);
  const Field& m = disc.lumped_mass();
  const auto pairs = differences(traj1, traj2);

  EnergySeries es;
  CertificateReport rep;
  double solution_max = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    solution_max = std::max({solution_max, traj1.snapshots[k].u.maxCoeff(),
                             traj2.snapshots[k].u.maxCoeff()});
  }
  rep.solution_max = solution_max;
  const double area = disc.grid().geometry().area();
  const double s = traj1.alpha * solution_max + 1.0;
  rep.tol_unique = options.tol_unique.value_or(1e-6 * s * s * area);

  double cross_prev = 0.0;
  double F = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const DifferencePair& p = pairs[k];
    const Field v = dual.solve(p.eta);
    const DualCheck c = dual.check(v, p.eta);
    const double cross_now = p.w.cwiseProduct(p.dchi).dot(m);
    double cross = 0.0;
    if (k > 0) {
      const double dt = p.time - pairs[k - 1].time;
      F += 0.5 * dt * (es.E.back() + c.energy);
      cross = es.cross.back() + 0.5 * dt * (cross_prev + cross_now);
    }
    cross_prev = cross_now;
    es.times.push_back(p.time);
    es.E.push_back(c.energy);
    es.F.push_back(F);
    es.cross.push_back(cross);

    rep.energy_identity_max = std::max(rep.energy_identity_max, c.identity_error);
    rep.dual_stability_max = std::max(rep.dual_stability_max, c.stability_ratio);
    if (options.barriers != nullptr) {
      const auto o1 = check_sandwich(traj1.snapshots[k].u, options.barriers->lower,
                                     options.barriers->upper, options.barriers->tol);
      const auto o2 = check_sandwich(traj2.snapshots[k].u, options.barriers->lower,
                                     options.barriers->upper, options.barriers->tol);
      rep.ordering_violations =
          std::max({rep.ordering_violations, o1.below, o1.above, o2.below, o2.above});
    }
  }
  es.C_fit = fit_gronwall_constant(es.times, es.F);

  rep.sup_E = *std::max_element(es.E.begin(), es.E.end());
  rep.F_final = es.F.back();
  rep.C_fit = es.C_fit;
  rep.cross_term_min = *std::min_element(es.cross.begin(), es.cross.end());
  rep.sign_min = sign_check(pairs);
  rep.dual_stability_flag = rep.dual_stability_max > kDualStabilityFlag;
  rep.gronwall_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < es.E.size(); ++k) {
    rep.gronwall_margin =
        std::max(rep.gronwall_margin, es.E[k] + 2.0 * es.cross[k] - es.C_fit * es.F[k]);
  }
  rep.pass = std::isfinite(rep.sup_E) && rep.sup_E <= rep.tol_unique;
  return {std::move(es), rep};
}

std::pair<EnergySeries, CertificateReport> gronwall_monitor(const Trajectory& traj1,
                                                            const Trajectory& traj2,
                                                            const PermeabilityField& field,
                                                            const Grid& grid,
                                                            const BoundaryTags& tags) {
  const Discretization disc(grid, field);
  return gronwall_monitor(traj1, traj2, disc, tags);
}

OrderingReport check_sandwich(const Field& u, const Field& lower, const Field& upper, double tol) {
  if (u.size() != lower.size() || u.size() != upper.size()) {
    throw InvalidArgument("check_sandwich: field sizes differ");
  }
  OrderingReport r;
  if (u.size() > 0) {
    r.below = std::max(0.0, (lower - u).maxCoeff());
    r.above = std::max(0.0, (u - upper).maxCoeff());
  }
  r.pass = r.below <= tol && r.above <= tol;
  return r;
}

const char* to_string(ColumnState state) {
  switch (state) {
    case ColumnState::Crossing: return "crossing";
    case ColumnState::Wet: return "wet";
    case ColumnState::Dry: return "dry";
  }
  return "?";
}

std::vector<ColumnInterface> extract_free_boundary(const SolutionField& solution, const Grid& grid,
                                                   double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("extract_free_boundary: level must lie in (0, 1)");
  }
  if (solution.chi.size() != static_cast<Eigen::Index>(grid.num_nodes())) {
    throw InvalidArgument("extract_free_boundary: field size does not match the grid");
  }
  std::vector<ColumnInterface> out;
  out.reserve(static_cast<std::size_t>(grid.nx()) + 1);
  for (int i = 0; i <= grid.nx(); ++i) {
    ColumnInterface c;
    c.i = i;
    c.x1 = grid.node(i, 0).x1;
    bool any_above = false;
    bool any_below = false;
    for (int j = 0; j <= grid.ny(); ++j) {
      const double v = solution.chi[static_cast<Eigen::Index>(grid.index(i, j))];
      (v >= level ? any_above : any_below) = true;
    }
    if (!any_below) {
      c.state = ColumnState::Wet;
      c.height = grid.geometry().K;
    } else if (!any_above) {
      c.state = ColumnState::Dry;
      c.height = 0.0;
    } else {
      for (int j = grid.ny() - 1; j >= 0; --j) {
        const double a = solution.chi[static_cast<Eigen::Index>(grid.index(i, j))];
        const double b = solution.chi[static_cast<Eigen::Index>(grid.index(i, j + 1))];
        if ((a >= level) != (b >= level)) {
          const double theta = (a - level) / (a - b);
          c.state = ColumnState::Crossing;
          c.height = grid.node(i, j).x2 + theta * grid.h2();
          break;
        }
      }
    }
    out.push_back(c);
  }
  return out;
}

double strip_width(const Grid& grid, double eps) { return 2.0 * std::max(grid.h2(), eps); }

StripReport check_strips(const SolutionField& solution, const Grid& grid, double eps0, double eps,
                         double tol_chi, double tol_zero) {
  if (solution.u.size() != static_cast<Eigen::Index>(grid.num_nodes()) ||
      solution.chi.size() != solution.u.size()) {
    throw InvalidArgument("check_strips: field size does not match the grid");
  }
  StripReport r;
  r.delta = strip_width(grid, eps);
  const double K = grid.geometry().K;
  r.lower_min_u = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const double x2 = grid.node(n).x2;
    const auto e = static_cast<Eigen::Index>(n);
    if (x2 < eps0 - r.delta) {
      ++r.lower_nodes;
      r.lower_min_u = std::min(r.lower_min_u, solution.u[e]);
      r.lower_min_chi = std::min(r.lower_min_chi, solution.chi[e]);
    }
    if (x2 > K - eps0 + r.delta) {
      ++r.upper_nodes;
      r.upper_max_u = std::max(r.upper_max_u, solution.u[e]);
      r.upper_max_chi = std::max(r.upper_max_chi, solution.chi[e]);
    }
  }
  if (r.lower_nodes == 0) r.lower_min_u = 0.0;
  r.lower_wet = r.lower_nodes == 0 || r.lower_min_u > 0.0;
  r.lower_saturated = r.lower_min_chi >= 1.0 - tol_chi;
  r.upper_dry = r.upper_max_u <= tol_zero && r.upper_max_chi <= tol_chi;
  return r;
}

}  // namespace damflow
