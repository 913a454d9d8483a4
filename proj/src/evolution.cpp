#include "damflow/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "damflow/error.hpp"

namespace damflow {

void EvolutionConfig::validate() const {
  penalty.validate();
  solver.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step dt must be > 0");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  if (!(time_reg >= 0.0)) throw InvalidArgument("time regularization must be >= 0");
  if (max_dt_halvings < 0) throw InvalidArgument("max_dt_halvings must be >= 0");
}

EvolutionConfig make_evolution_config(double T, double dt, const PenaltyConfig& penalty) {
  if (!(T > 0.0) || !(dt > 0.0)) throw InvalidArgument("T and dt must be > 0");
  const double ratio = T / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - T) > 1e-12 * T) {
    std::ostringstream os;
    os << "T / dt must be an integer: T=" << T << ", dt=" << dt << ", T/dt=" << ratio;
    throw InvalidArgument(os.str());
  }
  EvolutionConfig c;
  c.dt = dt;
  c.n_steps = static_cast<int>(n);
  c.penalty = penalty;
  return c;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.time);
  return t;
}

double Trajectory::max_mass_balance() const {
  double worst = 0.0;
  for (const auto& d : diagnostics) worst = std::max(worst, d.mass_balance);
  return worst;
}

double Trajectory::max_complementarity() const {
  double worst = 0.0;
  for (const auto& s : snapshots) worst = std::max(worst, s.complementarity_residual());
  return worst;
}

std::pair<Field, Field> project_initial(const ProblemData& data, const StationarySolve& v1eps,
                                        const PenaltyConfig& config) {
  config.validate();
  const auto n = data.u0.size();
  if (data.chi0.size() != n || v1eps.v.size() != n) {
    throw InvalidArgument("project_initial: field sizes differ");
  }
  if (v1eps.eps_used != config.eps) {
    throw InvalidArgument("project_initial: barrier solved with a different eps");
  }
  Field u = data.u0.cwiseMin(v1eps.v);
  Field chi = data.chi0.cwiseMin(nodal_saturation(v1eps.v, config.eps));
  return {std::move(u), std::move(chi)};
}

EvolutionStepper::EvolutionStepper(const Discretization& disc, const BoundaryTags& tags,
                                   BoundaryHead phi, EvolutionConfig config)
    : disc_(disc), tags_(tags), phi_(std::move(phi)), config_(std::move(config)), dofs_(tags) {
  config_.validate();
  if (tags_.size() != disc_.grid().num_nodes()) {
    throw InvalidArgument("EvolutionStepper: boundary tags do not match the grid");
  }
  dirichlet_values_ = Field::Zero(static_cast<Eigen::Index>(tags_.size()));
  for (std::size_t n : dofs_.dirichlet_nodes()) {
    dirichlet_values_[static_cast<Eigen::Index>(n)] = phi_(disc_.grid().node(n));
  }
}

Field EvolutionStepper::conserved(const Field& u, const Field& chi) const {
  return config_.penalty.alpha * u + chi;
}

Field EvolutionStepper::storage(const Field& u, const Field& g_old) const {
  const Field dg = conserved(u, nodal_saturation(u, config_.penalty.eps)) - g_old;
  if (config_.mass_lumping) return disc_.lumped_mass().cwiseProduct(dg);
  return disc_.consistent_mass() * dg;
}

Field EvolutionStepper::boundary_flux(const Field& u, const Field& g_old, const Field& reg,
                                      double dt) const {
  const Field total = (storage(u, g_old) + reg) / dt + disc_.weak_residual(u, config_.penalty.eps);
  Field out = Field::Zero(u.size());
  for (std::size_t n : dofs_.dirichlet_nodes()) {
    const auto e = static_cast<Eigen::Index>(n);
    out[e] = total[e];
  }
  return out;
}

EvolutionStepper::Attempt EvolutionStepper::solve_substep(const SolutionField& state,
                                                          const Field& prev_u, double dt) const {
  const double eps = config_.penalty.eps;
  const double alpha = config_.penalty.alpha;
  const double inv_eps = 1.0 / eps;
  const Field g_old = conserved(state.u, state.chi);
  const Field& m = disc_.lumped_mass();
  const double reg_c = config_.time_reg;
  const Field reg_const = reg_c * m.cwiseProduct(prev_u - 2.0 * state.u);

  auto storage_derivative = [&](const Field& u) {
    Field d(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      d[k] = alpha + detail::heaviside_derivative(u[k], eps, inv_eps);
    }
    return d;
  };
  // Storage, stiffness and regularization; gravity is added by the callers.
  auto base_residual = [&](const Field& u) {
    Field r = storage(u, g_old) / dt + disc_.stiffness() * u;
    if (reg_c > 0.0) r += (reg_c * m.cwiseProduct(u) + reg_const) / dt;
    return r;
  };
  auto base_jacobian = [&](const Field& u) {
    const Field d = storage_derivative(u);
    SparseMatrix S;
    if (config_.mass_lumping) {
      Field diag = m.cwiseProduct(d) / dt;
      if (reg_c > 0.0) diag += reg_c * m / dt;
      S = disc_.stiffness();
      for (Eigen::Index k = 0; k < u.size(); ++k) S.coeffRef(k, k) += diag[k];
    } else {
      S = disc_.stiffness() + SparseMatrix((disc_.consistent_mass() * d.asDiagonal()) / dt);
      if (reg_c > 0.0) {
        for (Eigen::Index k = 0; k < u.size(); ++k) S.coeffRef(k, k) += reg_c * m[k] / dt;
      }
    }
    return S;
  };

  SolverParams inner = config_.solver;
  inner.method = NonlinearMethod::Newton;
  inner.fallback = false;

  // Storage-nonlinear solve with the gravity term frozen: the Picard map.
  auto frozen_solve = [&](const Field& start, const Field& gravity) {
    Field v = start;
    auto res = [&](const Field& u) { Field r = base_residual(u); r += gravity; return r; };
    auto jac = [&](const Field& u) { return dofs_.restrict(base_jacobian(u)); };
    NonlinearResult nr = newton_solve(v, dofs_, res, jac, inner);
    return std::make_pair(std::move(v), nr);
  };

  Field u0 = state.u;
  for (std::size_t n : dofs_.dirichlet_nodes()) {
    const auto e = static_cast<Eigen::Index>(n);
    u0[e] = dirichlet_values_[e];
  }

  Attempt out;
  auto residual = [&](const Field& u) {
    Field r = base_residual(u);
    r += disc_.gravity(u, eps);
    return r;
  };
  auto jacobian = [&](const Field& u) {
    SparseMatrix J = base_jacobian(u) + disc_.gravity_jacobian(u, eps);
    return dofs_.restrict(J);
  };
  auto picard = [&](const Field& u) { return frozen_solve(u, disc_.gravity(u, eps)).first; };

  out.u = u0;
  out.result = solve_nonlinear(out.u, dofs_, residual, jacobian, picard, config_.solver);
  return out;
}

void EvolutionStepper::advance_recursive(const SolutionField& state, const Field& prev_u,
                                         double dt, int depth, int step_index,
                                         SolutionField& out, StepDiagnostics& diag) const {
  Attempt a = solve_substep(state, prev_u, dt);
  if (!a.result.converged) {
    if (depth >= config_.max_dt_halvings) {
      std::ostringstream os;
      os << "time step " << step_index << " failed after " << depth
         << " dt halvings (residual " << a.result.residual << ")";
      throw StepFailure(os.str(), step_index, a.result.residual);
    }
    SolutionField mid;
    advance_recursive(state, prev_u, 0.5 * dt, depth + 1, step_index, mid, diag);
    advance_recursive(mid, state.u, 0.5 * dt, depth + 1, step_index, out, diag);
    return;
  }

  const double eps = config_.penalty.eps;
  const Field g_old = conserved(state.u, state.chi);
  const Field& m = disc_.lumped_mass();
  Field reg = Field::Zero(a.u.size());
  if (config_.time_reg > 0.0) {
    reg = config_.time_reg * m.cwiseProduct(a.u - 2.0 * state.u + prev_u);
  }
  const Field S = storage(a.u, g_old);
  const Field b = boundary_flux(a.u, g_old, reg, dt);

  double stored = 0.0;
  double inflow = 0.0;
  double scale = 0.0;
  const Field g_new = conserved(a.u, nodal_saturation(a.u, eps));
  for (Eigen::Index k = 0; k < a.u.size(); ++k) {
    stored += S[k] + reg[k];
    scale += m[k] * std::abs(g_new[k]);
  }
  for (std::size_t n : dofs_.dirichlet_nodes()) {
    const auto e = static_cast<Eigen::Index>(n);
    inflow += dt * b[e];
    scale += dt * std::abs(b[e]);
    if (tags_.label(n) == BoundaryLabel::DirichletDry) {
      diag.max_dry_flux = std::max(diag.max_dry_flux, b[e]);
    }
  }
  diag.storage_change += stored;
  diag.boundary_inflow += inflow;
  const double rel = std::abs(stored - inflow) / (scale > 0.0 ? scale : 1.0);
  diag.mass_balance = std::max(diag.mass_balance, rel);
  diag.newton_iters += a.result.iterations;
  diag.picard_iters += a.result.picard_iterations;
  diag.used_fallback = diag.used_fallback || a.result.used_fallback;
  diag.initial_residual = std::max(diag.initial_residual, a.result.initial_residual);
  diag.residual = std::max(diag.residual, a.result.residual);
  if (depth > 0) diag.substeps = std::max(diag.substeps, 1 << depth);

  for (Eigen::Index k = 0; k < a.u.size(); ++k) {
    if (a.u[k] < 0.0 && a.u[k] > -config_.solver.tol_neg) a.u[k] = 0.0;
  }
  out.u = std::move(a.u);
  out.chi = nodal_saturation(out.u, eps);
  out.time = state.time + dt;
}

SolutionField EvolutionStepper::advance(const SolutionField& state, const Field* previous_u,
                                        int step_index, StepDiagnostics* diag) const {
  const auto n = static_cast<Eigen::Index>(tags_.size());
  if (state.u.size() != n || state.chi.size() != n) {
    throw InvalidArgument("EvolutionStepper::advance: state size does not match the grid");
  }
  if (previous_u != nullptr && previous_u->size() != n) {
    throw InvalidArgument("EvolutionStepper::advance: previous state size does not match the grid");
  }
  StepDiagnostics d;
  d.step = step_index;
  SolutionField out;
  advance_recursive(state, previous_u ? *previous_u : state.u, config_.dt, 0, step_index, out, d);
  out.time = state.time + config_.dt;
  d.time = out.time;
  d.outflow_ok = d.max_dry_flux <= config_.tol_flux;
  if (diag) *diag = d;
  return out;
}

SolutionField step(const SolutionField& state, const EvolutionConfig& config,
                   const PermeabilityField& field, const Grid& grid, const BoundaryTags& tags,
                   const BoundaryHead& phi, StepDiagnostics* diag) {
  const Discretization disc(grid, field);
  const EvolutionStepper stepper(disc, tags, phi, config);
  return stepper.advance(state, nullptr, 0, diag);
}

Trajectory solve_unsteady(const ProblemData& data, const Discretization& disc,
                          const EvolutionConfig& config, const StationarySolve* v1eps) {
  config.validate();
  if (data.alpha != config.penalty.alpha) {
    throw InvalidArgument("solve_unsteady: data alpha differs from the penalty configuration");
  }
  const auto n = static_cast<Eigen::Index>(disc.grid().num_nodes());
  if (data.u0.size() != n || data.chi0.size() != n) {
    throw InvalidArgument("solve_unsteady: initial data size does not match the grid");
  }
  const BoundaryTags tags = classify_boundary(disc.grid(), data.phi);
  const EvolutionStepper stepper(disc, tags, data.phi, config);

  Trajectory traj;
  traj.alpha = config.penalty.alpha;
  traj.eps = config.penalty.eps;
  traj.dt = config.dt;
  traj.snapshots.reserve(static_cast<std::size_t>(config.n_steps) + 1);
  traj.diagnostics.reserve(static_cast<std::size_t>(config.n_steps));

  SolutionField s0;
  if (v1eps != nullptr) {
    auto [u, chi] = project_initial(data, *v1eps, config.penalty);
    s0.u = std::move(u);
    s0.chi = std::move(chi);
  } else {
    s0.u = data.u0;
    s0.chi = data.chi0;
  }
  s0.time = 0.0;
  traj.snapshots.push_back(std::move(s0));

  for (int k = 1; k <= config.n_steps; ++k) {
    const SolutionField& cur = traj.snapshots.back();
    const Field* prev = k >= 2 ? &traj.snapshots[traj.snapshots.size() - 2].u : nullptr;
    StepDiagnostics d;
    SolutionField next = stepper.advance(cur, prev, k, &d);
    // Pin the time grid to k * dt so repeated additions do not drift.
    next.time = k * config.dt;
    d.time = next.time;
    traj.diagnostics.push_back(d);
    traj.snapshots.push_back(std::move(next));
  }
  return traj;
}

Trajectory solve_unsteady(const ProblemData& data, const PermeabilityField& field,
                          const Grid& grid, const EvolutionConfig& config,
                          const StationarySolve* v1eps) {
  return solve_unsteady(data, Discretization(grid, field), config, v1eps);
}

}  // namespace damflow
