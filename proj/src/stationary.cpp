#include "damflow/stationary.hpp"

#include <algorithm>
#include <sstream>

#include "damflow/error.hpp"

namespace damflow {

Field assemble_stationary_residual(const Field& v, const Discretization& disc,
                                   const BoundaryTags& tags, const PenaltyConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(disc.grid().num_nodes());
  if (v.size() != n || static_cast<Eigen::Index>(tags.size()) != n) {
    throw InvalidArgument("assemble_stationary_residual: field size does not match the grid");
  }
  Field r = disc.weak_residual(v, config.eps);
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (tags.is_dirichlet(k)) r[static_cast<Eigen::Index>(k)] = 0.0;
  }
  return r;
}

Field assemble_stationary_residual(const Field& v, const PermeabilityField& field,
                                   const Grid& grid, const BoundaryTags& tags,
                                   const PenaltyConfig& config) {
  if (v.size() != static_cast<Eigen::Index>(grid.num_nodes())) {
    throw InvalidArgument("assemble_stationary_residual: field size does not match the grid");
  }
  return assemble_stationary_residual(v, Discretization(grid, field), tags, config);
}

Field stationary_initial_guess(const Grid& grid, const BoundaryTags& tags, const BoundaryHead& phi) {
  const double K = grid.geometry().K;
  double level = 0.0;
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    if (!tags.is_dirichlet(n)) continue;
    const Point x = grid.node(n);
    const double h = phi(x);
    if (h > 0.0) level = std::max(level, h + x.x2);
  }
  Field v(static_cast<Eigen::Index>(grid.num_nodes()));
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Point x = grid.node(n);
    const auto e = static_cast<Eigen::Index>(n);
    v[e] = tags.is_dirichlet(n) ? phi(x) : std::clamp(level - x.x2, 0.0, K);
  }
  return v;
}

Field nodal_saturation(const Field& v, double eps) {
  const double inv = 1.0 / eps;
  return v.unaryExpr([inv](double s) { return detail::heaviside(s, inv); });
}

StationarySolve solve_stationary(const Discretization& disc, const BoundaryTags& tags,
                                 const BoundaryHead& phi, const PenaltyConfig& config,
                                 const SolverParams& params) {
  config.validate();
  params.validate();
  const Grid& grid = disc.grid();
  if (tags.size() != grid.num_nodes()) {
    throw InvalidArgument("solve_stationary: boundary tags do not match the grid");
  }
  const double eps = config.eps;
  const DofMap dofs(tags);
  const SparseMatrix Kff = dofs.restrict(disc.stiffness());

  Field v = stationary_initial_guess(grid, tags, phi);

  auto residual = [&](const Field& u) { return disc.weak_residual(u, eps); };
  auto jacobian = [&](const Field& u) {
    SparseMatrix J = disc.stiffness() + disc.gravity_jacobian(u, eps);
    return dofs.restrict(J);
  };
  // chi frozen at the quadrature points of u: K u~ = -g(u).
  auto picard = [&](const Field& u) {
    Field next = u;
    for (std::size_t k : dofs.free_nodes()) next[static_cast<Eigen::Index>(k)] = 0.0;
    const Field rhs = -dofs.restrict(disc.stiffness() * next + disc.gravity(u, eps));
    dofs.scatter(solve_linear(Kff, rhs, params.linear, true, params.krylov_tol), next);
    return next;
  };

  const NonlinearResult nr = solve_nonlinear(v, dofs, residual, jacobian, picard, params);
  if (!nr.converged) {
    std::ostringstream os;
    os << "stationary solve did not converge (eps=" << eps << ", residual " << nr.residual
       << ", initial " << nr.initial_residual << ")";
    throw NonConvergence(os.str(), nr.residual);
  }

  StationarySolve out;
  out.min_before_clamp = v.minCoeff();
  if (out.min_before_clamp < -params.tol_neg) {
    std::ostringstream os;
    os << "stationary solution undershoots zero by " << -out.min_before_clamp
       << " (tolerance " << params.tol_neg << ")";
    throw NonConvergence(os.str(), nr.residual);
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v[k] < 0.0) v[k] = 0.0;
  }
  out.v = std::move(v);
  out.chi = nodal_saturation(out.v, eps);
  out.residual_norm = dofs.restrict(residual(out.v)).norm();
  out.initial_residual = nr.initial_residual;
  out.newton_iters = nr.iterations;
  out.picard_iters = nr.picard_iterations;
  out.used_fallback = nr.used_fallback;
  out.eps_used = eps;
  return out;
}

StationarySolve solve_stationary(const BoundaryHead& phi, const PermeabilityField& field,
                                 const Grid& grid, const PenaltyConfig& config,
                                 const SolverParams& params) {
  const BoundaryTags tags = classify_boundary(grid, phi);
  return solve_stationary(Discretization(grid, field), tags, phi, config, params);
}

}  // namespace damflow
