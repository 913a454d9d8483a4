#include "damflow/data.hpp"

#include <algorithm>
#include <sstream>

#include "damflow/error.hpp"

namespace damflow {

double SolutionField::complementarity_residual() const {
  double worst = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) worst = std::max(worst, u[n] * (1.0 - chi[n]));
  return worst;
}

BoundaryHead hydrostatic_head(double k) {
  return [k](const Point& x) { return std::max(k - x.x2, 0.0); };
}

BoundaryHead dam_head(double left, double right, const DamGeometry& geometry) {
  const double L = geometry.L;
  return [=](const Point& x) {
    const double level = left + (right - left) * (x.x1 / L);
    return std::max(level - x.x2, 0.0);
  };
}

BarrierHeads make_barrier_data(double eps0, const DamGeometry& geometry) {
  if (!(eps0 > 0.0) || !(eps0 < 0.5 * geometry.K)) {
    std::ostringstream os;
    os << "barrier strip height eps0 must lie in (0, K/2) = (0, " << 0.5 * geometry.K
       << "), got " << eps0;
    throw InvalidArgument(os.str());
  }
  // On the top edge x2 = K both formulas already vanish.
  return {hydrostatic_head(eps0), hydrostatic_head(geometry.K - eps0)};
}

SolutionField hydrostatic_profile(double k, const Grid& grid) {
  if (!(k > 0.0) || !(k < grid.geometry().K)) {
    throw InvalidArgument("hydrostatic level k must lie in (0, K)");
  }
  SolutionField s;
  s.u.resize(static_cast<Eigen::Index>(grid.num_nodes()));
  s.chi.resize(s.u.size());
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const double x2 = grid.node(n).x2;
    const auto e = static_cast<Eigen::Index>(n);
    s.u[e] = std::max(k - x2, 0.0);
    s.chi[e] = (x2 < k) ? 1.0 : 0.0;
  }
  return s;
}

Field sample(const Grid& grid, const BoundaryHead& f) {
  Field out(static_cast<Eigen::Index>(grid.num_nodes()));
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) out[static_cast<Eigen::Index>(n)] = f(grid.node(n));
  return out;
}

double InitialValidation::max_violation() const {
  return std::max({u_below, u_above, chi_below, chi_above});
}

InitialValidation validate_initial(const ProblemData& data, const Field& v0, const Field& v1,
                                   const Field& gamma0, const Field& gamma1, double tol) {
  const auto n = data.u0.size();
  if (data.chi0.size() != n || v0.size() != n || v1.size() != n || gamma0.size() != n ||
      gamma1.size() != n) {
    throw InvalidArgument("validate_initial: field sizes differ");
  }
  InitialValidation r;
  r.u_below = std::max(0.0, (v0 - data.u0).maxCoeff());
  r.u_above = std::max(0.0, (data.u0 - v1).maxCoeff());
  r.chi_below = std::max(0.0, (gamma0 - data.chi0).maxCoeff());
  r.chi_above = std::max(0.0, (data.chi0 - gamma1).maxCoeff());
  r.u0_min = data.u0.minCoeff();
  r.u0_max = data.u0.maxCoeff();
  r.chi0_min = data.chi0.minCoeff();
  r.chi0_max = data.chi0.maxCoeff();
  r.bounds_ok = r.u0_min >= -tol && r.u0_max <= data.M + tol && r.chi0_min >= -tol &&
                r.chi0_max <= 1.0 + tol;
  r.pass = r.bounds_ok && r.max_violation() <= tol;
  return r;
}

}  // namespace damflow
