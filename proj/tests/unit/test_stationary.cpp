#include <doctest.h>

#include <random>

#include "damflow/error.hpp"
#include "damflow/stationary.hpp"
#include "oracle.hpp"

using namespace damflow;

namespace {

Field random_field(const Grid& g, double lo, double hi, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Field v(static_cast<Eigen::Index>(g.num_nodes()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = u(rng);
  return v;
}

double max_abs_free(const Field& a, const Field& b, const BoundaryTags& tags) {
  double m = 0.0;
  for (std::size_t n = 0; n < tags.size(); ++n) {
    if (!tags.is_dirichlet(n)) m = std::max(m, std::abs(a[static_cast<Eigen::Index>(n)] - b[static_cast<Eigen::Index>(n)]));
  }
  return m;
}

}  // namespace

TEST_CASE("residual matches a dense quadrature oracle") {
  const DamGeometry geo{1.0, 1.0};
  const double eps = 0.1;
  // One regime per field so the integrand is polynomial in every cell and
  // both quadratures are exact: dry, on the ramp, saturated.
  const std::pair<double, double> regimes[] = {{-0.5, 0.0}, {0.0, eps}, {eps, 1.0}};
  const PermeabilityField fields[] = {PermeabilityField::identity(geo),
                                      PermeabilityField::layered(geo, 1.0, 1.0, 1.0)};
  for (int n : {2, 5}) {
    const Grid g(geo, n, n);
    const BoundaryTags tags = classify_boundary(g, hydrostatic_head(0.5));
    for (const auto& a : fields) {
      unsigned seed = 1;
      for (const auto& [lo, hi] : regimes) {
        const Field v = random_field(g, lo, hi, seed++);
        const Field r = assemble_stationary_residual(v, a, g, tags, {eps, 0.0});
        const Field ref = oracle::weak_residual(g, a, v, eps);
        CHECK(max_abs_free(r, ref, tags) <= 1e-13);
        for (std::size_t k = 0; k < g.num_nodes(); ++k) {
          if (tags.is_dirichlet(k)) CHECK(r[static_cast<Eigen::Index>(k)] == 0.0);
        }
      }
    }
  }
}

TEST_CASE("no fluid gives zero residual") {
  const Grid g(DamGeometry{}, 6, 6);
  const BoundaryTags tags = classify_boundary(g, [](const Point&) { return 0.0; });
  const Field v = Field::Zero(static_cast<Eigen::Index>(g.num_nodes()));
  const Field r = assemble_stationary_residual(v, PermeabilityField::identity(DamGeometry{}), g, tags, {0.01, 0.0});
  CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hydrostatic state has zero residual for any admissible permeability") {
  const DamGeometry geo{1.5, 1.0};
  const Grid g(geo, 24, 16);
  const PermeabilityField fields[] = {
      PermeabilityField::identity(geo), PermeabilityField::layered(geo, 2.0, 1.0, 1.0),
      PermeabilityField::smooth_analytic(geo, 1.0, 0.3, 1.0, 0.5)};
  for (int jk : {3, 8, 13}) {
    const double k = jk * g.h2();
    // Below 0.211 h2 every wet quadrature value sits on the saturated branch.
    const double eps = 0.2 * g.h2();
    const SolutionField h = hydrostatic_profile(k, g);
    const BoundaryTags tags = classify_boundary(g, hydrostatic_head(k));
    for (const auto& a : fields) {
      const Field r = assemble_stationary_residual(h.u, a, g, tags, {eps, 0.0});
      CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("hydrostatic solve at eps 1e-2 on 64x64") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 64, 64);
  const auto exact = [](Point x) { return std::max(0.0, 0.5 - x.x2); };
  for (const auto& a : {PermeabilityField::identity(geo), PermeabilityField::layered(geo, 1.0, 1.0, 1.0)}) {
    const StationarySolve s = solve_stationary(hydrostatic_head(0.5), a, g, {1e-2, 0.0});
    CHECK((s.v - oracle::nodal(g, exact)).cwiseAbs().maxCoeff() <= 1e-2);
    CHECK(s.v.minCoeff() >= 0.0);
    CHECK(s.residual_norm <= 1e-9 * (1.0 + s.initial_residual));
  }
}

TEST_CASE("hydrostatic solve is exact when eps is below the grid threshold") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 32, 32);
  const StationarySolve s = solve_stationary(hydrostatic_head(0.5), PermeabilityField::identity(geo), g,
                                             {0.2 / 32, 0.0});
  CHECK((s.v - hydrostatic_profile(0.5, g).u).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("barrier solutions are ordered and fill their strips") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 32, 32);
  const auto a = PermeabilityField::layered(geo, 1.0, 1.0, 1.0);
  const BarrierHeads b = make_barrier_data(0.1, geo);
  const PenaltyConfig pc{0.025, 0.0};
  const StationarySolve v0 = solve_stationary(b.phi0, a, g, pc);
  const StationarySolve v1 = solve_stationary(b.phi1, a, g, pc);
  const double tol = computed_order_tolerance(geo);
  CHECK((v0.v - v1.v).maxCoeff() <= tol);
  // Both envelopes hold up to the O(eps) penalization error, not to tol.
  CHECK((sample(g, b.phi0) - v0.v).maxCoeff() <= pc.eps);
  CHECK((v1.v - sample(g, b.phi1)).maxCoeff() <= pc.eps);
}

TEST_CASE("monotone in the boundary data") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 24, 24);
  const auto a = PermeabilityField::identity(geo);
  const PenaltyConfig pc{0.04, 0.0};
  const double tol = computed_order_tolerance(geo);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.1, 0.7);
  for (int trial = 0; trial < 4; ++trial) {
    const double l = u(rng), r = u(rng);
    const double dl = 0.25 * u(rng), dr = 0.25 * u(rng);
    const StationarySolve lo = solve_stationary(dam_head(l, r, geo), a, g, pc);
    const StationarySolve hi = solve_stationary(dam_head(l + dl, r + dr, geo), a, g, pc);
    CHECK((lo.v - hi.v).maxCoeff() <= tol);
  }
}

TEST_CASE("dam benchmark converges under refinement") {
  const DamGeometry geo{1.0, 1.0};
  const auto a = PermeabilityField::identity(geo);
  const PenaltyConfig pc{0.05, 0.0};
  const BoundaryHead phi = dam_head(0.8, 0.2, geo);
  const Grid fine(geo, 128, 128);
  const StationarySolve ref = solve_stationary(phi, a, fine, pc);

  double prev = 1e300;
  for (int n : {16, 32}) {
    const Grid g(geo, n, n);
    const StationarySolve s = solve_stationary(phi, a, g, pc);
    // Coarse interpolant against the fine one, on the fine quadrature.
    double sum = 0.0;
    oracle::for_each_gauss_point(fine, [&](int ci, int cj, double s1, double t1, Point x, double w) {
      const int ci_c = std::min(n - 1, static_cast<int>(x.x1 / g.h1()));
      const int cj_c = std::min(n - 1, static_cast<int>(x.x2 / g.h2()));
      const double sc = x.x1 / g.h1() - ci_c;
      const double tc = x.x2 / g.h2() - cj_c;
      const double d = oracle::eval_cell(g, s.v, ci_c, cj_c, sc, tc).value -
                       oracle::eval_cell(fine, ref.v, ci, cj, s1, t1).value;
      sum += w * d * d;
    });
    const double err = std::sqrt(sum);
    CHECK(err <= g.h1());
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("partially saturated nodes shrink with eps") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 64, 64);
  const auto a = PermeabilityField::identity(geo);
  const BoundaryHead phi = dam_head(0.8, 0.2, geo);
  int prev = 1 << 30;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    const StationarySolve s = solve_stationary(phi, a, g, {eps, 0.0});
    int mid = 0;
    for (Eigen::Index k = 0; k < s.chi.size(); ++k) {
      if (s.chi[k] > 1e-2 && s.chi[k] < 1 - 1e-2) ++mid;
      // chi is H_eps(v) at the nodes, so no node above eps is unsaturated.
      if (s.v[k] > eps) CHECK(s.chi[k] == 1.0);
    }
    CHECK(mid <= prev);
    prev = mid;
  }
}

TEST_CASE("direct and Krylov linear solvers agree") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 24, 24);
  const auto a = PermeabilityField::layered(geo, 1.0, 1.0, 1.0);
  SolverParams direct;
  SolverParams krylov;
  krylov.linear = LinearSolverKind::Krylov;
  const StationarySolve s1 = solve_stationary(dam_head(0.7, 0.3, geo), a, g, {0.04, 0.0}, direct);
  const StationarySolve s2 = solve_stationary(dam_head(0.7, 0.3, geo), a, g, {0.04, 0.0}, krylov);
  CHECK((s1.v - s2.v).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("iteration cap without fallback reports nonconvergence") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 16, 16);
  SolverParams p;
  p.max_iters = 1;
  p.fallback = false;
  p.polish_iters = 0;
  CHECK_THROWS_AS(solve_stationary(dam_head(0.8, 0.2, geo), PermeabilityField::identity(geo), g,
                                   {0.05, 0.0}, p),
                  NonConvergence);
}

TEST_CASE("initial guess is exact on the Dirichlet boundary") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 10, 10);
  const BoundaryHead phi = dam_head(0.6, 0.3, geo);
  const BoundaryTags tags = classify_boundary(g, phi);
  const Field v = stationary_initial_guess(g, tags, phi);
  for (std::size_t n = 0; n < g.num_nodes(); ++n) {
    if (tags.is_dirichlet(n)) CHECK(v[static_cast<Eigen::Index>(n)] == doctest::Approx(phi(g.node(n))));
    CHECK(v[static_cast<Eigen::Index>(n)] >= 0.0);
    CHECK(v[static_cast<Eigen::Index>(n)] <= geo.K);
  }
}
