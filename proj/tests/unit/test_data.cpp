#include <doctest.h>

#include <random>

#include "damflow/data.hpp"
#include "damflow/error.hpp"

using namespace damflow;

TEST_CASE("barrier heads at sample nodes") {
  const DamGeometry geo{1.0, 1.0};
  const BarrierHeads b = make_barrier_data(0.1, geo);
  CHECK(b.phi0({0.0, 0.05}) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(b.phi1({0.0, 0.05}) == doctest::Approx(0.85).epsilon(1e-14));
  CHECK(b.phi0({0.5, 1.0}) == 0.0);
  CHECK(b.phi1({0.5, 1.0}) == 0.0);
}

TEST_CASE("barrier data requires eps0 below K/2") {
  CHECK_THROWS_AS(make_barrier_data(0.6, DamGeometry{1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(make_barrier_data(0.0, DamGeometry{1.0, 1.0}), InvalidArgument);
}

TEST_CASE("barrier heads are ordered") {
  const DamGeometry geo{2.0, 1.5};
  for (double e0 : {0.01, 0.2, 0.5, 0.74}) {
    const BarrierHeads b = make_barrier_data(e0, geo);
    for (int k = 0; k <= 100; ++k) {
      const double t = 1.5 * k / 100.0;
      for (const Point x : {Point{0.0, t}, Point{2.0, t}, Point{t, 1.5}}) CHECK(b.phi0(x) <= b.phi1(x));
    }
  }
}

TEST_CASE("hydrostatic profile values") {
  const Grid g(DamGeometry{1.0, 1.0}, 20, 20);
  const SolutionField h = hydrostatic_profile(0.1, g);
  CHECK(h.u[g.index(10, 1)] == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(h.chi[g.index(10, 1)] == 1.0);
  CHECK(h.u[g.index(10, 4)] == 0.0);
  CHECK(h.chi[g.index(10, 4)] == 0.0);
  const SolutionField m = hydrostatic_profile(0.5, g);
  CHECK(m.u[g.index(10, 10)] == 0.0);
  CHECK(m.chi[g.index(10, 10)] == 0.0);
}

TEST_CASE("hydrostatic profile is complementary and ordered in the level") {
  const Grid g(DamGeometry{1.0, 2.0}, 7, 13);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> lv(0.01, 1.99);
  for (int trial = 0; trial < 30; ++trial) {
    double k = lv(rng), k2 = lv(rng);
    if (k > k2) std::swap(k, k2);
    const SolutionField a = hydrostatic_profile(k, g);
    const SolutionField b = hydrostatic_profile(k2, g);
    for (Eigen::Index n = 0; n < a.u.size(); ++n) {
      CHECK(a.u[n] * (1.0 - a.chi[n]) == 0.0);
      CHECK(a.u[n] <= b.u[n]);
    }
  }
}

TEST_CASE("initial data validation") {
  const Grid g(DamGeometry{1.0, 1.0}, 8, 8);
  const SolutionField lo = hydrostatic_profile(0.25, g);
  const SolutionField hi = hydrostatic_profile(0.75, g);
  ProblemData d;
  d.M = 1.0;

  d.u0 = lo.u;
  d.chi0 = lo.chi;
  InitialValidation r = validate_initial(d, lo.u, hi.u, lo.chi, hi.chi);
  CHECK(r.pass);
  CHECK(r.max_violation() == 0.0);

  d.u0 = 0.5 * (lo.u + hi.u);
  d.chi0 = hi.chi;
  CHECK(validate_initial(d, lo.u, hi.u, lo.chi, hi.chi).pass);

  d.u0 = hi.u;
  d.u0[g.index(4, 4)] += 0.1;
  r = validate_initial(d, lo.u, hi.u, lo.chi, hi.chi);
  CHECK_FALSE(r.pass);
  CHECK(r.max_violation() >= 0.1 - 1e-15);
}
