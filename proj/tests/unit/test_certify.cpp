#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "damflow/certify.hpp"
#include "damflow/error.hpp"
#include "oracle.hpp"

using namespace damflow;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_field(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Field v(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = u(rng);
  return v;
}

TimeSeries series_of(const std::vector<double>& times, const std::function<Field(double)>& f) {
  TimeSeries s;
  s.times = times;
  for (double t : times) s.values.push_back(f(t));
  return s;
}

Trajectory random_trajectory(const Grid& g, double eps, double alpha, unsigned seed, int n = 6) {
  Trajectory t;
  t.alpha = alpha;
  t.eps = eps;
  t.dt = 0.1;
  for (int k = 0; k <= n; ++k) {
    SolutionField s;
    s.u = random_field(g.num_nodes(), -0.05, 0.3, seed + 31 * k);
    s.chi = nodal_saturation(s.u, eps);
    s.time = 0.1 * k;
    t.snapshots.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("zero load gives zero dual solution") {
  const DamGeometry geo{};
  const Grid g(geo, 8, 8);
  const Discretization d(g, PermeabilityField::identity(geo));
  const DualSolver dual(d, classify_boundary(g, hydrostatic_head(0.5)));
  const Field v = dual.solve(Field::Zero(static_cast<Eigen::Index>(g.num_nodes())));
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dual solver converges at second order for a manufactured solution") {
  const DamGeometry geo{1.0, 1.0};
  const auto exact = [&](Point x) { return std::sin(kPi * x.x1 / geo.L) * std::cos(kPi * x.x2 / (2 * geo.K)); };
  const double c = kPi * kPi * (1 / (geo.L * geo.L) + 1 / (4 * geo.K * geo.K));
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const Grid g(geo, n, n);
    const auto a = PermeabilityField::identity(geo);
    const Field eta = oracle::nodal(g, [&](Point x) { return c * exact(x); });
    const Field v = solve_dual(eta, a, g, classify_boundary(g, hydrostatic_head(0.5)));
    err.push_back(oracle::l2_error(g, v, exact));
  }
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double ratio = err[k - 1] / err[k];
    CHECK(ratio >= 3.6);
    CHECK(ratio <= 4.4);
  }
}

TEST_CASE("discrete energy identity for every solve") {
  const DamGeometry geo{2.0, 1.0};
  const Grid g(geo, 20, 10);
  const Discretization d(g, PermeabilityField::smooth_analytic(geo, 1.0, 0.2, 1.3, 0.4));
  const DualSolver dual(d, classify_boundary(g, dam_head(0.6, 0.2, geo)));
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const Field eta = random_field(g.num_nodes(), -1.0, 1.0, seed);
    const Field v = dual.solve(eta);
    const DualCheck chk = dual.check(v, eta);
    CHECK(chk.identity_error <= 1e-12);
    CHECK(chk.energy > 0.0);
    CHECK(chk.stability_ratio <= kDualStabilityFlag);
  }
}

TEST_CASE("energy of simple fields and dense oracle") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 12, 12);
  const auto id = PermeabilityField::identity(geo);
  CHECK(energy(Field::Zero(static_cast<Eigen::Index>(g.num_nodes())), id, g) == 0.0);
  CHECK(energy(oracle::nodal(g, [](Point x) { return x.x2; }), id, g) == doctest::Approx(1.0).epsilon(1e-13));
  const auto lay = PermeabilityField::layered(geo, 1.0, 1.0, 1.0);
  const Field v = random_field(g.num_nodes(), -1.0, 1.0, 4);
  const double ref = oracle::energy(g, lay, v);
  CHECK(std::abs(energy(v, lay, g) - ref) <= 1e-13 * ref);
}

TEST_CASE("steklov average of constant and linear series") {
  const std::vector<double> times{0.0, 0.1, 0.25, 0.3, 0.6, 1.0};
  const TimeSeries cst = series_of(times, [](double) { return Field::Constant(3, 2.5); });
  const TimeSeries lin = series_of(times, [](double t) { return Field::Constant(2, t); });
  for (double h : {0.05, 0.2, 0.7}) {
    const TimeSeries a = steklov_average(cst, h);
    // Quadrature weights sum to one only up to a few ulps.
    for (const auto& v : a.values) CHECK((v.array() - 2.5).abs().maxCoeff() <= 1e-14);
    const TimeSeries b = steklov_average(lin, h);
    for (std::size_t k = 0; k < b.times.size(); ++k) {
      CHECK(b.times[k] <= 1.0 - h + 1e-12);
      CHECK((b.values[k].array() - (b.times[k] + h / 2)).abs().maxCoeff() <= 1e-15);
    }
  }
}

TEST_CASE("steklov derivative identity at interpolation nodes") {
  // Piecewise-linear series: the average is piecewise quadratic, so a forward
  // difference is exact up to its own linear error term, which Richardson
  // extrapolation removes.
  const std::vector<double> times{0.0, 0.1, 0.2, 0.35, 0.5, 0.6, 0.8, 1.0};
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TimeSeries s;
  s.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) s.values.push_back(Field::Constant(2, u(rng)) + Field::LinSpaced(2, 0, 1));
  const double h = 0.3;
  for (double t : {0.0, 0.2, 0.35, 0.5}) {
    const double delta = 1e-3;
    const Field d1 = (steklov_average_at(s, h, t + delta) - steklov_average_at(s, h, t)) / delta;
    const Field d2 = (steklov_average_at(s, h, t + delta / 2) - steklov_average_at(s, h, t)) / (delta / 2);
    const Field derivative = 2 * d2 - d1;
    const Field expected = (interpolate(s, t + h) - interpolate(s, t)) / h;
    CHECK((derivative - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("steklov average is linear") {
  const std::vector<double> times{0.0, 0.2, 0.5, 0.7, 1.0};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TimeSeries a, b, sum;
  a.times = b.times = sum.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    a.values.push_back(Field::NullaryExpr(4, [&] { return u(rng); }));
    b.values.push_back(Field::NullaryExpr(4, [&] { return u(rng); }));
    sum.values.push_back(a.values.back() + b.values.back());
  }
  const TimeSeries sa = steklov_average(a, 0.25), sb = steklov_average(b, 0.25), ss = steklov_average(sum, 0.25);
  for (std::size_t k = 0; k < ss.values.size(); ++k) {
    CHECK((sa.values[k] + sb.values[k] - ss.values[k]).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("steklov average argument checks") {
  const TimeSeries s = series_of({0.0, 0.5, 1.0}, [](double t) { return Field::Constant(1, t); });
  CHECK_THROWS_AS(steklov_average(s, 0.0), InvalidArgument);
  CHECK_THROWS_AS(steklov_average(s, 1.5), InvalidArgument);
  CHECK_THROWS_AS(steklov_average_at(s, 0.5, 0.7), InvalidArgument);
}

TEST_CASE("identical trajectories certify with an all-zero report") {
  const DamGeometry geo{};
  const Grid g(geo, 10, 10);
  const Trajectory t = random_trajectory(g, 0.05, 0.5, 3);
  const auto [es, rep] =
      gronwall_monitor(t, t, PermeabilityField::identity(geo), g, classify_boundary(g, hydrostatic_head(0.5)));
  CHECK(rep.sup_E == 0.0);
  CHECK(rep.F_final == 0.0);
  CHECK(rep.sign_min == 0.0);
  CHECK(rep.pass);
  for (double f : es.F) CHECK(f == 0.0);
}

TEST_CASE("energy integral starts at zero and never decreases") {
  const DamGeometry geo{};
  const Grid g(geo, 10, 10);
  const Trajectory a = random_trajectory(g, 0.05, 0.5, 3);
  const Trajectory b = random_trajectory(g, 0.05, 0.5, 99);
  const auto [es, rep] =
      gronwall_monitor(a, b, PermeabilityField::identity(geo), g, classify_boundary(g, hydrostatic_head(0.5)));
  CHECK(es.F.front() == 0.0);
  for (std::size_t k = 1; k < es.F.size(); ++k) CHECK(es.F[k] >= es.F[k - 1]);
  CHECK(rep.sup_E > rep.tol_unique);
  CHECK_FALSE(rep.pass);
  CHECK(rep.energy_identity_max <= 1e-12);
}

TEST_CASE("sign check is nonnegative at equal eps") {
  const Grid g(DamGeometry{}, 8, 8);
  for (unsigned s = 0; s < 10; ++s) {
    const Trajectory a = random_trajectory(g, 0.05, 0.0, s);
    const Trajectory b = random_trajectory(g, 0.05, 0.0, 1000 + s);
    CHECK(sign_check(differences(a, b)) >= 0.0);
    CHECK(sign_check(differences(a, a)) == 0.0);
  }
}

TEST_CASE("sign check can go negative at unequal eps") {
  const Grid g(DamGeometry{}, 8, 8);
  Trajectory a = random_trajectory(g, 0.05, 0.0, 1);
  Trajectory b = a;
  for (auto& s : b.snapshots) s.chi = nodal_saturation(s.u, 0.2);
  b.eps = 0.2;
  for (auto& s : b.snapshots) s.u.array() += 0.01;
  CHECK(sign_check(differences(a, b)) < 0.0);
}

TEST_CASE("gronwall constant of an exponential") {
  std::vector<double> t, F;
  for (int k = 0; k <= 20; ++k) {
    t.push_back(0.05 * k);
    F.push_back(k == 0 ? 0.0 : 1e-3 * std::exp(2.5 * t.back()));
  }
  CHECK(fit_gronwall_constant(t, F) == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(fit_gronwall_constant(t, std::vector<double>(t.size(), 0.0)) == 0.0);
}

TEST_CASE("incompatible trajectories are rejected by name") {
  const Grid g(DamGeometry{}, 8, 8);
  const Grid g2(DamGeometry{}, 6, 8);
  const Trajectory a = random_trajectory(g, 0.05, 0.5, 1);
  Trajectory b = random_trajectory(g, 0.05, 0.3, 2);
  try {
    require_compatible(a, b);
    FAIL("expected an exception");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  CHECK_THROWS_AS(require_compatible(a, random_trajectory(g, 0.05, 0.5, 2, 4)), InvalidArgument);
  CHECK_THROWS_AS(require_compatible(a, random_trajectory(g2, 0.05, 0.5, 2)), InvalidArgument);
}

TEST_CASE("sandwich check") {
  const Field lower = Field::Zero(5);
  const Field upper = Field::Ones(5);
  const double tol = 1e-3;
  const OrderingReport at_lower = check_sandwich(lower, lower, upper, tol);
  CHECK(at_lower.pass);
  CHECK(at_lower.below == 0.0);
  CHECK(at_lower.above == 0.0);
  Field u = upper;
  u[2] += 2 * tol;
  const OrderingReport r = check_sandwich(u, lower, upper, tol);
  CHECK_FALSE(r.pass);
  CHECK(r.above == doctest::Approx(2 * tol));
}

TEST_CASE("free boundary of a hydrostatic profile") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 20, 40);
  const double k = 0.6;
  const SolutionField h = hydrostatic_profile(k, g);
  for (const auto& c : extract_free_boundary(h, g)) {
    CHECK(c.state == ColumnState::Crossing);
    CHECK(std::abs(c.height - k) <= g.h2());
  }
  SolutionField dry{Field::Zero(h.u.size()), Field::Zero(h.u.size()), 0.0};
  for (const auto& c : extract_free_boundary(dry, g)) CHECK(c.state == ColumnState::Dry);
  SolutionField wet{Field::Ones(h.u.size()), Field::Ones(h.u.size()), 0.0};
  for (const auto& c : extract_free_boundary(wet, g)) CHECK(c.state == ColumnState::Wet);
}

TEST_CASE("dam benchmark interface falls from the high head side") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 32, 32);
  const StationarySolve s =
      solve_stationary(dam_head(0.8, 0.2, geo), PermeabilityField::identity(geo), g, {0.03, 0.0});
  const auto cols = extract_free_boundary({s.v, s.chi, 0.0}, g);
  for (std::size_t i = 1; i < cols.size(); ++i) CHECK(cols[i].height <= cols[i - 1].height + 1e-12);
  CHECK(cols.front().height > cols.back().height);
}

TEST_CASE("strip report on barrier-like fields") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 40, 40);
  const double eps = 0.01;
  const double delta = strip_width(g, eps);
  CHECK(delta == doctest::Approx(2 * g.h2()));
  const SolutionField lo = hydrostatic_profile(0.1, g);
  const StripReport r = check_strips(lo, g, 0.1, eps);
  CHECK(r.lower_nodes > 0);
  CHECK(r.lower_wet);
  CHECK(r.lower_saturated);
  CHECK(r.upper_dry);
  const SolutionField full = hydrostatic_profile(0.99, g);
  CHECK_FALSE(check_strips(full, g, 0.1, eps).upper_dry);
}
