#include <doctest.h>

#include <random>

#include "damflow/fem.hpp"
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

}  // namespace

TEST_CASE("stiffness is symmetric with constants in its kernel") {
  const DamGeometry geo{2.0, 1.0};
  const Grid g(geo, 8, 5);
  const Discretization d(g, PermeabilityField::smooth_analytic(geo, 1.0, 0.2, 1.5, 0.3));
  const SparseMatrix& K = d.stiffness();
  CHECK((SparseMatrix(K.transpose()) - K).norm() <= 1e-14 * K.norm());
  const Field ones = Field::Ones(static_cast<Eigen::Index>(g.num_nodes()));
  CHECK((K * ones).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("mass matrices integrate constants") {
  const DamGeometry geo{2.0, 1.5};
  const Grid g(geo, 6, 9);
  const Discretization d(g, PermeabilityField::identity(geo));
  const Field ones = Field::Ones(static_cast<Eigen::Index>(g.num_nodes()));
  CHECK(d.lumped_mass().sum() == doctest::Approx(geo.area()).epsilon(1e-14));
  CHECK(ones.dot(d.consistent_mass() * ones) == doctest::Approx(geo.area()).epsilon(1e-14));
  CHECK(d.lumped_mass().minCoeff() > 0.0);
}

TEST_CASE("energy of simple fields") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 10, 10);
  const Discretization d(g, PermeabilityField::identity(geo));
  CHECK(d.energy(Field::Zero(static_cast<Eigen::Index>(g.num_nodes()))) == 0.0);
  const Field x2 = oracle::nodal(g, [](Point x) { return x.x2; });
  CHECK(d.energy(x2) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("energy matches dense quadrature for layered permeability") {
  const DamGeometry geo{1.0, 1.0};
  const auto a = PermeabilityField::layered(geo, 1.0, 1.0, 1.0);
  for (int n : {3, 7, 16}) {
    const Grid g(geo, n, n);
    const Discretization d(g, a);
    const Field v = random_field(g, -1.0, 1.0, 100 + n);
    const double ref = oracle::energy(g, a, v);
    CHECK(std::abs(d.energy(v) - ref) <= 1e-13 * std::max(1.0, ref));
  }
}

TEST_CASE("gravity jacobian matches finite differences away from kinks") {
  const DamGeometry geo{1.0, 1.0};
  const Grid g(geo, 4, 4);
  const Discretization d(g, PermeabilityField::layered(geo, 1.0, 1.0, 0.5));
  const double eps = 0.1;
  // Values strictly inside the ramp keep every quadrature value off the kinks.
  const Field v = random_field(g, 0.02, 0.08, 9);
  const SparseMatrix J = d.gravity_jacobian(v, eps);
  const double step = 1e-7;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    Field vp = v, vm = v;
    vp[k] += step;
    vm[k] -= step;
    const Field col = (d.gravity(vp, eps) - d.gravity(vm, eps)) / (2 * step);
    CHECK((Field(J.col(k)) - col).cwiseAbs().maxCoeff() <= 1e-7);
  }
}
