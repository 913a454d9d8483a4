#include "damflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "damflow/error.hpp"

namespace damflow {

bool DamGeometry::contains(const Point& x, double slack) const {
  const double sL = slack * std::max(L, 1.0);
  const double sK = slack * std::max(K, 1.0);
  return x.x1 >= -sL && x.x1 <= L + sL && x.x2 >= -sK && x.x2 <= K + sK;
}

Grid::Grid(DamGeometry geometry, int nx, int ny) : geometry_(geometry), nx_(nx), ny_(ny) {
  if (!(geometry.L > 0.0) || !(geometry.K > 0.0)) {
    throw InvalidArgument("geometry requires L > 0 and K > 0");
  }
  if (nx < 2 || ny < 2) {
    std::ostringstream os;
    os << "grid requires nx >= 2 and ny >= 2 (got " << nx << ", " << ny << ")";
    throw InvalidArgument(os.str());
  }
}

Point Grid::node(int i, int j) const {
  // Exact endpoints, uniform spacing in between.
  const double x1 = (i == nx_) ? geometry_.L : i * h1();
  const double x2 = (j == ny_) ? geometry_.K : j * h2();
  return {x1, x2};
}

std::array<std::size_t, 4> Grid::cell_nodes(int ci, int cj) const {
  return {index(ci, cj), index(ci + 1, cj), index(ci, cj + 1), index(ci + 1, cj + 1)};
}

bool Grid::same_shape(const Grid& other) const {
  return nx_ == other.nx_ && ny_ == other.ny_ && geometry_.L == other.geometry_.L &&
         geometry_.K == other.geometry_.K;
}

Grid build_grid(const DamGeometry& geometry, int nx, int ny) { return Grid(geometry, nx, ny); }

const char* to_string(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::Interior:
      return "interior";
    case BoundaryLabel::Impervious:
      return "impervious";
    case BoundaryLabel::DirichletWet:
      return "dirichlet_wet";
    case BoundaryLabel::DirichletDry:
      return "dirichlet_dry";
  }
  return "unknown";
}

BoundaryTags::BoundaryTags(std::vector<BoundaryLabel> labels, std::vector<Point> normals)
    : labels_(std::move(labels)), normals_(std::move(normals)) {
  if (labels_.size() != normals_.size()) {
    throw InvalidArgument("boundary tags: label and normal arrays differ in length");
  }
}

std::size_t BoundaryTags::count(BoundaryLabel label) const {
  std::size_t c = 0;
  for (auto l : labels_) c += (l == label) ? 1 : 0;
  return c;
}

BoundaryTags classify_boundary(const Grid& grid, const BoundaryHead& phi) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  std::vector<BoundaryLabel> labels(grid.num_nodes(), BoundaryLabel::Interior);
  std::vector<Point> normals(grid.num_nodes(), Point{0.0, 0.0});

  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      if (!grid.on_boundary(i, j)) continue;
      const std::size_t n = grid.index(i, j);

      // Corner normals are the normalized sum of the adjacent edge normals.
      double n1 = 0.0, n2 = 0.0;
      if (i == 0) n1 -= 1.0;
      if (i == nx) n1 += 1.0;
      if (j == 0) n2 -= 1.0;
      if (j == ny) n2 += 1.0;
      const double len = std::hypot(n1, n2);
      normals[n] = {n1 / len, n2 / len};

      if (j == 0) {
        labels[n] = BoundaryLabel::Impervious;
        continue;
      }
      const Point x = grid.node(i, j);
      const double value = phi(x);
      if (!(value >= 0.0)) {
        std::ostringstream os;
        os << "boundary head is negative (" << value << ") at node (" << x.x1 << ", " << x.x2
           << ")";
        throw InvalidData(os.str());
      }
      labels[n] = value > 0.0 ? BoundaryLabel::DirichletWet : BoundaryLabel::DirichletDry;
    }
  }
  return BoundaryTags(std::move(labels), std::move(normals));
}

}  // namespace damflow
