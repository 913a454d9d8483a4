#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace damflow {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Rectangle (0,L) x (0,K). Bottom edge is impervious, the other three
// edges are in contact with air or a reservoir.
struct DamGeometry {
  double L = 1.0;
  double K = 1.0;

  double area() const { return L * K; }
  bool contains(const Point& x, double slack = 1e-12) const;
};

// Uniform tensor-product grid of the closed rectangle. Nodes are numbered
// j-major: index = j * (nx + 1) + i.
class Grid {
 public:
  Grid(DamGeometry geometry, int nx, int ny);

  const DamGeometry& geometry() const { return geometry_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h1() const { return geometry_.L / nx_; }
  double h2() const { return geometry_.K / ny_; }

  std::size_t num_nodes() const { return static_cast<std::size_t>(nx_ + 1) * (ny_ + 1); }
  std::size_t num_cells() const { return static_cast<std::size_t>(nx_) * ny_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * (nx_ + 1) + static_cast<std::size_t>(i);
  }
  int i_of(std::size_t n) const { return static_cast<int>(n % (nx_ + 1)); }
  int j_of(std::size_t n) const { return static_cast<int>(n / (nx_ + 1)); }

  Point node(int i, int j) const;
  Point node(std::size_t n) const { return node(i_of(n), j_of(n)); }

  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx_ || j == ny_; }

  // Global node indices of cell (ci, cj) in local order
  // (ci,cj), (ci+1,cj), (ci,cj+1), (ci+1,cj+1).
  std::array<std::size_t, 4> cell_nodes(int ci, int cj) const;

  bool same_shape(const Grid& other) const;

 private:
  DamGeometry geometry_;
  int nx_;
  int ny_;
};

Grid build_grid(const DamGeometry& geometry, int nx, int ny);

enum class BoundaryLabel { Interior, Impervious, DirichletWet, DirichletDry };

const char* to_string(BoundaryLabel label);

// Per-node boundary classification with outward normals. Interior nodes carry
// BoundaryLabel::Interior and a zero normal.
class BoundaryTags {
 public:
  BoundaryTags() = default;
  BoundaryTags(std::vector<BoundaryLabel> labels, std::vector<Point> normals);

  BoundaryLabel label(std::size_t n) const { return labels_[n]; }
  const Point& normal(std::size_t n) const { return normals_[n]; }
  std::size_t size() const { return labels_.size(); }

  bool is_dirichlet(std::size_t n) const {
    return labels_[n] == BoundaryLabel::DirichletWet || labels_[n] == BoundaryLabel::DirichletDry;
  }

  std::size_t count(BoundaryLabel label) const;
  const std::vector<BoundaryLabel>& labels() const { return labels_; }

 private:
  std::vector<BoundaryLabel> labels_;
  std::vector<Point> normals_;
};

using BoundaryHead = std::function<double(const Point&)>;

// Labels the bottom edge (corners included) impervious and every other
// boundary node wet or dry by the sign of phi. Throws InvalidData if phi < 0
// at a Dirichlet node.
BoundaryTags classify_boundary(const Grid& grid, const BoundaryHead& phi);

}  // namespace damflow
