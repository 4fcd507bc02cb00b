#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

using Vec3 = Eigen::Vector3d;

// Lattice M*Z^d with fundamental cell D = M*(-1/2,1/2)^d and boxes
// Lambda_L = M*(-(L+1/2),L+1/2)^d. Dimensions 1..3.
struct LatticeGeometry {
  int dim = 1;
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d Minv = Eigen::Matrix3d::Identity();
  bool diagonal = true;
  double det = 1.0;

  static LatticeGeometry cubic(int d, double a = 1.0) {
    std::vector<double> m(static_cast<std::size_t>(d), a);
    return diag(d, m);
  }

  static LatticeGeometry diag(int d, const std::vector<double>& m) {
    if (d < 1 || d > 3) throw ConfigError("dimension must be 1, 2 or 3");
    if (static_cast<int>(m.size()) != d)
      throw ConfigError("generator diagonal needs one entry per dimension");
    LatticeGeometry g;
    g.dim = d;
    for (int a = 0; a < d; ++a) {
      if (!(m[static_cast<std::size_t>(a)] > 0.0))
        throw ConfigError("generator diagonal entries must be positive");
      g.M(a, a) = m[static_cast<std::size_t>(a)];
      g.Minv(a, a) = 1.0 / m[static_cast<std::size_t>(a)];
      g.det *= m[static_cast<std::size_t>(a)];
    }
    g.diagonal = true;
    return g;
  }

  static LatticeGeometry general(int d, const Eigen::MatrixXd& m) {
    if (d < 1 || d > 3) throw ConfigError("dimension must be 1, 2 or 3");
    if (m.rows() != d || m.cols() != d)
      throw ConfigError("generator matrix must be d x d");
    LatticeGeometry g;
    g.dim = d;
    g.M.setIdentity();
    g.M.topLeftCorner(d, d) = m;
    double det = g.M.topLeftCorner(d, d).determinant();
    if (!(det > 0.0)) throw ConfigError("generator matrix needs det > 0");
    g.det = det;
    g.Minv.setIdentity();
    g.Minv.topLeftCorner(d, d) = m.inverse();
    g.diagonal = true;
    for (int a = 0; a < d && g.diagonal; ++a)
      for (int b = 0; b < d; ++b)
        if (a != b && m(a, b) != 0.0) g.diagonal = false;
    return g;
  }

  double cell_volume() const { return det; }

  Vec3 to_physical(const Vec3& y) const { return M * y; }
  Vec3 to_lattice(const Vec3& x) const { return Minv * x; }

  // metric (M^T M)^{-1} of the pulled-back Laplacian
  Eigen::Matrix3d metric() const {
    Eigen::Matrix3d mtm = M.transpose() * M;
    return mtm.inverse();
  }
};

// Finite index set I_L = lattice points of Lambda_L, |I_L| = (2L+1)^d,
// enumerated lexicographically over k in {-L..L}^d.
struct IndexSet {
  int dim;
  int L;

  int side() const { return 2 * L + 1; }
  std::int64_t size() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= side();
    return n;
  }
  std::array<int, 3> cell(std::int64_t linear) const {
    std::array<int, 3> k{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] =
          static_cast<int>(linear % side()) - L;
      linear /= side();
    }
    return k;
  }
  std::int64_t linear(const std::array<int, 3>& k) const {
    std::int64_t idx = 0;
    for (int a = 0; a < dim; ++a)
      idx = idx * side() + (k[static_cast<std::size_t>(a)] + L);
    return idx;
  }
  bool contains(const std::array<int, 3>& k) const {
    for (int a = 0; a < dim; ++a) {
      int v = k[static_cast<std::size_t>(a)];
      if (v < -L || v > L) return false;
    }
    return true;
  }
};

// Cell-centered tensor grid on Lambda_L with n_h nodes per axis per cell.
// Node lattice coordinate along axis a: y = -(L+1/2) + (i+1/2)/n_h.
struct BoxGrid {
  LatticeGeometry geom;
  int L = 0;
  int n_h = 8;

  BoxGrid() = default;
  BoxGrid(LatticeGeometry g, int box_L, int nodes_per_cell)
      : geom(std::move(g)), L(box_L), n_h(nodes_per_cell) {
    if (L < 0) throw ConfigError("box size L must be >= 0");
    if (n_h < 2) throw ConfigError("n_h must be >= 2");
  }

  int dim() const { return geom.dim; }
  int cells_per_axis() const { return 2 * L + 1; }
  int nodes_per_axis() const { return cells_per_axis() * n_h; }
  std::int64_t dof() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim(); ++a) n *= nodes_per_axis();
    return n;
  }
  IndexSet cells() const { return IndexSet{dim(), L}; }

  // lattice-unit spacing per axis (uniform)
  double lattice_spacing() const { return 1.0 / n_h; }
  // physical spacing along axis a (diagonal generator)
  double spacing(int a) const { return geom.M(a, a) / n_h; }
  // physical volume associated with one node
  double node_weight() const {
    double w = geom.det;
    for (int a = 0; a < dim(); ++a) w /= n_h;
    return w;
  }
  double box_volume() const {
    double v = geom.det;
    for (int a = 0; a < dim(); ++a) v *= cells_per_axis();
    return v;
  }

  double lattice_coord(int axis_index) const {
    return -(L + 0.5) + (axis_index + 0.5) / n_h;
  }

  std::array<int, 3> multi_index(std::int64_t node) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim() - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] =
          static_cast<int>(node % nodes_per_axis());
      node /= nodes_per_axis();
    }
    return idx;
  }
  std::int64_t node_index(const std::array<int, 3>& idx) const {
    std::int64_t n = 0;
    for (int a = 0; a < dim(); ++a)
      n = n * nodes_per_axis() + idx[static_cast<std::size_t>(a)];
    return n;
  }

  Vec3 lattice_point(const std::array<int, 3>& idx) const {
    Vec3 y = Vec3::Zero();
    for (int a = 0; a < dim(); ++a)
      y(a) = lattice_coord(idx[static_cast<std::size_t>(a)]);
    return y;
  }
  Vec3 physical_point(const std::array<int, 3>& idx) const {
    return geom.to_physical(lattice_point(idx));
  }

  // cell containing a node and the node's cell-local index
  std::array<int, 3> cell_of(const std::array<int, 3>& idx) const {
    std::array<int, 3> k{0, 0, 0};
    for (int a = 0; a < dim(); ++a)
      k[static_cast<std::size_t>(a)] =
          idx[static_cast<std::size_t>(a)] / n_h - L;
    return k;
  }
  std::array<int, 3> local_of(const std::array<int, 3>& idx) const {
    std::array<int, 3> j{0, 0, 0};
    for (int a = 0; a < dim(); ++a)
      j[static_cast<std::size_t>(a)] =
          idx[static_cast<std::size_t>(a)] % n_h;
    return j;
  }
  // linear index into the single-cell grid (n_h^d nodes)
  std::int64_t local_linear(const std::array<int, 3>& local) const {
    std::int64_t n = 0;
    for (int a = 0; a < dim(); ++a)
      n = n * n_h + local[static_cast<std::size_t>(a)];
    return n;
  }

  // grid over the fundamental cell D with the same per-cell resolution
  BoxGrid cell_grid() const { return BoxGrid(geom, 0, n_h); }
};

}  // namespace speclab
