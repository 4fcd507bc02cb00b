#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "speclab/eigensolve.hpp"
#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/potential.hpp"

namespace speclab {

enum class BC { Dirichlet, Neumann, Periodic, Mezincescu };

inline const char* bc_name(BC bc) {
  switch (bc) {
    case BC::Dirichlet: return "D";
    case BC::Neumann: return "N";
    case BC::Periodic: return "P";
    case BC::Mezincescu: return "M";
  }
  return "?";
}

inline BC bc_from_name(const std::string& s) {
  if (s == "D" || s == "dirichlet") return BC::Dirichlet;
  if (s == "N" || s == "neumann") return BC::Neumann;
  if (s == "P" || s == "periodic") return BC::Periodic;
  if (s == "M" || s == "mezincescu") return BC::Mezincescu;
  throw ConfigError("unknown boundary condition '" + s + "'");
}

// Robin coefficient per boundary face node, one table per (axis, side).
// Face nodes are indexed by the flattened multi-index over the other axes.
struct RobinTable {
  std::array<std::array<std::vector<double>, 2>, 3> rho;

  double at(int axis, int side, std::int64_t face_index) const {
    return rho[static_cast<std::size_t>(axis)][static_cast<std::size_t>(side)]
              [static_cast<std::size_t>(face_index)];
  }
};

namespace detail {

inline std::int64_t face_index(const BoxGrid& grid,
                               const std::array<int, 3>& idx, int axis) {
  std::int64_t f = 0;
  for (int a = 0; a < grid.dim(); ++a) {
    if (a == axis) continue;
    f = f * grid.nodes_per_axis() + idx[static_cast<std::size_t>(a)];
  }
  return f;
}

inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

struct DiscreteHamiltonian {
  SpMat mat;
  BoxGrid grid;
  BC bc = BC::Dirichlet;
  double shift = 0.0;  // accumulated additive shift already applied
  std::uint64_t potential_hash = 0;

  std::int64_t dof() const { return mat.rows(); }
  double gershgorin_low() const { return gershgorin_lower(mat); }
};

// Positive normalized ground state of the periodic cell problem.
struct PeriodicGroundState {
  double energy = 0.0;        // E_0
  Eigen::VectorXd psi;        // > 0, cell-normalized: sum psi^2 * w = 1
  double psi_min = 0.0;
  double psi_max = 0.0;
  BoxGrid cell_grid;

  double at_local(std::int64_t local_linear) const { return psi(local_linear); }
};

// Assemble -div (M^T M)^{-1} grad + V on the box grid in lattice
// coordinates; for diagonal M this is the standard (2d+1)-point stencil
// with physical spacings M_aa/n_h. V holds Vper + W sampled at the nodes.
inline DiscreteHamiltonian assemble_hamiltonian(const Eigen::VectorXd& v,
                                                const BoxGrid& grid, BC bc,
                                                const RobinTable* robin =
                                                    nullptr) {
  const int d = grid.dim();
  if (v.size() != grid.dof())
    throw ConfigError("potential vector does not match the grid (" +
                      std::to_string(v.size()) + " vs " +
                      std::to_string(grid.dof()) + " nodes)");
  if (bc == BC::Mezincescu && robin == nullptr)
    throw ConfigError("Mezincescu assembly needs a Robin coefficient table");
  if (!grid.geom.diagonal) {
    if (d != 2)
      throw ConfigError("non-diagonal generators are supported in d=2 only");
    if (bc == BC::Neumann || bc == BC::Mezincescu)
      throw ConfigError(
          "non-diagonal generators support Dirichlet/periodic conditions only");
  }

  const int N = grid.nodes_per_axis();
  const std::int64_t dof = grid.dof();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(dof) * (2 * d + 1));

  const double dlat = grid.lattice_spacing();
  Eigen::Matrix3d metric = grid.geom.metric();

  for (std::int64_t i = 0; i < dof; ++i) {
    auto idx = grid.multi_index(i);
    double diag = v(i);
    for (int a = 0; a < d; ++a) {
      // 1/h^2 with physical spacing h implied by the metric
      double inv_h2 = metric(a, a) / (dlat * dlat);
      diag += 2.0 * inv_h2;
      for (int side = 0; side < 2; ++side) {
        int step = side == 0 ? -1 : 1;
        auto nb = idx;
        nb[static_cast<std::size_t>(a)] += step;
        int pos = nb[static_cast<std::size_t>(a)];
        if (pos >= 0 && pos < N) {
          trip.emplace_back(static_cast<int>(i),
                            static_cast<int>(grid.node_index(nb)), -inv_h2);
          continue;
        }
        switch (bc) {
          case BC::Dirichlet:
            break;  // ghost value 0
          case BC::Neumann:
            diag -= inv_h2;  // ghost mirrors the boundary node
            break;
          case BC::Periodic: {
            nb[static_cast<std::size_t>(a)] = (pos + N) % N;
            trip.emplace_back(static_cast<int>(i),
                              static_cast<int>(grid.node_index(nb)), -inv_h2);
            break;
          }
          case BC::Mezincescu: {
            // eliminate the ghost with rho*phi + d_n phi = 0 at the face:
            // ghost = phi * (2 - rho h)/(2 + rho h)
            double h = std::sqrt(1.0 / inv_h2);
            double rho = robin->at(a, side, detail::face_index(grid, idx, a));
            double g = (2.0 - rho * h) / (2.0 + rho * h);
            diag -= g * inv_h2;
            break;
          }
        }
      }
    }
    // mixed second derivatives for non-diagonal generators (d == 2)
    if (!grid.geom.diagonal) {
      double cross = metric(0, 1) / (2.0 * dlat * dlat);
      for (int s0 = -1; s0 <= 1; s0 += 2) {
        for (int s1 = -1; s1 <= 1; s1 += 2) {
          auto nb = idx;
          nb[0] += s0;
          nb[1] += s1;
          double coeff = (s0 == s1) ? -cross : cross;
          bool inside = nb[0] >= 0 && nb[0] < N && nb[1] >= 0 && nb[1] < N;
          if (!inside) {
            if (bc == BC::Dirichlet) continue;
            nb[0] = (nb[0] + N) % N;
            nb[1] = (nb[1] + N) % N;
          }
          trip.emplace_back(static_cast<int>(i),
                            static_cast<int>(grid.node_index(nb)), coeff);
        }
      }
    }
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }

  DiscreteHamiltonian h;
  h.grid = grid;
  h.bc = bc;
  h.mat.resize(static_cast<int>(dof), static_cast<int>(dof));
  h.mat.setFromTriplets(trip.begin(), trip.end());
  h.mat.makeCompressed();
  h.potential_hash = detail::fnv1a(v.data(), sizeof(double) *
                                                 static_cast<std::size_t>(
                                                     v.size()));
  return h;
}

inline Eigen::VectorXd vper_on_grid(const PeriodicBackground& vper,
                                    const BoxGrid& grid) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.dof());
  if (vper.is_zero()) return v;
  for (std::int64_t i = 0; i < grid.dof(); ++i)
    v(i) = vper.eval_lattice(grid.lattice_point(grid.multi_index(i)),
                             grid.dim());
  return v;
}

// Lowest eigenpair of the periodic restriction to the fundamental cell,
// sign-fixed positive and cell-normalized.
inline PeriodicGroundState periodic_ground_state(
    const PeriodicBackground& vper, const LatticeGeometry& geom, int n_h,
    double gap_tol = 1e-12) {
  BoxGrid cell(geom, 0, n_h);
  Eigen::VectorXd v = vper_on_grid(vper, cell);
  DiscreteHamiltonian h = assemble_hamiltonian(v, cell, BC::Periodic);
  SolverConfig cfg;
  cfg.k = std::min<std::int64_t>(2, cell.dof());
  cfg.tol = 1e-12;
  cfg.dense_cutoff = 4096;
  SpectralResult spec = h.mat.rows() <= cfg.dense_cutoff
                            ? dense_spectrum(h.mat, cfg)
                            : lobpcg_lowest(h.mat, cfg);
  if (spec.values.size() > 1 &&
      spec.values(1) - spec.values(0) < gap_tol)
    throw ConvergenceError(
        "periodic ground state is numerically degenerate (gap below tol)", {});

  PeriodicGroundState gs;
  gs.cell_grid = cell;
  gs.energy = spec.values(0);
  Eigen::VectorXd psi = spec.vectors.col(0);
  if (psi.sum() < 0.0) psi = -psi;
  double w = cell.node_weight();
  psi /= std::sqrt(psi.squaredNorm() * w);
  gs.psi = psi;
  gs.psi_min = psi.minCoeff();
  gs.psi_max = psi.maxCoeff();
  if (!(gs.psi_min > 0.0))
    throw ConvergenceError("periodic ground state is not strictly positive",
                           {});
  return gs;
}

// rho = -(d_n Psi)/Psi per boundary face node, from the periodically
// extended discrete ground state. Central difference across the face.
inline RobinTable mezincescu_coefficients(const PeriodicGroundState& gs,
                                          const BoxGrid& grid) {
  if (!(gs.psi_min > 0.0))
    throw ConfigError("Mezincescu coefficients need a positive ground state");
  if (gs.cell_grid.n_h != grid.n_h)
    throw ConfigError("ground state resolution does not match the grid");
  RobinTable table;
  const int d = grid.dim();
  const int N = grid.nodes_per_axis();
  const int n_h = grid.n_h;
  for (int a = 0; a < d; ++a) {
    double h = grid.geom.M(a, a) / n_h;
    std::int64_t face_count = 1;
    for (int b = 0; b < d; ++b)
      if (b != a) face_count *= N;
    for (int side = 0; side < 2; ++side) {
      auto& vec = table.rho[static_cast<std::size_t>(a)]
                           [static_cast<std::size_t>(side)];
      vec.assign(static_cast<std::size_t>(face_count), 0.0);
    }
    // enumerate face nodes by walking the full grid and filtering
    for (std::int64_t i = 0; i < grid.dof(); ++i) {
      auto idx = grid.multi_index(i);
      int pos = idx[static_cast<std::size_t>(a)];
      int side = pos == 0 ? 0 : (pos == N - 1 ? 1 : -1);
      if (side < 0) continue;
      auto local_in = grid.local_of(idx);
      auto local_out = local_in;
      // periodic extension: the ghost node's cell-local index wraps
      local_out[static_cast<std::size_t>(a)] =
          side == 0 ? n_h - 1 : 0;
      double psi_in = gs.at_local(grid.local_linear(local_in));
      double psi_out = gs.at_local(grid.local_linear(local_out));
      double rho = 2.0 * (psi_in - psi_out) / (h * (psi_in + psi_out));
      table.rho[static_cast<std::size_t>(a)][static_cast<std::size_t>(side)]
               [static_cast<std::size_t>(detail::face_index(grid, idx, a))] =
          rho;
    }
  }
  return table;
}

inline DiscreteHamiltonian shifted_operator(const DiscreteHamiltonian& h,
                                            double gamma) {
  DiscreteHamiltonian out = h;
  if (gamma != 0.0) {
    SpMat id(h.mat.rows(), h.mat.cols());
    id.setIdentity();
    out.mat = h.mat - gamma * id;
    out.shift = h.shift + gamma;
  }
  return out;
}

// Coordinate-list text dump: header with dof, per-axis spacing and the
// boundary tag, then one "row col value" line per stored entry.
inline void dump_operator(const DiscreteHamiltonian& h, std::ostream& os) {
  os << "# speclab-operator dof=" << h.dof() << " h=";
  for (int a = 0; a < h.grid.dim(); ++a)
    os << (a ? "," : "") << h.grid.spacing(a);
  os << " bc=" << bc_name(h.bc) << " shift=" << h.shift << "\n";
  for (int c = 0; c < h.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(h.mat, c); it; ++it)
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

// Restriction of a box-grid function to the congruent sub-box of size
// L_sub whose lowest cell is cell_lo (cell coordinates of the parent box).
inline Eigen::VectorXd extract_subbox(const Eigen::VectorXd& v,
                                      const BoxGrid& grid,
                                      const std::array<int, 3>& cell_lo,
                                      int L_sub) {
  const int d = grid.dim();
  const int side = 2 * L_sub + 1;
  for (int a = 0; a < d; ++a) {
    int lo = cell_lo[static_cast<std::size_t>(a)];
    if (lo < -grid.L || lo + side - 1 > grid.L)
      throw ConfigError("sub-box does not fit inside the parent box");
  }
  BoxGrid sub(grid.geom, L_sub, grid.n_h);
  Eigen::VectorXd out(sub.dof());
  for (std::int64_t i = 0; i < sub.dof(); ++i) {
    auto sidx = sub.multi_index(i);
    std::array<int, 3> pidx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      int off = (cell_lo[static_cast<std::size_t>(a)] + grid.L) * grid.n_h;
      pidx[static_cast<std::size_t>(a)] =
          off + sidx[static_cast<std::size_t>(a)];
    }
    out(i) = v(grid.node_index(pidx));
  }
  return out;
}

// Convenience: potential grid + assembly for one sampled realization.
struct AssembledSample {
  Eigen::VectorXd w_grid;
  DiscreteHamiltonian h;
};

inline AssembledSample assemble_sample(const PotentialModel& model,
                                       const Realization& r,
                                       const BoxGrid& grid, BC bc,
                                       const RobinTable* robin = nullptr,
                                       const Eigen::VectorXd* vper_cache =
                                           nullptr) {
  AssembledSample out;
  out.w_grid = evaluate_on_grid(model, r, grid);
  Eigen::VectorXd v =
      vper_cache ? (*vper_cache + out.w_grid).eval()
                 : (vper_on_grid(model.vper, grid) + out.w_grid).eval();
  out.h = assemble_hamiltonian(v, grid, bc, robin);
  return out;
}

}  // namespace speclab
