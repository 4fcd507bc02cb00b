#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "speclab/operators.hpp"
#include "support.hpp"

using namespace speclab;
using testsupport::breather_model_1d;
using testsupport::skew_cosine;

namespace {

Eigen::VectorXd zero_potential(const BoxGrid& g) {
  return Eigen::VectorXd::Zero(g.dof());
}

SpectralResult spectrum_of(const DiscreteHamiltonian& h) {
  return dense_spectrum(Eigen::MatrixXd(h.mat));
}

}  // namespace

TEST_CASE("free Dirichlet stencil on one cell") {
  BoxGrid grid(LatticeGeometry::cubic(1), 0, 4);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Dirichlet);
  double inv = 16.0;  // 1/h^2 with h = 1/4
  Eigen::MatrixXd m(h.mat);
  REQUIRE(m.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(m(i, i) == Catch::Approx(2.0 * inv));
    if (i + 1 < 4) {
      REQUIRE(m(i, i + 1) == Catch::Approx(-inv));
      REQUIRE(m(i + 1, i) == Catch::Approx(-inv));
    }
  }
}

TEST_CASE("assembled matrices are exactly symmetric") {
  auto model = breather_model_1d();
  model.vper = skew_cosine();
  BoxGrid grid(model.geometry, 2, 8);
  auto gs = periodic_ground_state(model.vper, model.geometry, 8);
  auto robin = mezincescu_coefficients(gs, grid);
  auto r = sample_realization(model, 2, 42, 0);
  for (BC bc : {BC::Dirichlet, BC::Neumann, BC::Periodic, BC::Mezincescu}) {
    auto s = assemble_sample(model, r, grid, bc,
                             bc == BC::Mezincescu ? &robin : nullptr);
    Eigen::MatrixXd m(s.h.mat);
    REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // row sparsity bound 2d+1 on the diagonal fast path
    for (int c = 0; c < s.h.mat.outerSize(); ++c) {
      int nnz = 0;
      for (SpMat::InnerIterator it(s.h.mat, c); it; ++it) ++nnz;
      REQUIRE(nnz <= 3);
    }
  }
}

TEST_CASE("Neumann free box has a zero mode") {
  BoxGrid grid(LatticeGeometry::cubic(1), 1, 8);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Neumann);
  auto spec = spectrum_of(h);
  REQUIRE(std::abs(spec.values(0)) < 1e-12);
}

TEST_CASE("mismatched potential is rejected") {
  BoxGrid grid(LatticeGeometry::cubic(1), 1, 8);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(grid.dof() + 1);
  REQUIRE_THROWS_AS(assemble_hamiltonian(bad, grid, BC::Dirichlet),
                    ConfigError);
}

TEST_CASE("periodic ground state of the free cell") {
  auto gs = periodic_ground_state(PeriodicBackground::zero(),
                                  LatticeGeometry::cubic(1), 16);
  REQUIRE(std::abs(gs.energy) < 1e-12);
  REQUIRE(gs.psi_min == Catch::Approx(gs.psi_max));
  REQUIRE(gs.psi_min > 0.0);
  // cell normalization: sum psi^2 w = 1
  double w = gs.cell_grid.node_weight();
  REQUIRE(gs.psi.squaredNorm() * w == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("constant background shifts the ground energy") {
  auto gs = periodic_ground_state(PeriodicBackground::cosine(0.0) /*zero*/,
                                  LatticeGeometry::cubic(1), 8);
  auto vc = PeriodicBackground::cosine_sum({{0.0, {1, 0, 0}, 0.0}});
  // emulate Vper == c by adding an explicit constant term: amplitude at
  // wave 0 is a constant cos(phase)
  PeriodicBackground c;
  c.kind = PeriodicBackground::Kind::CosineSum;
  c.terms.push_back({2.5, {0, 0, 0}, 0.0});
  auto gsc = periodic_ground_state(c, LatticeGeometry::cubic(1), 8);
  REQUIRE(gsc.energy - gs.energy == Catch::Approx(2.5).margin(1e-12));
  REQUIRE(gsc.psi_min == Catch::Approx(gsc.psi_max));
}

TEST_CASE("cosine cell problem matches a dense rebuild and refines at h^2") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  auto vper = PeriodicBackground::cosine(1.0);
  auto gs = periodic_ground_state(vper, geom, 64);
  // dense oracle on the same matrix
  BoxGrid cell(geom, 0, 64);
  auto h = assemble_hamiltonian(vper_on_grid(vper, cell), cell, BC::Periodic);
  auto spec = spectrum_of(h);
  REQUIRE(gs.energy == Catch::Approx(spec.values(0)).margin(1e-10));

  // Richardson: consecutive refinements shrink the error ~4x
  double e1 = periodic_ground_state(vper, geom, 16).energy;
  double e2 = periodic_ground_state(vper, geom, 32).energy;
  double e3 = periodic_ground_state(vper, geom, 64).energy;
  double ratio = (e1 - e2) / (e2 - e3);
  REQUIRE(ratio == Catch::Approx(4.0).margin(0.35));
}

TEST_CASE("flat ground state gives zero Robin data") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  auto gs = periodic_ground_state(PeriodicBackground::zero(), geom, 8);
  BoxGrid grid(geom, 2, 8);
  auto robin = mezincescu_coefficients(gs, grid);
  for (int side = 0; side < 2; ++side)
    for (double v : robin.rho[0][static_cast<std::size_t>(side)])
      REQUIRE(v == 0.0);
}

TEST_CASE("even background gives mirror-equal Robin data") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  auto gs = periodic_ground_state(PeriodicBackground::cosine(1.0), geom, 8);
  BoxGrid grid(geom, 1, 8);
  auto robin = mezincescu_coefficients(gs, grid);
  REQUIRE(robin.rho[0][0][0] == Catch::Approx(robin.rho[0][1][0]).margin(1e-12));
  // cos(2 pi y) is even across the cell faces: coefficients vanish
  REQUIRE(std::abs(robin.rho[0][0][0]) < 1e-10);
}

TEST_CASE("ground-state preservation under Mezincescu restriction") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  for (const auto& vper :
       {PeriodicBackground::cosine(1.0), skew_cosine(1.3)}) {
    auto gs = periodic_ground_state(vper, geom, 8);
    for (int L : {1, 2, 3}) {
      BoxGrid grid(geom, L, 8);
      auto robin = mezincescu_coefficients(gs, grid);
      auto h = assemble_hamiltonian(vper_on_grid(vper, grid), grid,
                                    BC::Mezincescu, &robin);
      auto spec = spectrum_of(h);
      REQUIRE(spec.values(0) ==
              Catch::Approx(gs.energy).margin(1e-10 * (1.0 + std::abs(gs.energy))));
      // eigenvector is the periodized cell ground state
      Eigen::VectorXd psi_ext(grid.dof());
      for (std::int64_t i = 0; i < grid.dof(); ++i) {
        auto idx = grid.multi_index(i);
        psi_ext(i) = gs.at_local(grid.local_linear(grid.local_of(idx)));
      }
      psi_ext.normalize();
      Eigen::VectorXd v0 = spec.vectors.col(0);
      if (v0.dot(psi_ext) < 0.0) v0 = -v0;
      REQUIRE((v0 - psi_ext).norm() < 1e-7);
    }
  }
}

TEST_CASE("Robin data is rejected without a positive ground state") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  auto gs = periodic_ground_state(PeriodicBackground::zero(), geom, 8);
  gs.psi_min = 0.0;  // simulate an invalid state
  BoxGrid grid(geom, 1, 8);
  REQUIRE_THROWS_AS(mezincescu_coefficients(gs, grid), ConfigError);
}

TEST_CASE("shifted operator examples") {
  BoxGrid grid(LatticeGeometry::cubic(1), 1, 6);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Dirichlet);
  auto same = shifted_operator(h, 0.0);
  REQUIRE((Eigen::MatrixXd(same.mat) - Eigen::MatrixXd(h.mat)).norm() == 0.0);
  auto moved = shifted_operator(h, 0.75);
  auto s0 = spectrum_of(h);
  auto s1 = spectrum_of(moved);
  for (int i = 0; i < s0.values.size(); ++i)
    REQUIRE(s1.values(i) == Catch::Approx(s0.values(i) - 0.75).margin(1e-11));
  REQUIRE(moved.shift == 0.75);
}

TEST_CASE("boundary-condition bracketing, flat and even backgrounds") {
  auto model = breather_model_1d();
  LatticeGeometry geom = model.geometry;
  for (const auto& vper :
       {PeriodicBackground::zero(), PeriodicBackground::cosine(1.0)}) {
    model.vper = vper;
    auto gs = periodic_ground_state(vper, geom, 8);
    BoxGrid grid(geom, 2, 8);
    auto robin = mezincescu_coefficients(gs, grid);
    for (int s = 0; s < 5; ++s) {
      auto r = sample_realization(model, 2, 7, static_cast<std::uint64_t>(s));
      auto hd = assemble_sample(model, r, grid, BC::Dirichlet);
      auto hn = assemble_sample(model, r, grid, BC::Neumann);
      auto hm = assemble_sample(model, r, grid, BC::Mezincescu, &robin);
      auto sd = spectrum_of(hd.h), sn = spectrum_of(hn.h),
           sm = spectrum_of(hm.h);
      for (int k = 0; k < 10; ++k) {
        REQUIRE(sn.values(k) <= sm.values(k) + 1e-10);
        REQUIRE(sm.values(k) <= sd.values(k) + 1e-10);
      }
    }
  }
}

TEST_CASE("bracketing with skew background holds at the h^2 scale") {
  // sign-changing Robin data: N <= M is not an exact matrix inequality,
  // but survives within a discretization-consistent tolerance
  auto model = breather_model_1d();
  model.vper = skew_cosine();
  LatticeGeometry geom = model.geometry;
  int n_h = 8;
  auto gs = periodic_ground_state(model.vper, geom, n_h);
  BoxGrid grid(geom, 2, n_h);
  auto robin = mezincescu_coefficients(gs, grid);
  double h2 = grid.spacing(0) * grid.spacing(0);
  for (int s = 0; s < 5; ++s) {
    auto r = sample_realization(model, 2, 19, static_cast<std::uint64_t>(s));
    auto hd = assemble_sample(model, r, grid, BC::Dirichlet);
    auto hn = assemble_sample(model, r, grid, BC::Neumann);
    auto hm = assemble_sample(model, r, grid, BC::Mezincescu, &robin);
    auto sd = spectrum_of(hd.h), sn = spectrum_of(hn.h), sm = spectrum_of(hm.h);
    for (int k = 0; k < 10; ++k) {
      REQUIRE(sn.values(k) <= sm.values(k) + 10.0 * h2);
      // M <= D stays exact: the ghost factor is always positive
      REQUIRE(sm.values(k) <= sd.values(k) + 1e-10);
    }
  }
}

TEST_CASE("potential monotonicity moves every eigenvalue up") {
  auto model = breather_model_1d(1.5);
  BoxGrid grid(model.geometry, 2, 8);
  auto r = sample_realization(model, 2, 3, 1);
  auto lo = assemble_sample(model, r, grid, BC::Dirichlet);
  Eigen::VectorXd bump = lo.w_grid;  // add the same nonnegative field again
  auto hi_mat = lo.h;
  for (int i = 0; i < bump.size(); ++i)
    hi_mat.mat.coeffRef(i, i) += bump(i);
  auto slo = spectrum_of(lo.h);
  auto shi = spectrum_of(hi_mat);
  for (int i = 0; i < slo.values.size(); ++i)
    REQUIRE(shi.values(i) >= slo.values(i) - 1e-10);
}

TEST_CASE("counting sub/superadditivity under congruent splits") {
  // Neumann and Mezincescu sub-boxes keep all nodes (reflected/eliminated
  // ghosts decouple the parts below the full operator). The Dirichlet
  // interface is the node layer between parts: those nodes carry the zero
  // condition and belong to no part.
  auto model = breather_model_1d();
  model.vper = skew_cosine();
  LatticeGeometry geom = model.geometry;
  int n_h = 8;
  auto gs = periodic_ground_state(model.vper, geom, n_h);
  BoxGrid big(geom, 4, n_h);
  BoxGrid small(geom, 1, n_h);
  auto robin_big = mezincescu_coefficients(gs, big);
  auto robin_small = mezincescu_coefficients(gs, small);
  auto vper_big = vper_on_grid(model.vper, big);

  auto r = sample_realization(model, 4, 11, 0);
  Eigen::VectorXd w = evaluate_on_grid(model, r, big);
  Eigen::VectorXd v = vper_big + w;
  double h = big.spacing(0);

  // Lambda_4 = three copies of Lambda_1 at cell offsets -4, -1, 2
  std::vector<std::array<int, 3>> offsets = {
      {-4, 0, 0}, {-1, 0, 0}, {2, 0, 0}};

  for (BC bc : {BC::Neumann, BC::Dirichlet, BC::Mezincescu}) {
    const RobinTable* rb = bc == BC::Mezincescu ? &robin_big : nullptr;
    const RobinTable* rs = bc == BC::Mezincescu ? &robin_small : nullptr;
    auto whole = assemble_hamiltonian(v, big, bc, rb);
    auto sw = spectrum_of(whole);
    std::vector<double> merged;
    if (bc == BC::Dirichlet) {
      // node ranges [0,23), [24,47), [48,72): interface nodes 23, 47 dropped
      int part_nodes = 3 * n_h;
      for (int j = 0; j < 3; ++j) {
        int begin = j * part_nodes;
        int count = part_nodes - (j < 2 ? 1 : 0);
        Eigen::VectorXd vs = v.segment(begin, count);
        auto sp = dense_spectrum(
            Eigen::MatrixXd(testsupport::range_operator_1d(vs, h, bc)));
        for (int i = 0; i < sp.values.size(); ++i)
          merged.push_back(sp.values(i));
      }
    } else {
      for (const auto& off : offsets) {
        auto vs = extract_subbox(v, big, off, 1);
        auto part = assemble_hamiltonian(vs, small, bc, rs);
        auto sp = spectrum_of(part);
        for (int i = 0; i < sp.values.size(); ++i)
          merged.push_back(sp.values(i));
      }
    }
    std::sort(merged.begin(), merged.end());
    // compare counting at energies away from the merged spectrum
    for (double e = 0.0; e < 40.0; e += 1.7) {
      bool near = false;
      for (double m : merged)
        if (std::abs(m - e) < 1e-6) near = true;
      for (int i = 0; i < sw.values.size(); ++i)
        if (std::abs(sw.values(i) - e) < 1e-6) near = true;
      if (near) continue;
      std::int64_t n_whole = counting_function(sw, e);
      std::int64_t n_parts = 0;
      for (double m : merged)
        if (m <= e) ++n_parts;
      if (bc == BC::Dirichlet) {
        REQUIRE(n_whole >= n_parts);  // superadditive counting
      } else {
        REQUIRE(n_whole <= n_parts);  // subadditive counting (N and M)
      }
    }
  }
}

TEST_CASE("two-way uneven split for N and D") {
  auto model = breather_model_1d();
  BoxGrid big(model.geometry, 4, 8);
  auto r = sample_realization(model, 4, 23, 0);
  Eigen::VectorXd v = evaluate_on_grid(model, r, big);
  double h = big.spacing(0);
  int cut = 4 * big.n_h;  // 4 cells | 5 cells
  for (BC bc : {BC::Neumann, BC::Dirichlet}) {
    // Dirichlet: the node at the cut carries the interface condition
    int skip = bc == BC::Dirichlet ? 1 : 0;
    Eigen::VectorXd vl = v.head(cut - skip);
    Eigen::VectorXd vr = v.tail(v.size() - cut);
    auto whole = assemble_hamiltonian(v, big, bc);
    auto sw = spectrum_of(whole);
    auto sl = dense_spectrum(
        Eigen::MatrixXd(testsupport::range_operator_1d(vl, h, bc)));
    auto sr = dense_spectrum(
        Eigen::MatrixXd(testsupport::range_operator_1d(vr, h, bc)));
    std::vector<double> merged;
    for (int i = 0; i < sl.values.size(); ++i) merged.push_back(sl.values(i));
    for (int i = 0; i < sr.values.size(); ++i) merged.push_back(sr.values(i));
    std::sort(merged.begin(), merged.end());
    for (double e = 0.1; e < 30.0; e += 1.3) {
      std::int64_t n_whole = counting_function(sw, e);
      std::int64_t n_parts = 0;
      for (double m : merged)
        if (m <= e) ++n_parts;
      if (bc == BC::Dirichlet)
        REQUIRE(n_whole >= n_parts);
      else
        REQUIRE(n_whole <= n_parts);
    }
  }
}

TEST_CASE("gap scaling of the Mezincescu restrictions") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  for (const auto& vper :
       {PeriodicBackground::zero(), PeriodicBackground::cosine(1.0),
        skew_cosine()}) {
    auto gs = periodic_ground_state(vper, geom, 8);
    for (int L = 1; L <= 12; ++L) {
      BoxGrid grid(geom, L, 8);
      auto robin = mezincescu_coefficients(gs, grid);
      auto h = assemble_hamiltonian(vper_on_grid(vper, grid), grid,
                                    BC::Mezincescu, &robin);
      SolverConfig cfg;
      cfg.k = 2;
      auto s = lowest_eigenpairs(h.mat, cfg);
      double gap = s.values(1) - s.values(0);
      REQUIRE(gap * L * L > 0.2);  // stays bounded away from zero
    }
  }
}

TEST_CASE("free Neumann gap matches the closed form") {
  LatticeGeometry geom = LatticeGeometry::cubic(1);
  int n_h = 8;
  auto gs = periodic_ground_state(PeriodicBackground::zero(), geom, n_h);
  for (int L : {1, 2, 4}) {
    BoxGrid grid(geom, L, n_h);
    auto robin = mezincescu_coefficients(gs, grid);
    auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Mezincescu,
                                  &robin);
    auto s = spectrum_of(h);
    int n = grid.nodes_per_axis();
    double hstep = grid.spacing(0);
    double expect = 2.0 / (hstep * hstep) * (1.0 - std::cos(M_PI / n));
    REQUIRE(s.values(1) - s.values(0) == Catch::Approx(expect).margin(1e-10));
  }
}

TEST_CASE("d=2 free Dirichlet lowest mode") {
  BoxGrid grid(LatticeGeometry::cubic(2), 1, 6);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Dirichlet);
  auto s = dense_spectrum(Eigen::MatrixXd(h.mat), false);
  int n = grid.nodes_per_axis();
  double hstep = grid.spacing(0);
  double e1d = 2.0 / (hstep * hstep) * (1.0 - std::cos(M_PI / (n + 1)));
  REQUIRE(s.values(0) == Catch::Approx(2.0 * e1d).margin(1e-10));
}

TEST_CASE("sheared generator in d=2 assembles the metric stencil") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.4, 0.0, 1.0;
  auto geom = LatticeGeometry::general(2, m);
  REQUIRE_FALSE(geom.diagonal);
  BoxGrid grid(geom, 0, 6);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Dirichlet);
  Eigen::MatrixXd dense(h.mat);
  REQUIRE((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
  auto s = dense_spectrum(dense, false);
  REQUIRE(s.values(0) > 0.0);
  // Neumann with a sheared generator is out of scope
  REQUIRE_THROWS_AS(assemble_hamiltonian(zero_potential(grid), grid,
                                         BC::Neumann),
                    ConfigError);
}

TEST_CASE("d=2 ground-state preservation exercises corner data") {
  LatticeGeometry geom = LatticeGeometry::cubic(2);
  PeriodicBackground vper;
  vper.kind = PeriodicBackground::Kind::CosineSum;
  vper.terms.push_back({1.0, {1, 0, 0}, 0.7});
  vper.terms.push_back({0.5, {0, 1, 0}, 1.3});
  int n_h = 6;
  auto gs = periodic_ground_state(vper, geom, n_h);
  BoxGrid grid(geom, 1, n_h);
  auto robin = mezincescu_coefficients(gs, grid);
  auto h = assemble_hamiltonian(vper_on_grid(vper, grid), grid,
                                BC::Mezincescu, &robin);
  auto spec = dense_spectrum(Eigen::MatrixXd(h.mat), false);
  REQUIRE(spec.values(0) ==
          Catch::Approx(gs.energy).margin(1e-10 * (1.0 + std::abs(gs.energy))));
}

TEST_CASE("d=3 free Neumann box has a flat bottom") {
  BoxGrid grid(LatticeGeometry::cubic(3), 1, 2);
  auto h = assemble_hamiltonian(Eigen::VectorXd::Zero(grid.dof()), grid,
                                BC::Neumann);
  auto spec = dense_spectrum(Eigen::MatrixXd(h.mat), false);
  REQUIRE(std::abs(spec.values(0)) < 1e-11);
}

TEST_CASE("anisotropic diagonal generator scales the stencil") {
  auto geom = LatticeGeometry::diag(2, {1.0, 2.0});
  BoxGrid grid(geom, 0, 4);
  auto h = assemble_hamiltonian(Eigen::VectorXd::Zero(grid.dof()), grid,
                                BC::Dirichlet);
  // lowest mode of the anisotropic box: sum of per-axis chain bottoms
  double e1 = 0.0;
  for (int a = 0; a < 2; ++a) {
    double ha = grid.spacing(a);
    e1 += 2.0 / (ha * ha) * (1.0 - std::cos(M_PI / 5.0));
  }
  auto spec = dense_spectrum(Eigen::MatrixXd(h.mat), false);
  REQUIRE(spec.values(0) == Catch::Approx(e1).margin(1e-10));
}

TEST_CASE("operator dump has a header and coordinate rows") {
  BoxGrid grid(LatticeGeometry::cubic(1), 0, 2);
  auto h = assemble_hamiltonian(zero_potential(grid), grid, BC::Dirichlet);
  std::ostringstream os;
  dump_operator(h, os);
  std::string text = os.str();
  REQUIRE(text.find("dof=2") != std::string::npos);
  REQUIRE(text.find("bc=D") != std::string::npos);
  REQUIRE(text.find("0 1 ") != std::string::npos);
}
