#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "speclab/potential.hpp"

using namespace speclab;

namespace {

PotentialModel standard_model_1d(double mu, CouplingLaw law,
                                 SingleSitePotential::BaseSet base =
                                     SingleSitePotential::BaseSet::HalfCell) {
  PotentialModel m;
  m.geometry = LatticeGeometry::cubic(1);
  switch (base) {
    case SingleSitePotential::BaseSet::HalfCell:
      m.site = SingleSitePotential::standard_half_cell(mu, m.geometry);
      break;
    case SingleSitePotential::BaseSet::AxisBox:
      m.site = SingleSitePotential::standard_box(mu, Vec3(1.0, 1.0, 1.0), 1);
      break;
    case SingleSitePotential::BaseSet::Ball:
      m.site = SingleSitePotential::standard_ball(mu, 0.5);
      break;
  }
  m.laws = {law};
  return m;
}

}  // namespace

TEST_CASE("sampling is reproducible and law-faithful") {
  auto m = standard_model_1d(1.0, CouplingLaw::uniform());
  auto r1 = sample_realization(m, 0, 1234, 0);
  auto r2 = sample_realization(m, 0, 1234, 0);
  REQUIRE(r1.lambda.size() == 1);
  REQUIRE(r1.lambda[0] == r2.lambda[0]);
  REQUIRE(r1.lambda[0] >= 0.0);
  REQUIRE(r1.lambda[0] <= 1.0);

  auto r3 = sample_realization(m, 0, 1234, 1);
  REQUIRE(r3.lambda[0] != r1.lambda[0]);
}

TEST_CASE("point mass law gives constant couplings") {
  auto m = standard_model_1d(1.0, CouplingLaw::constant(1.0));
  auto r = sample_realization(m, 1, 77, 3);
  REQUIRE(r.lambda.size() == 3);
  for (double v : r.lambda) REQUIRE(v == 1.0);
}

TEST_CASE("uniform law empirical mean near 1/2 over 10^4 draws") {
  auto m = standard_model_1d(1.0, CouplingLaw::uniform());
  RunningMean acc;
  // d=1, L=4999 -> |I_L| = 9999 + one extra sample
  auto r = sample_realization(m, 4999, 2024, 0);
  for (double v : r.lambda) acc.add(v);
  REQUIRE(std::abs(acc.mean() - 0.5) < 0.02);
}

TEST_CASE("evaluate_potential on the standard breather") {
  // full-cell base set, mu = 2, lambda = 1: value 2 at the origin
  auto m = standard_model_1d(2.0, CouplingLaw::constant(1.0),
                             SingleSitePotential::BaseSet::AxisBox);
  auto r = sample_realization(m, 0, 1, 0);
  auto v = evaluate_potential(m, r, Vec3(0.0, 0.0, 0.0));
  REQUIRE(v.value == 2.0);
  REQUIRE(v.complete);

  // lambda = 0 switches the site off everywhere
  auto m0 = standard_model_1d(2.0, CouplingLaw::constant(0.0),
                              SingleSitePotential::BaseSet::AxisBox);
  auto r0 = sample_realization(m0, 0, 1, 0);
  REQUIRE(evaluate_potential(m0, r0, Vec3(0.1, 0.0, 0.0)).value == 0.0);
  REQUIRE(evaluate_potential(m0, r0, Vec3(0.0, 0.0, 0.0)).value == 0.0);
}

TEST_CASE("ball membership in d=2") {
  PotentialModel m;
  m.geometry = LatticeGeometry::cubic(2);
  m.site = SingleSitePotential::standard_ball(1.0, 1.0);
  m.laws = {CouplingLaw::constant(0.5)};
  auto r = sample_realization(m, 0, 1, 0);
  // |x| ~ 0.566 > 0.5 * 1 -> outside the dilated ball
  auto v = evaluate_potential(m, r, Vec3(0.4, 0.4, 0.0));
  REQUIRE(v.value == 0.0);
  auto inside = evaluate_potential(m, r, Vec3(0.3, 0.3, 0.0));
  REQUIRE(inside.value == 1.0);
}

TEST_CASE("grid evaluation: zero couplings give the zero function") {
  auto m = standard_model_1d(1.0, CouplingLaw::constant(0.0));
  auto r = sample_realization(m, 2, 5, 0);
  BoxGrid grid(m.geometry, 2, 8);
  auto w = evaluate_on_grid(m, r, grid);
  REQUIRE(w.norm() == 0.0);
}

TEST_CASE("grid evaluation is monotone in each coupling") {
  auto m = standard_model_1d(1.5, CouplingLaw::uniform());
  BoxGrid grid(m.geometry, 1, 8);
  auto r = sample_realization(m, 1, 31, 0);
  r.lambda = {0.4, 0.3, 0.9};
  auto w_lo = evaluate_on_grid(m, r, grid);
  r.lambda[1] = 0.6;
  auto w_hi = evaluate_on_grid(m, r, grid);
  for (int i = 0; i < w_lo.size(); ++i) REQUIRE(w_hi(i) >= w_lo(i));

  // general breather with radial nonincreasing profile is monotone too
  PotentialModel gb;
  gb.geometry = LatticeGeometry::cubic(1);
  gb.site = SingleSitePotential::general_tent(1.0, 0.45);
  gb.laws = {CouplingLaw::uniform()};
  auto rg = sample_realization(gb, 1, 8, 0);
  rg.lambda = {0.2, 0.5, 0.7};
  auto g_lo = evaluate_on_grid(gb, rg, grid);
  rg.lambda[0] = 0.8;
  auto g_hi = evaluate_on_grid(gb, rg, grid);
  for (int i = 0; i < g_lo.size(); ++i) REQUIRE(g_hi(i) >= g_lo(i));
}

TEST_CASE("nonzero node fraction approaches |A|/|D|") {
  // single cell, lambda = 1, A = axis box of width 1/2
  PotentialModel m;
  m.geometry = LatticeGeometry::cubic(1);
  m.site = SingleSitePotential::standard_box(1.0, Vec3(0.5, 1.0, 1.0), 1);
  m.laws = {CouplingLaw::constant(1.0)};
  auto r = sample_realization(m, 0, 1, 0);
  BoxGrid fine(m.geometry, 0, 256);
  auto w = evaluate_on_grid(m, r, fine);
  double frac = 0.0;
  for (int i = 0; i < w.size(); ++i)
    if (w(i) > 0.0) frac += 1.0;
  frac /= static_cast<double>(w.size());
  REQUIRE(std::abs(frac - 0.5) <= 1.0 / 256.0 + 1e-12);
}

TEST_CASE("potential values never negative") {
  auto m = standard_model_1d(1.0, CouplingLaw::uniform());
  BoxGrid grid(m.geometry, 2, 8);
  for (int s = 0; s < 10; ++s) {
    auto r = sample_realization(m, 2, 999, static_cast<std::uint64_t>(s));
    auto w = evaluate_on_grid(m, r, grid);
    REQUIRE(w.minCoeff() >= 0.0);
  }
}

TEST_CASE("cutoff operator clamps to {0, mu} below the input") {
  // u == 2 on |x| <= 0.15 (measure 0.3 inside D), mu = 1
  auto u = SingleSitePotential::custom(
      [](double, const Vec3& z) { return std::abs(z(0)) <= 0.15 ? 2.0 : 0.0; },
      0.2);
  auto cut = cutoff_simplify(u, 1.0);
  LatticeGeometry g = LatticeGeometry::cubic(1);
  BoxGrid fine(g, 0, 512);
  double measure = 0.0;
  for (std::int64_t i = 0; i < fine.dof(); ++i) {
    Vec3 z = fine.physical_point(fine.multi_index(i));
    double vin = u.eval(1.0, z, g);
    double vout = cut.eval(1.0, z, g);
    REQUIRE((vout == 0.0 || vout == 1.0));
    REQUIRE(vout <= vin);
    if (vout == 1.0) measure += fine.node_weight();
  }
  REQUIRE(std::abs(measure - 0.3) < 2.0 / 512.0);

  // u below the cutoff everywhere -> identically zero
  auto low = SingleSitePotential::custom(
      [](double, const Vec3&) { return 0.4; }, 0.6);
  auto cl = cutoff_simplify(low, 1.0);
  REQUIRE(cl.eval(1.0, Vec3(0.1, 0.0, 0.0), g) == 0.0);
}

TEST_CASE("cutoff of a tent matches a direct threshold scan") {
  auto tent = SingleSitePotential::general_tent(1.0, 0.4);
  auto cut = cutoff_simplify(tent, 0.5);
  LatticeGeometry g = LatticeGeometry::cubic(1);
  BoxGrid fine(g, 0, 512);
  double area_cut = 0.0, area_scan = 0.0;
  for (std::int64_t i = 0; i < fine.dof(); ++i) {
    Vec3 z = fine.physical_point(fine.multi_index(i));
    if (cut.eval(1.0, z, g) > 0.0) area_cut += fine.node_weight();
    if (tent.eval(1.0, z, g) >= 0.5) area_scan += fine.node_weight();
  }
  REQUIRE(area_cut == Catch::Approx(area_scan).margin(1e-12));
  // tent >= 1/2 on |x| <= 0.2
  REQUIRE(std::abs(area_scan - 0.4) < 2.0 / 512.0);
}

TEST_CASE("non-degeneracy margin examples") {
  // deterministic half-cell indicator: integral exactly 1/2
  auto m = standard_model_1d(1.0, CouplingLaw::constant(1.0));
  auto nd = non_degeneracy_margin(m, 4, 11, 256);
  REQUIRE(nd.estimate == Catch::Approx(0.5).margin(1.0 / 256.0));

  // switched-off site: margin 0
  auto z = standard_model_1d(1.0, CouplingLaw::constant(0.0));
  auto nz = non_degeneracy_margin(z, 4, 11, 64);
  REQUIRE(nz.estimate == 0.0);

  // full-cell base, uniform coupling: E|lambda A| = 1/2 (3 sigma)
  auto u = standard_model_1d(1.0, CouplingLaw::uniform(),
                             SingleSitePotential::BaseSet::AxisBox);
  auto nu = non_degeneracy_margin(u, 4000, 12, 128);
  REQUIRE(std::abs(nu.estimate - 0.5) <
          nu.half_width + 1.0 / 128.0 + 1e-6);
}

TEST_CASE("mu-non-degeneracy check examples") {
  // u == 1 on the whole cell: P = 1 >= mu for any mu
  auto full = standard_model_1d(1.0, CouplingLaw::constant(1.0),
                                SingleSitePotential::BaseSet::AxisBox);
  auto ok = mu_nondegeneracy_check(full, 0.5, 200, 5, 64);
  REQUIRE(ok.pass);
  REQUIRE(ok.probability == 1.0);

  // switched-off potential: probability 0, fail
  auto off = standard_model_1d(1.0, CouplingLaw::constant(0.0),
                               SingleSitePotential::BaseSet::AxisBox);
  auto bad = mu_nondegeneracy_check(off, 0.25, 200, 5, 64);
  REQUIRE_FALSE(bad.pass);
  REQUIRE(bad.probability == 0.0);

  // uniform coupling, full cell, mu = 0.2: P{lambda >= 0.2} = 0.8
  auto u = standard_model_1d(1.0, CouplingLaw::uniform(),
                             SingleSitePotential::BaseSet::AxisBox);
  auto est = mu_nondegeneracy_check(u, 0.2, 4000, 6, 128);
  REQUIRE(est.pass);
  REQUIRE(est.probability == Catch::Approx(0.8).margin(0.03));
}

TEST_CASE("margin and mu-check agree on non-degeneracy") {
  std::vector<PotentialModel> models;
  models.push_back(standard_model_1d(1.0, CouplingLaw::uniform()));
  models.push_back(standard_model_1d(0.5, CouplingLaw::two_point(0.3, 1.0)));
  models.push_back(standard_model_1d(1.0, CouplingLaw::constant(0.0)));
  for (const auto& m : models) {
    auto margin = non_degeneracy_margin(m, 500, 21, 64);
    bool margin_positive = margin.estimate - margin.half_width > 0.0;
    bool mu_found = false;
    for (double mu : {0.5, 0.25, 0.125, 0.0625, 0.03125}) {
      auto chk = mu_nondegeneracy_check(m, mu, 500, 22, 64);
      if (chk.pass) {
        mu_found = true;
        break;
      }
    }
    REQUIRE(margin_positive == mu_found);
  }
}

TEST_CASE("per-site laws cycle over the index set") {
  PotentialModel m;
  m.geometry = LatticeGeometry::cubic(1);
  m.site = SingleSitePotential::standard_half_cell(1.0, m.geometry);
  m.laws = {CouplingLaw::constant(1.0), CouplingLaw::constant(0.25)};
  auto r = sample_realization(m, 2, 3, 0);  // 5 sites
  REQUIRE(r.lambda == std::vector<double>{1.0, 0.25, 1.0, 0.25, 1.0});
}

TEST_CASE("out-of-range evaluation is flagged as partial") {
  auto m = standard_model_1d(1.0, CouplingLaw::constant(1.0),
                             SingleSitePotential::BaseSet::AxisBox);
  auto r = sample_realization(m, 0, 1, 0);  // one cell only
  // a point whose support neighborhood needs the missing cell k = 1
  auto v = evaluate_potential(m, r, Vec3(0.8, 0.0, 0.0));
  REQUIRE_FALSE(v.complete);
  REQUIRE(v.value >= 0.0);
}

TEST_CASE("tabulated inverse-CDF law samples and integrates") {
  // quantile knots of the square-root law: Q(u) = u^2
  std::vector<double> knots;
  for (int i = 0; i <= 64; ++i) {
    double u = i / 64.0;
    knots.push_back(u * u);
  }
  auto law = CouplingLaw::inverse_cdf(knots);
  law.validate();
  REQUIRE(law.mean() == Catch::Approx(1.0 / 3.0).margin(1e-3));
  REQUIRE(law.zero_in_support());
  RunningMean acc;
  for (int s = 0; s < 20000; ++s)
    acc.add(law.sample(rng::uniform01(3, static_cast<std::uint64_t>(s))));
  REQUIRE(acc.mean() == Catch::Approx(1.0 / 3.0).margin(0.01));
  // nondecreasing knots are required
  REQUIRE_THROWS_AS(CouplingLaw::inverse_cdf({0.5, 0.2}).validate(),
                    ConfigError);
}

TEST_CASE("invalid laws are rejected") {
  PotentialModel m;
  m.geometry = LatticeGeometry::cubic(1);
  m.site = SingleSitePotential::standard_half_cell(1.0, m.geometry);
  m.laws = {CouplingLaw::constant(1.5)};
  REQUIRE_THROWS_AS(sample_realization(m, 0, 1, 0), ConfigError);
  m.laws = {CouplingLaw::two_point(1.0, 0.5)};
  REQUIRE_THROWS_AS(sample_realization(m, 0, 1, 0), ConfigError);
}
