#pragma once

// Shared helpers for the test suites: small dense builders and models.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "speclab/geometry.hpp"
#include "speclab/law.hpp"
#include "speclab/operators.hpp"
#include "speclab/potential.hpp"

namespace testsupport {

using speclab::BC;
using speclab::SpMat;
using speclab::Vec3;

// 1d second-difference operator on an arbitrary node range with Dirichlet
// (zero ghost) or Neumann (reflected ghost) ends, plus a diagonal potential.
inline SpMat range_operator_1d(const Eigen::VectorXd& v, double h, BC bc) {
  int n = static_cast<int>(v.size());
  double inv = 1.0 / (h * h);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    double diag = 2.0 * inv + v(i);
    if (i > 0)
      t.emplace_back(i, i - 1, -inv);
    else if (bc == BC::Neumann)
      diag -= inv;
    if (i + 1 < n)
      t.emplace_back(i, i + 1, -inv);
    else if (bc == BC::Neumann)
      diag -= inv;
    t.emplace_back(i, i, diag);
  }
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline speclab::PotentialModel breather_model_1d(
    double mu = 1.0,
    speclab::CouplingLaw law = speclab::CouplingLaw::uniform()) {
  speclab::PotentialModel m;
  m.geometry = speclab::LatticeGeometry::cubic(1);
  m.site = speclab::SingleSitePotential::standard_half_cell(mu, m.geometry);
  m.laws = {law};
  return m;
}

// asymmetric periodic background: nonzero Robin data at the box faces
inline speclab::PeriodicBackground skew_cosine(double amp = 1.0) {
  std::vector<speclab::PeriodicBackground::CosTerm> terms;
  terms.push_back({amp, {1, 0, 0}, 0.8});
  terms.push_back({0.4 * amp, {2, 0, 0}, 1.9});
  return speclab::PeriodicBackground::cosine_sum(terms);
}

}  // namespace testsupport
