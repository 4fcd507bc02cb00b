#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "speclab/bounds.hpp"
#include "speclab/parallel.hpp"
#include "speclab/rng.hpp"
#include "speclab/spectral_stats.hpp"

namespace speclab {

struct Certification {
  std::string name;
  bool pass = false;
  double statistic = 0.0;
  std::string detail;
};

namespace detail {

inline Eigen::MatrixXd random_sym(int n, std::uint64_t seed) {
  rng::Stream st(seed);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = st.next_sym();
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

inline Eigen::VectorXd random_positive_diag(int n, std::uint64_t seed) {
  rng::Stream st(seed, 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 0.05 + st.next_unit();
  return v;
}

}  // namespace detail

// Rank-one bound over random dense instances; slack 1e-10.
inline Certification certify_thirring_corollary(std::int64_t trials = 10000,
                                                std::uint64_t seed = 101,
                                                int jobs = 1) {
  std::vector<double> margins(static_cast<std::size_t>(trials));
  parallel_for(trials, jobs, [&](std::int64_t t) {
    auto key = rng::keyed(seed, static_cast<std::uint64_t>(t));
    int n = 2 + static_cast<int>(rng::to_unit(key) * 7);
    auto in = ThirringInput::from_dense(detail::random_sym(n, key),
                                        detail::random_positive_diag(n, key));
    auto cert = thirring_corollary_certify(in);
    margins[static_cast<std::size_t>(t)] = cert.bound - cert.e1_perturbed;
  });
  Certification c;
  c.name = "thirring_corollary";
  c.statistic = *std::max_element(margins.begin(), margins.end());
  c.pass = c.statistic <= 1e-10;
  c.detail = "max bound-minus-E1 over " + std::to_string(trials) +
             " instances: " + std::to_string(c.statistic);
  return c;
}

inline Certification certify_thirring_projection(std::int64_t trials = 1000,
                                                 std::uint64_t seed = 202,
                                                 int jobs = 1) {
  std::vector<char> ok(static_cast<std::size_t>(trials), 0);
  std::vector<double> worst(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, jobs, [&](std::int64_t t) {
    auto key = rng::keyed(seed, static_cast<std::uint64_t>(t));
    int n = 6;
    auto h = detail::random_sym(n, key);
    Eigen::MatrixXd v = detail::random_positive_diag(n, key).asDiagonal();
    rng::Stream st(key, 9);
    Eigen::MatrixXd raw(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) raw(i, j) = st.next_sym();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
    auto cert = thirring_projection_bound(h, v, q.transpose());
    ok[static_cast<std::size_t>(t)] =
        (cert.operator_bound && cert.eigenvalue_bound) ? 1 : 0;
    worst[static_cast<std::size_t>(t)] =
        std::max(cert.max_violation, -cert.min_eig_gap);
  });
  Certification c;
  c.name = "thirring_projection";
  c.pass = true;
  for (char o : ok) c.pass = c.pass && o;
  c.statistic = *std::max_element(worst.begin(), worst.end());
  c.detail = "worst certificate violation: " + std::to_string(c.statistic);
  return c;
}

inline Certification certify_temple(std::int64_t trials = 1000,
                                    std::uint64_t seed = 303, int jobs = 1) {
  // random instances with verified hypotheses
  std::vector<char> ok(static_cast<std::size_t>(trials), 1);
  std::vector<double> worst(static_cast<std::size_t>(trials), -1.0);
  parallel_for(trials, jobs, [&](std::int64_t t) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto key = rng::keyed(seed, static_cast<std::uint64_t>(t), attempt);
      int n = 3 + static_cast<int>(rng::to_unit(key) * 5);
      auto h = detail::random_sym(n, key);
      auto spec = dense_spectrum(h);
      rng::Stream st(key, 4);
      Eigen::VectorXd noise(n);
      for (int i = 0; i < n; ++i) noise(i) = st.next_sym();
      Eigen::VectorXd psi = spec.vectors.col(0) + 0.05 * noise;
      psi.normalize();
      double nu = spec.values(1);
      if (psi.dot(h * psi) >= nu) continue;  // resample until valid
      auto cert = temple_certify(h, psi, nu);
      ok[static_cast<std::size_t>(t)] = cert.holds ? 1 : 0;
      worst[static_cast<std::size_t>(t)] = cert.value - cert.e1;
      return;
    }
  });
  Certification c;
  c.name = "temple_valid_hypotheses";
  c.pass = true;
  for (char o : ok) c.pass = c.pass && o;
  c.statistic = *std::max_element(worst.begin(), worst.end());
  c.detail = "max value-minus-E1: " + std::to_string(c.statistic);
  return c;
}

// The two-valued-potential instance where the first-order energy already
// exceeds the unperturbed gap, so the hypothesis check must fire.
inline Certification certify_temple_failure_path() {
  PotentialModel model;
  model.geometry = LatticeGeometry::cubic(1);
  model.site = SingleSitePotential::standard_half_cell(1.0, model.geometry);
  model.laws = {CouplingLaw::constant(1.0)};
  BoxGrid grid(model.geometry, 3, 8);
  auto r = sample_realization(model, 3, 1, 0);
  auto s = assemble_sample(model, r, grid, BC::Neumann);
  Eigen::MatrixXd h(s.h.mat);
  Eigen::VectorXd psi = Eigen::VectorXd::Constant(
      grid.dof(), 1.0 / std::sqrt(static_cast<double>(grid.dof())));
  auto free_h = assemble_hamiltonian(Eigen::VectorXd::Zero(grid.dof()), grid,
                                     BC::Neumann);
  double nu = dense_spectrum(Eigen::MatrixXd(free_h.mat), false).values(1);
  Certification c;
  c.name = "temple_failure_path";
  try {
    temple_lower_bound(h, psi, nu);
    c.pass = false;
    c.detail = "hypothesis violation was not detected";
  } catch (const HypothesisError&) {
    c.pass = true;
    c.detail = "indicator potential triggers the hypothesis guard";
  }
  // the second moment collapses onto the first for two-valued potentials
  Eigen::VectorXd wpsi = s.w_grid.cwiseProduct(psi);
  c.statistic = std::abs(wpsi.squaredNorm() - psi.dot(wpsi));
  c.pass = c.pass && c.statistic < 1e-12;
  return c;
}

inline Certification certify_bernstein() {
  Certification c;
  c.name = "bernstein_vs_binomial";
  c.pass = true;
  double worst = 1.0;
  for (double beta : {0.2, 0.5, 0.9}) {
    for (std::int64_t n : {20, 50, 100, 200}) {
      auto cert = bernstein_certify(beta, n);
      c.pass = c.pass && cert.holds;
      worst = std::min(worst, cert.bound - cert.exact_tail);
    }
  }
  c.statistic = worst;
  c.detail = "min bound-minus-exact over the beta/n grid: " +
             std::to_string(worst);
  return c;
}

inline Certification certify_chernoff(std::uint64_t seed = 404) {
  Certification c;
  c.name = "chernoff_rate_and_tail";
  c.pass = true;
  for (auto law : {ConcentrationLaw::bernoulli(0.5),
                   ConcentrationLaw::uniform01()}) {
    auto rate = chernoff_rate(law);
    c.pass = c.pass && rate.m_star < 1.0 - 1e-6;
    // simulated sub-half-mean tail over 1e5 runs of length 50
    const int n = 50;
    const std::int64_t runs = 100000;
    std::int64_t tail_hits = 0;
    double half_mean = 0.5 * law.mean();
    for (std::int64_t rr = 0; rr < runs; ++rr) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += law.draw(rng::uniform01(seed, static_cast<std::uint64_t>(rr),
                                       static_cast<std::uint64_t>(k)));
      if (acc / n <= half_mean) ++tail_hits;
    }
    double bound = std::exp(-rate.rate * n);
    double p_hat = static_cast<double>(tail_hits) / static_cast<double>(runs);
    double sigma = std::sqrt(bound * (1.0 - bound) / runs);
    c.pass = c.pass && p_hat <= bound + 3.0 * sigma;
    c.statistic = std::max(c.statistic, p_hat - bound);
  }
  c.detail = "max simulated-minus-bound: " + std::to_string(c.statistic);
  return c;
}

// Chain certification on sampled breather realizations: the two-sided
// inequality plus its Thirring consequence against the dense spectrum.
inline Certification certify_eigenvalue_chain(std::int64_t trials = 100,
                                              std::uint64_t seed = 505,
                                              int jobs = 1) {
  PotentialModel model;
  model.geometry = LatticeGeometry::cubic(1);
  model.site = SingleSitePotential::standard_half_cell(1.0, model.geometry);
  model.laws = {CouplingLaw::uniform()};
  int n_h = 8;
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);
  auto gap = gap_constant(model.vper, model.geometry, n_h, {1, 2, 3, 4});
  ProofConstants constants;
  constants.cgap = gap.cgap;
  constants.beta = 0.25;
  constants.mu = 1.0;
  int L = 3;
  BoxGrid box(model.geometry, L, n_h);
  auto robin = mezincescu_coefficients(gs, box);
  Eigen::VectorXd vper = vper_on_grid(model.vper, box);

  std::vector<double> worst(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, jobs, [&](std::int64_t t) {
    auto r = sample_realization(model, L, seed, static_cast<std::uint64_t>(t));
    auto bound = xsv_eigenvalue_bound(model, r, gs, constants);
    auto asm_out = assemble_sample(model, r, box, BC::Mezincescu, &robin,
                                   &vper);
    double e1 = detail::lowest_eigenvalue(asm_out.h.mat, 1e-10);
    double violation = std::max(bound.lhs - bound.mid,
                                bound.mid - (e1 - gs.energy));
    worst[static_cast<std::size_t>(t)] = violation;
  });
  Certification c;
  c.name = "eigenvalue_chain";
  c.statistic = *std::max_element(worst.begin(), worst.end());
  c.pass = c.statistic <= 1e-10;
  c.detail = "max chain violation over " + std::to_string(trials) +
             " realizations: " + std::to_string(c.statistic);
  return c;
}

inline std::vector<Certification> run_bounds_checks(std::uint64_t seed,
                                                    int jobs = 1) {
  std::vector<Certification> out;
  out.push_back(certify_thirring_corollary(10000, rng::keyed(seed, 1), jobs));
  out.push_back(certify_thirring_projection(1000, rng::keyed(seed, 2), jobs));
  out.push_back(certify_temple(1000, rng::keyed(seed, 3), jobs));
  out.push_back(certify_temple_failure_path());
  out.push_back(certify_bernstein());
  out.push_back(certify_chernoff(rng::keyed(seed, 4)));
  out.push_back(certify_eigenvalue_chain(100, rng::keyed(seed, 5), jobs));
  return out;
}

}  // namespace speclab
