#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "speclab/eigensolve.hpp"
#include "speclab/errors.hpp"
#include "speclab/operators.hpp"
#include "speclab/potential.hpp"
#include "speclab/stats.hpp"

namespace speclab {

// ---------------------------------------------------------------------------
// Thirring's inequality and its rank-one corollary

struct ThirringInput {
  Eigen::MatrixXd h;       // small dense symmetric operator
  Eigen::VectorXd v_diag;  // positive diagonal perturbation
  Eigen::VectorXd psi;     // normalized ground state of h
  double e1 = 0.0;
  double e2 = 0.0;

  static ThirringInput from_dense(const Eigen::MatrixXd& h,
                                  const Eigen::VectorXd& v_diag) {
    if (v_diag.minCoeff() <= 0.0)
      throw std::domain_error("Thirring needs a positive perturbation");
    auto spec = dense_spectrum(h);
    ThirringInput in;
    in.h = h;
    in.v_diag = v_diag;
    in.psi = spec.vectors.col(0);
    in.e1 = spec.values(0);
    in.e2 = spec.values.size() > 1 ? spec.values(1) : spec.values(0);
    return in;
  }
};

// min{ E1(H) + <psi, V^{-1} psi>^{-1}, E2(H) } <= E1(H+V)
inline double thirring_corollary_bound(const ThirringInput& in) {
  if (in.v_diag.minCoeff() <= 0.0)
    throw std::domain_error("Thirring needs a positive perturbation");
  double inv_quad = 0.0;
  for (int i = 0; i < in.psi.size(); ++i)
    inv_quad += in.psi(i) * in.psi(i) / in.v_diag(i);
  return std::min(in.e1 + 1.0 / inv_quad, in.e2);
}

struct ThirringCertificate {
  double bound = 0.0;
  double e1_perturbed = 0.0;
  bool holds = false;
};

inline ThirringCertificate thirring_corollary_certify(const ThirringInput& in,
                                                      double slack = 1e-10) {
  ThirringCertificate c;
  c.bound = thirring_corollary_bound(in);
  Eigen::MatrixXd hv = in.h;
  hv.diagonal() += in.v_diag;
  c.e1_perturbed = dense_spectrum(hv, false).values(0);
  c.holds = c.bound <= c.e1_perturbed + slack;
  return c;
}

struct ProjectionCertificate {
  double min_eig_gap = 0.0;     // smallest eigenvalue of V - P*(PV^-1P*)^-1P
  double max_violation = 0.0;   // max_n E_n(H+B) - E_n(H+V)
  bool operator_bound = false;  // V - B is PSD
  bool eigenvalue_bound = false;
};

// Certifies P*(P V^{-1} P*)^{-1} P <= V and the implied eigenvalue
// domination for H + (.) over the full spectrum. P has orthonormal rows.
inline ProjectionCertificate thirring_projection_bound(
    const Eigen::MatrixXd& h, const Eigen::MatrixXd& v,
    const Eigen::MatrixXd& p, double slack = 1e-10) {
  Eigen::MatrixXd v_chol = v;
  Eigen::LLT<Eigen::MatrixXd> llt(v_chol);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("Thirring projection needs positive definite V");
  Eigen::MatrixXd vinv = llt.solve(Eigen::MatrixXd::Identity(v.rows(), v.cols()));
  Eigen::MatrixXd core = p * vinv * p.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(core);
  if (!lu.isInvertible())
    throw std::domain_error("P V^{-1} P* is singular on the projected space");
  Eigen::MatrixXd b = p.transpose() * lu.inverse() * p;

  ProjectionCertificate cert;
  Eigen::MatrixXd gap = v - b;
  gap = 0.5 * (gap + gap.transpose()).eval();
  cert.min_eig_gap = dense_spectrum(gap, false).values(0);
  cert.operator_bound = cert.min_eig_gap >= -slack;

  auto sb = dense_spectrum((h + b).eval(), false);
  auto sv = dense_spectrum((h + v).eval(), false);
  double worst = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < sb.values.size(); ++n)
    worst = std::max(worst, sb.values(n) - sv.values(n));
  cert.max_violation = worst;
  cert.eigenvalue_bound = worst <= slack;
  return cert;
}

// ---------------------------------------------------------------------------
// Temple's inequality

// E1(H) >= <psi,H psi> - (||H psi||^2 - <psi,H psi>^2) / (nu - <psi,H psi>),
// valid for <psi,H psi> < nu <= E2(H). The failure of the first condition
// is a first-class outcome.
inline double temple_lower_bound(const Eigen::MatrixXd& h,
                                 const Eigen::VectorXd& psi, double nu) {
  double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-10)
    throw ConfigError("Temple needs a normalized trial state");
  Eigen::VectorXd hpsi = h * psi;
  double m1 = psi.dot(hpsi);
  if (m1 >= nu)
    throw HypothesisError(
        "Temple hypothesis violated: <psi,H psi> >= nu (variance term "
        "dominates the gap)");
  double var = hpsi.squaredNorm() - m1 * m1;
  return m1 - var / (nu - m1);
}

struct TempleCertificate {
  double value = 0.0;
  double e1 = 0.0;
  bool hypothesis_ok = false;
  bool holds = false;
};

inline TempleCertificate temple_certify(const Eigen::MatrixXd& h,
                                        const Eigen::VectorXd& psi, double nu,
                                        double slack = 1e-10) {
  TempleCertificate c;
  auto spec = dense_spectrum(h, false);
  c.e1 = spec.values(0);
  double e2 = spec.values.size() > 1 ? spec.values(1) : spec.values(0);
  if (nu > e2 + slack)
    throw HypothesisError("Temple hypothesis violated: nu above E2");
  c.value = temple_lower_bound(h, psi, nu);  // may throw HypothesisError
  c.hypothesis_ok = true;
  c.holds = c.value <= c.e1 + slack;
  return c;
}

// ---------------------------------------------------------------------------
// Spectral gap calibration and critical lengths

struct GapEstimate {
  double cgap = 0.0;  // min over L of L^2 * (E2 - E1)
  double loglog_slope = 0.0;
  std::vector<int> lengths;
  std::vector<double> gaps;
};

inline GapEstimate gap_constant(const PeriodicBackground& vper,
                                const LatticeGeometry& geom, int n_h,
                                const std::vector<int>& l_list) {
  if (l_list.empty()) throw ConfigError("gap calibration needs box sizes");
  auto gs = periodic_ground_state(vper, geom, n_h);
  GapEstimate est;
  est.cgap = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (int L : l_list) {
    BoxGrid grid(geom, L, n_h);
    auto robin = mezincescu_coefficients(gs, grid);
    auto h = assemble_hamiltonian(vper_on_grid(vper, grid), grid,
                                  BC::Mezincescu, &robin);
    SolverConfig cfg;
    cfg.k = 2;
    cfg.tol = 1e-10;
    auto spec = lowest_eigenpairs(h.mat, cfg);
    double gap = spec.values(1) - spec.values(0);
    est.lengths.push_back(L);
    est.gaps.push_back(gap);
    est.cgap = std::min(est.cgap, gap * L * L);
    lx.push_back(std::log(static_cast<double>(L)));
    ly.push_back(std::log(gap));
  }
  if (est.lengths.size() >= 2) est.loglog_slope = fit_line(lx, ly).slope;
  return est;
}

// Calibrated constants for the low-energy regime.
struct ProofConstants {
  double cgap = 0.0;
  double beta = 0.0;  // lower bound on E[X_k] (or the exact mean)
  double mu = 0.0;    // two-valued site height
  double e0 = 0.0;

  double gamma(int L) const { return cgap / (2.0 * L * L); }
  double delta() const { return cgap * beta / 8.0; }
  int l_floor() const {
    return static_cast<int>(std::ceil(std::sqrt(cgap / (2.0 * mu))));
  }
  // exp(-cexp2 (E-E0)^{-d/2}) is the predicted tail
  double cexp2(int dim) const {
    return beta * beta * std::pow(delta(), 0.5 * dim) / 16.0;
  }
  double tail_bound(double offset, int dim) const {
    return std::exp(-cexp2(dim) * std::pow(offset, -0.5 * dim));
  }

  void validate() const {
    if (!(cgap > 0.0) || !(beta > 0.0) || !(mu > 0.0))
      throw ConfigError("proof constants must be positive");
    if (beta > 1.0) throw ConfigError("beta must lie in (0,1]");
  }
};

// L_E = floor(sqrt(cgap * beta / (8 (E - E0)))), guarded by the floor
// length L0 = ceil(sqrt(cgap / (2 mu))).
inline int critical_length(double energy, double e0,
                           const ProofConstants& constants) {
  constants.validate();
  if (!(energy > e0))
    throw OutOfRegimeError("critical length needs E > E0");
  double l = std::floor(std::sqrt(constants.delta() / (energy - e0)));
  int l_e = static_cast<int>(l);
  int l_min = std::max(1, constants.l_floor());
  if (l_e < l_min)
    throw OutOfRegimeError(
        "energy too far above the ground state: L_E = " + std::to_string(l_e) +
        " below the floor " + std::to_string(l_min));
  return l_e;
}

// companion length floor(sqrt(cgap / (2 E))), an upper guard for L_E
inline int hat_length(double energy, double e0, const ProofConstants& c) {
  if (!(energy > e0)) throw OutOfRegimeError("hat length needs E > E0");
  return static_cast<int>(std::floor(std::sqrt(c.cgap / (2.0 * (energy - e0)))));
}

// ---------------------------------------------------------------------------
// Ground-state mass statistics X_k and S_L

// X_k = integral of |Psi|^2 over the sampled support of u_{lambda_k}
// within the site's cell, by the same cell-center quadrature that samples
// the potential.
inline double xk_statistic(const PeriodicGroundState& gs,
                           const PotentialModel& model, double lambda_k) {
  const BoxGrid& cell = gs.cell_grid;
  double w = cell.node_weight();
  double acc = 0.0;
  for (std::int64_t i = 0; i < cell.dof(); ++i) {
    Vec3 z = cell.physical_point(cell.multi_index(i));
    if (model.site.eval(lambda_k, z, model.geometry) > 0.0)
      acc += gs.psi(i) * gs.psi(i) * w;
  }
  return acc;
}

inline double s_average(const PeriodicGroundState& gs,
                        const PotentialModel& model, const Realization& r) {
  double acc = 0.0;
  for (double lambda : r.lambda) acc += xk_statistic(gs, model, lambda);
  return acc / static_cast<double>(r.lambda.size());
}

// ---------------------------------------------------------------------------
// The eigenvalue chain (gamma_L/2) S_L <= E1(H_0) + <Psi_L, V^-1 Psi_L>^-1

struct XsvBound {
  double gamma = 0.0;
  double s_l = 0.0;
  double lhs = 0.0;        // (gamma/2) S_L
  double mid = 0.0;        // E1(H_0) + <Psi_L,V^-1 Psi_L>^-1, E0-normalized
  double quad_inv = 0.0;   // <Psi_L, V^-1 Psi_L>
  bool holds = false;
};

// Both sides of the chain, E0-normalized. For two-valued sites the inner
// product uses the exact per-cell split X/(mu+gamma) + (1-X)/gamma.
inline XsvBound xsv_eigenvalue_bound(const PotentialModel& model,
                                     const Realization& r,
                                     const PeriodicGroundState& gs,
                                     const ProofConstants& constants,
                                     double slack = 1e-10) {
  constants.validate();
  int L = r.box.L;
  if (L < std::max(1, constants.l_floor()))
    throw OutOfRegimeError("box below the floor length L0");
  XsvBound out;
  out.gamma = constants.gamma(L);
  double mu = constants.mu;

  double n = static_cast<double>(r.box.size());
  if (model.site.two_valued()) {
    double acc = 0.0, s = 0.0;
    for (double lambda : r.lambda) {
      double x = xk_statistic(gs, model, lambda);
      s += x;
      acc += x / (mu + out.gamma) + (1.0 - x) / out.gamma;
    }
    out.s_l = s / n;
    out.quad_inv = acc / n;
  } else {
    // grid quadrature of |Psi_L|^2 / (W + gamma)
    BoxGrid grid(model.geometry, L, gs.cell_grid.n_h);
    Eigen::VectorXd w_grid = evaluate_on_grid(model, r, grid);
    double w = grid.node_weight();
    double acc = 0.0;
    for (std::int64_t i = 0; i < grid.dof(); ++i) {
      auto idx = grid.multi_index(i);
      double psi = gs.at_local(grid.local_linear(grid.local_of(idx)));
      acc += psi * psi * w / (w_grid(i) + out.gamma);
    }
    out.quad_inv = acc / n;
    out.s_l = s_average(gs, model, r);
  }
  out.lhs = 0.5 * out.gamma * out.s_l;
  out.mid = -out.gamma + 1.0 / out.quad_inv;
  out.holds = out.lhs <= out.mid + slack;
  return out;
}

// ---------------------------------------------------------------------------
// Concentration: Chernoff rate and the Bernstein bound

struct ConcentrationLaw {
  enum class Kind { Bernoulli, Uniform01, Constant, Tabulated };
  Kind kind = Kind::Bernoulli;
  double p = 0.5;  // Bernoulli success probability / constant value
  std::vector<std::pair<double, double>> atoms;  // (value, weight)

  static ConcentrationLaw bernoulli(double prob) {
    return ConcentrationLaw{Kind::Bernoulli, prob, {}};
  }
  static ConcentrationLaw uniform01() {
    return ConcentrationLaw{Kind::Uniform01, 0.0, {}};
  }
  static ConcentrationLaw constant(double c) {
    return ConcentrationLaw{Kind::Constant, c, {}};
  }
  static ConcentrationLaw tabulated(
      std::vector<std::pair<double, double>> atoms) {
    return ConcentrationLaw{Kind::Tabulated, 0.0, std::move(atoms)};
  }

  double mean() const {
    switch (kind) {
      case Kind::Bernoulli:
      case Kind::Constant:
        return p;
      case Kind::Uniform01:
        return 0.5;
      case Kind::Tabulated: {
        double m = 0.0, w = 0.0;
        for (auto& [x, q] : atoms) {
          m += x * q;
          w += q;
        }
        return m / w;
      }
    }
    return 0.0;
  }

  // M(t) = E[exp(t (E[X] - 2X))]
  double mgf(double t) const {
    double m = mean();
    switch (kind) {
      case Kind::Bernoulli:
        return (1.0 - p) * std::exp(t * m) + p * std::exp(t * (m - 2.0));
      case Kind::Constant:
        return std::exp(-t * p);
      case Kind::Uniform01: {
        if (std::abs(t) < 1e-12) return 1.0 - t * 0.0;
        return std::exp(0.5 * t) * (1.0 - std::exp(-2.0 * t)) / (2.0 * t);
      }
      case Kind::Tabulated: {
        double acc = 0.0, w = 0.0;
        for (auto& [x, q] : atoms) {
          acc += q * std::exp(t * (m - 2.0 * x));
          w += q;
        }
        return acc / w;
      }
    }
    return 1.0;
  }

  double draw(double u) const {
    switch (kind) {
      case Kind::Bernoulli:
        return u < p ? 1.0 : 0.0;
      case Kind::Constant:
        return p;
      case Kind::Uniform01:
        return u;
      case Kind::Tabulated: {
        double w = 0.0;
        for (auto& [x, q] : atoms) w += q;
        double acc = 0.0;
        for (auto& [x, q] : atoms) {
          acc += q / w;
          if (u <= acc) return x;
        }
        return atoms.back().first;
      }
    }
    return 0.0;
  }
};

struct ChernoffRate {
  double s_star = 0.0;
  double m_star = 1.0;
  double rate = 0.0;  // |log M(s*)|
};

// Minimizes M over a bracketed search on (0, t_max]; M(0) = 1 and
// M'(0) = -E[X] < 0 guarantee a minimizer with M < 1.
inline ChernoffRate chernoff_rate(const ConcentrationLaw& law,
                                  double t_max = 50.0,
                                  double bracket_tol = 1e-8) {
  if (!(law.mean() > 0.0))
    throw std::domain_error("Chernoff rate needs E[X] > 0");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = t_max;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = law.mgf(c), fd = law.mgf(d);
  while (b - a > bracket_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = law.mgf(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = law.mgf(d);
    }
  }
  ChernoffRate out;
  out.s_star = 0.5 * (a + b);
  out.m_star = law.mgf(out.s_star);
  if (!(out.m_star < 1.0))
    throw std::domain_error("no exponential rate found below 1");
  out.rate = std::abs(std::log(out.m_star));
  return out;
}

// exp(-beta^2 n / 16), the sub-mean tail bound for means >= beta
inline double bernstein_bound(double beta, std::int64_t n) {
  if (!(beta > 0.0) || beta > 1.0)
    throw std::domain_error("beta must lie in (0,1]");
  if (n < 1) throw std::domain_error("sample count must be >= 1");
  return std::exp(-beta * beta * static_cast<double>(n) / 16.0);
}

struct BernsteinCertificate {
  double bound = 0.0;
  double exact_tail = 0.0;  // P{S_n <= beta/2} for Bernoulli(beta)
  bool holds = false;
};

inline BernsteinCertificate bernstein_certify(double beta, std::int64_t n) {
  BernsteinCertificate c;
  c.bound = bernstein_bound(beta, n);
  auto k = static_cast<std::int64_t>(
      std::floor(static_cast<double>(n) * beta / 2.0 + 1e-12));
  c.exact_tail = binomial_cdf(n, beta, k);
  c.holds = c.exact_tail <= c.bound + 1e-12;
  return c;
}

}  // namespace speclab
