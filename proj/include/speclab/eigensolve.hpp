#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {

using SpMat = Eigen::SparseMatrix<double>;

struct SolverConfig {
  int k = 1;                   // number of eigenpairs
  double tol = 1e-8;           // relative residual target
  int max_iterations = 2000;
  int block_size = 0;          // 0: chosen from k
  std::int64_t dense_cutoff = 2000;
  bool want_vectors = true;
  std::uint64_t start_seed = 0x5eedb10cull;

  void validate() const {
    if (k < 1) throw ConfigError("solver needs k >= 1");
    if (!(tol > 0.0) || tol >= 1e-2)
      throw ConfigError("solver tolerance must lie in (0, 1e-2)");
  }
};

struct SpectralResult {
  enum class Method { Iterative, Dense };
  Eigen::VectorXd values;     // ascending
  Eigen::VectorXd residuals;  // ||Hv - lambda v||_2 per pair
  Eigen::MatrixXd vectors;    // unit columns; may be empty
  int iterations = 0;
  Method method = Method::Dense;
  bool complete = false;  // full spectrum resolved

  double value(int i) const { return values(i); }
};

// max_i (|a_ii| + sum_j |a_ij|), a cheap norm bound used in residual scales
inline double gershgorin_norm(const SpMat& h) {
  double best = 0.0;
  for (int c = 0; c < h.outerSize(); ++c) {
    double diag = 0.0, off = 0.0;
    for (SpMat::InnerIterator it(h, c); it; ++it) {
      if (it.row() == c)
        diag = std::abs(it.value());
      else
        off += std::abs(it.value());
    }
    best = std::max(best, diag + off);
  }
  return best;
}

inline double gershgorin_lower(const SpMat& h) {
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < h.outerSize(); ++c) {
    double diag = 0.0, off = 0.0;
    for (SpMat::InnerIterator it(h, c); it; ++it) {
      if (it.row() == c)
        diag = it.value();
      else
        off += std::abs(it.value());
    }
    best = std::min(best, diag - off);
  }
  return best;
}

inline SpectralResult dense_spectrum(const Eigen::MatrixXd& h,
                                     bool want_vectors = true) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      h, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("dense symmetric eigensolve failed", {});
  SpectralResult r;
  r.values = es.eigenvalues();
  r.method = SpectralResult::Method::Dense;
  r.complete = true;
  r.residuals = Eigen::VectorXd::Zero(h.rows());
  if (want_vectors) {
    r.vectors = es.eigenvectors();
    for (int i = 0; i < h.rows(); ++i)
      r.residuals(i) =
          (h * r.vectors.col(i) - r.values(i) * r.vectors.col(i)).norm();
  }
  return r;
}

inline SpectralResult dense_spectrum(const SpMat& h, const SolverConfig& cfg) {
  if (h.rows() > cfg.dense_cutoff)
    throw ConfigError("dense solve refused: dof " + std::to_string(h.rows()) +
                      " above cutoff " + std::to_string(cfg.dense_cutoff));
  return dense_spectrum(Eigen::MatrixXd(h), cfg.want_vectors);
}

namespace detail {

// B-orthonormalize the columns of S (plain Euclidean metric), dropping
// near-dependent directions. Returns the kept column count.
inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& s) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s);
  double thresh = 1e-12 * std::abs(qr.matrixR()(0, 0));
  int rank = 0;
  for (int i = 0; i < std::min(s.rows(), s.cols()); ++i)
    if (std::abs(qr.matrixR()(i, i)) > thresh) ++rank;
  rank = std::max(rank, 1);
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(s.rows(), rank);
  return q;
}

}  // namespace detail

// Blocked preconditioned Rayleigh-quotient minimization (LOBPCG family)
// with diagonal preconditioning and a deterministic keyed start block.
inline SpectralResult lobpcg_lowest(const SpMat& h, SolverConfig cfg) {
  cfg.validate();
  const int n = static_cast<int>(h.rows());
  if (cfg.k > n) throw ConfigError("requested more eigenpairs than dof");
  const int k = cfg.k;
  int m = cfg.block_size > 0 ? cfg.block_size
                             : std::min(n, std::max(2 * k, k + 4));
  m = std::max(m, k);

  const double hnorm = gershgorin_norm(h);
  const double scale = std::max(1.0, hnorm);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < h.outerSize(); ++c)
    for (SpMat::InnerIterator it(h, c); it; ++it)
      if (it.row() == c) diag(c) = it.value();

  rng::Stream start(cfg.start_seed, static_cast<std::uint64_t>(n),
                    static_cast<std::uint64_t>(k));
  Eigen::MatrixXd x(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = start.next_sym();
  x = detail::orthonormalize(x);
  m = static_cast<int>(x.cols());

  Eigen::MatrixXd p(n, 0);
  Eigen::VectorXd theta;
  Eigen::VectorXd best_res =
      Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  int iter = 0;

  auto ritz = [&](const Eigen::MatrixXd& basis) {
    Eigen::MatrixXd hb = h * basis;
    Eigen::MatrixXd g = basis.transpose() * hb;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    return std::make_pair(es.eigenvalues(), es.eigenvectors());
  };

  for (iter = 1; iter <= cfg.max_iterations; ++iter) {
    Eigen::MatrixXd basis(n, x.cols() + p.cols());
    basis << x, p;
    // Rayleigh-Ritz over span[X, P] to set up residuals
    auto [vals, rot] = ritz(basis);
    int keep = std::min<int>(m, static_cast<int>(basis.cols()));
    Eigen::MatrixXd xnew = basis * rot.leftCols(keep);
    theta = vals.head(keep);

    Eigen::MatrixXd hx = h * xnew;
    Eigen::MatrixXd resid = hx - xnew * theta.asDiagonal();

    bool done = true;
    for (int j = 0; j < k; ++j) {
      double rn = resid.col(j).norm();
      best_res(j) = std::min(best_res(j), rn);
      if (rn > cfg.tol * (std::abs(theta(j)) + scale)) done = false;
    }
    if (done) {
      SpectralResult out;
      out.values = theta.head(k);
      out.residuals = Eigen::VectorXd(k);
      for (int j = 0; j < k; ++j) out.residuals(j) = resid.col(j).norm();
      if (cfg.want_vectors) out.vectors = xnew.leftCols(k);
      out.iterations = iter;
      out.method = SpectralResult::Method::Iterative;
      out.complete = (k == n);
      return out;
    }

    // Jacobi-preconditioned residual directions
    Eigen::MatrixXd w(n, keep);
    for (int j = 0; j < keep; ++j) {
      for (int i = 0; i < n; ++i) {
        double d = diag(i) - theta(j);
        double floor = 1e-3 * scale;
        if (std::abs(d) < floor) d = d < 0 ? -floor : floor;
        w(i, j) = resid.col(j)(i) / d;
      }
    }

    Eigen::MatrixXd pdir = xnew - x * (x.transpose() * xnew);
    Eigen::MatrixXd big(n, xnew.cols() + w.cols() + pdir.cols());
    big << xnew, w, pdir;
    Eigen::MatrixXd q = detail::orthonormalize(big);
    auto [vals2, rot2] = ritz(q);
    int keep2 = std::min<int>(m, static_cast<int>(q.cols()));
    Eigen::MatrixXd xnext = q * rot2.leftCols(keep2);
    // next "previous direction": components outside the old block
    p = xnext - x * (x.transpose() * xnext);
    x = xnext;
  }

  std::vector<double> best(best_res.data(), best_res.data() + k);
  throw ConvergenceError(
      "eigensolver did not converge in " + std::to_string(cfg.max_iterations) +
          " iterations",
      best);
}

// k smallest eigenpairs; dense below the cutoff, iterative above.
inline SpectralResult lowest_eigenpairs(const SpMat& h, SolverConfig cfg) {
  cfg.validate();
  if (cfg.k > h.rows()) throw ConfigError("requested more eigenpairs than dof");
  if (h.rows() <= cfg.dense_cutoff) {
    SpectralResult full = dense_spectrum(h, cfg);
    SpectralResult out;
    out.values = full.values.head(cfg.k);
    out.residuals = full.residuals.head(cfg.k);
    if (cfg.want_vectors) out.vectors = full.vectors.leftCols(cfg.k);
    out.method = SpectralResult::Method::Dense;
    out.iterations = 0;
    out.complete = cfg.k == h.rows();
    return out;
  }
  return lobpcg_lowest(h, cfg);
}

// #{eigenvalues <= E}; the interval is closed at E.
inline std::int64_t counting_function(const SpectralResult& spec, double energy) {
  const auto& v = spec.values;
  if (!spec.complete && (v.size() == 0 || v(v.size() - 1) <= energy))
    throw ConfigError(
        "counting at E beyond the resolved spectrum: request more eigenpairs");
  std::int64_t c = 0;
  for (int i = 0; i < v.size(); ++i)
    if (v(i) <= energy) ++c;
  return c;
}

// n(E)/|Lambda|, the volume-normalized count
inline double normalized_counting(const SpectralResult& spec, double energy,
                                  double box_volume) {
  return static_cast<double>(counting_function(spec, energy)) / box_volume;
}

}  // namespace speclab
