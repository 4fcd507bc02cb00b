#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "speclab/bounds.hpp"
#include "speclab/bump.hpp"
#include "speclab/eigensolve.hpp"
#include "speclab/errors.hpp"
#include "speclab/operators.hpp"
#include "speclab/parallel.hpp"
#include "speclab/potential.hpp"
#include "speclab/stats.hpp"

namespace speclab {

// ---------------------------------------------------------------------------
// Energy grids

struct EnergyGrid {
  double e0 = 0.0;
  std::vector<double> offsets;  // strictly increasing, all > 0

  static EnergyGrid geometric(double e0, double min_offset, double ratio,
                              int count) {
    if (!(min_offset > 0.0) || !(ratio > 1.0) || count < 1)
      throw ConfigError("geometric grid needs min_offset > 0, ratio > 1");
    EnergyGrid g;
    g.e0 = e0;
    double off = min_offset;
    for (int i = 0; i < count; ++i) {
      g.offsets.push_back(off);
      off *= ratio;
    }
    return g;
  }

  void validate() const {
    if (offsets.empty()) throw ConfigError("energy grid is empty");
    double last = 0.0;
    for (double o : offsets) {
      if (!(o > last))
        throw ConfigError("energy offsets must be positive and increasing");
      last = o;
    }
  }

  double energy(std::size_t i) const { return e0 + offsets[i]; }
  std::size_t size() const { return offsets.size(); }
};

namespace detail {

// per-sample master seed for campaign position (energy index, sample)
inline std::uint64_t campaign_seed(std::uint64_t seed, std::size_t e_index) {
  return rng::keyed(seed, 0x7a11ull, static_cast<std::uint64_t>(e_index));
}

inline double lowest_eigenvalue(const SpMat& h, double tol = 1e-9) {
  SolverConfig cfg;
  cfg.k = 1;
  cfg.tol = tol;
  cfg.want_vectors = true;
  return lowest_eigenpairs(h, cfg).values(0);
}

// full spectrum resolved at least up to `energy`
inline SpectralResult resolve_to(const SpMat& h, double energy,
                                 std::int64_t dense_cutoff = 2000) {
  if (h.rows() <= dense_cutoff)
    return dense_spectrum(Eigen::MatrixXd(h), false);
  SolverConfig cfg;
  cfg.tol = 1e-9;
  cfg.want_vectors = false;
  cfg.k = 16;
  for (;;) {
    cfg.k = std::min<std::int64_t>(cfg.k, h.rows());
    auto spec = lobpcg_lowest(h, cfg);
    if (cfg.k == h.rows() || spec.values(cfg.k - 1) > energy) {
      spec.complete = cfg.k == h.rows();
      return spec;
    }
    cfg.k *= 2;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tail probabilities P{E_1(H^{L_E,bc}) <= E}

struct TailPoint {
  double offset = 0.0;
  int box_size = 0;  // L_E, 0 when skipped
  bool skipped = false;
  std::int64_t samples = 0;
  std::int64_t hits = 0;
  BinomialInterval ci;
  double predicted_bound = 1.0;  // exp(-cexp2 (E-E0)^{-d/2})
};

struct TailEstimate {
  EnergyGrid grid;
  BC bc = BC::Mezincescu;
  ProofConstants constants;
  std::vector<TailPoint> points;
};

inline TailEstimate tail_probability(const PotentialModel& model, BC bc,
                                     int n_h, const EnergyGrid& grid,
                                     const ProofConstants& constants,
                                     std::int64_t n_samples,
                                     std::uint64_t seed, int jobs = 1) {
  grid.validate();
  constants.validate();
  model.validate();
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);

  TailEstimate out;
  out.grid = grid;
  out.bc = bc;
  out.constants = constants;

  std::map<int, RobinTable> robins;
  std::map<int, Eigen::VectorXd> vper_cache;
  for (std::size_t e = 0; e < grid.size(); ++e) {
    TailPoint pt;
    pt.offset = grid.offsets[e];
    pt.samples = n_samples;
    pt.predicted_bound =
        constants.tail_bound(pt.offset, model.geometry.dim);
    int box_size = 0;
    try {
      box_size = critical_length(grid.energy(e), grid.e0, constants);
    } catch (const OutOfRegimeError&) {
      pt.skipped = true;
      out.points.push_back(pt);
      continue;
    }
    pt.box_size = box_size;
    BoxGrid box(model.geometry, box_size, n_h);
    if (bc == BC::Mezincescu && robins.find(box_size) == robins.end())
      robins.emplace(box_size, mezincescu_coefficients(gs, box));
    if (vper_cache.find(box_size) == vper_cache.end())
      vper_cache.emplace(box_size, vper_on_grid(model.vper, box));
    const RobinTable* robin =
        bc == BC::Mezincescu ? &robins.at(box_size) : nullptr;
    const Eigen::VectorXd& vper = vper_cache.at(box_size);

    std::vector<char> hit(static_cast<std::size_t>(n_samples), 0);
    std::uint64_t master = detail::campaign_seed(seed, e);
    double energy = grid.energy(e);
    parallel_for(n_samples, jobs, [&](std::int64_t s) {
      auto r = sample_realization(model, box_size, master,
                                  static_cast<std::uint64_t>(s));
      auto asm_out = assemble_sample(model, r, box, bc, robin, &vper);
      double e1 = detail::lowest_eigenvalue(asm_out.h.mat);
      hit[static_cast<std::size_t>(s)] = e1 <= energy ? 1 : 0;
    });
    for (char h : hit) pt.hits += h;
    pt.ci = wilson_interval(pt.hits, n_samples);
    out.points.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-volume IDS curves E[N_L^bc(E)]

struct IdsPoint {
  BC bc = BC::Dirichlet;
  double offset = 0.0;
  double mean = 0.0;
  double ci_half = 0.0;
};

struct IdsCurve {
  int box_size = 0;
  std::int64_t samples = 0;
  EnergyGrid grid;
  std::vector<IdsPoint> points;  // bc-major, energy-minor
};

inline IdsCurve ids_curve(const PotentialModel& model,
                          const std::vector<BC>& bcs, int box_size, int n_h,
                          const EnergyGrid& grid, std::int64_t n_samples,
                          std::uint64_t seed, int jobs = 1) {
  grid.validate();
  model.validate();
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);
  BoxGrid box(model.geometry, box_size, n_h);
  RobinTable robin;
  bool need_robin = false;
  for (BC bc : bcs) need_robin = need_robin || bc == BC::Mezincescu;
  if (need_robin) robin = mezincescu_coefficients(gs, box);
  Eigen::VectorXd vper = vper_on_grid(model.vper, box);
  double volume = box.box_volume();
  double top = grid.energy(grid.size() - 1);

  IdsCurve out;
  out.box_size = box_size;
  out.samples = n_samples;
  out.grid = grid;

  // per-sample counts for every (bc, energy), filled into slots
  std::vector<std::vector<double>> counts(
      bcs.size() * grid.size(),
      std::vector<double>(static_cast<std::size_t>(n_samples), 0.0));
  parallel_for(n_samples, jobs, [&](std::int64_t s) {
    auto r = sample_realization(model, box_size, seed,
                                static_cast<std::uint64_t>(s));
    Eigen::VectorXd w = evaluate_on_grid(model, r, box);
    for (std::size_t b = 0; b < bcs.size(); ++b) {
      const RobinTable* rb = bcs[b] == BC::Mezincescu ? &robin : nullptr;
      auto h = assemble_hamiltonian((vper + w).eval(), box, bcs[b], rb);
      auto spec = detail::resolve_to(h.mat, top);
      for (std::size_t e = 0; e < grid.size(); ++e)
        counts[b * grid.size() + e][static_cast<std::size_t>(s)] =
            static_cast<double>(counting_function(spec, grid.energy(e)));
    }
  });

  for (std::size_t b = 0; b < bcs.size(); ++b) {
    for (std::size_t e = 0; e < grid.size(); ++e) {
      RunningMean acc;
      for (double c : counts[b * grid.size() + e]) acc.add(c / volume);
      IdsPoint pt;
      pt.bc = bcs[b];
      pt.offset = grid.offsets[e];
      pt.mean = acc.mean();
      pt.ci_half = 1.959963984540054 * acc.stderr_mean();
      out.points.push_back(pt);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Double-log slope fit (Lifshitz exponent estimate)

inline LineFit fit_lifshitz_exponent(
    const std::vector<std::pair<double, double>>& points) {
  std::vector<double> x, y;
  for (auto& [offset, value] : points) {
    if (!(offset > 0.0))
      throw std::domain_error("Lifshitz fit needs positive energy offsets");
    if (!(value > 0.0) || !(value < 1.0))
      throw std::domain_error(
          "Lifshitz fit needs values inside (0,1): double log undefined");
    x.push_back(std::log(offset));
    y.push_back(std::log(-std::log(value)));
  }
  return fit_line(x, y);
}

// ---------------------------------------------------------------------------
// Identification of the spectral bottom

struct E0Point {
  int box_size = 0;
  double alpha = 0.0;
  std::int64_t samples = 0;
  std::int64_t event_hits = 0;  // sup_k lambda_k <= alpha
  double event_probability_exact = 0.0;
  bool resolved = false;        // event seen at least once
  double min_e1_offset = 0.0;   // min over all samples of E1 - E0
  double conditional_rq_offset = 0.0;  // mean Rayleigh quotient - E0 on event
  double approx_bound = 0.0;    // (C+1)/L from the trial-state estimate
};

struct E0Report {
  double e0 = 0.0;
  double c_approx = 0.0;  // trial-state constant
  bool zero_in_support = true;
  std::vector<E0Point> points;
};

inline double law_cdf(const CouplingLaw& law, double x) {
  switch (law.kind) {
    case CouplingLaw::Kind::Uniform:
      return std::clamp(x, 0.0, 1.0);
    case CouplingLaw::Kind::Constant:
      return x >= law.value ? 1.0 : 0.0;
    case CouplingLaw::Kind::TwoPoint:
      if (x < 0.0) return 0.0;
      return x >= law.value ? 1.0 : law.atom_weight;
    case CouplingLaw::Kind::InverseCdfTable: {
      const auto& q = law.quantiles;
      auto n = static_cast<double>(q.size() - 1);
      if (x < q.front()) return 0.0;
      if (x >= q.back()) return 1.0;
      for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        if (x < q[i + 1]) {
          double span = q[i + 1] - q[i];
          double f = span > 0.0 ? (x - q[i]) / span : 1.0;
          return (static_cast<double>(i) + f) / n;
        }
      }
      return 1.0;
    }
  }
  return 0.0;
}

inline E0Report e0_identification(const PotentialModel& model,
                                  const std::vector<int>& l_list,
                                  const std::vector<double>& alpha_list,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  int n_h, int jobs = 1) {
  model.validate();
  bool zero_ok = true;
  for (const auto& law : model.laws) zero_ok = zero_ok && law.zero_in_support();
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);
  E0Report report;
  report.e0 = gs.energy;
  // without 0 in the law support the bottom is not attained; the report
  // still carries the observed minima for contrast runs
  report.zero_in_support = zero_ok;

  // trial-state constant: 2*3^{d/2} ||grad Psi||_{2,D} ||grad chi||_inf
  //                       + Psi_max ||Lap chi||_2
  CutoffBump chi(model.geometry, 1.0);
  double grad_psi_l2 = 0.0;
  {
    const BoxGrid& cell = gs.cell_grid;
    double w = cell.node_weight();
    int n = cell.nodes_per_axis();
    for (std::int64_t i = 0; i < cell.dof(); ++i) {
      auto idx = cell.multi_index(i);
      double g2 = 0.0;
      for (int a = 0; a < model.geometry.dim; ++a) {
        auto up = idx, dn = idx;
        up[static_cast<std::size_t>(a)] =
            (idx[static_cast<std::size_t>(a)] + 1) % n;
        dn[static_cast<std::size_t>(a)] =
            (idx[static_cast<std::size_t>(a)] + n - 1) % n;
        double h = cell.spacing(a);
        double g = (gs.psi(cell.node_index(up)) - gs.psi(cell.node_index(dn))) /
                   (2.0 * h);
        g2 += g * g;
      }
      grad_psi_l2 += g2 * w;
    }
    grad_psi_l2 = std::sqrt(grad_psi_l2);
  }
  report.c_approx = 2.0 * std::pow(3.0, 0.5 * model.geometry.dim) *
                        grad_psi_l2 * chi.grad_sup() +
                    gs.psi_max * chi.laplacian_l2();

  for (int L : l_list) {
    BoxGrid box(model.geometry, L, n_h);
    auto robin = mezincescu_coefficients(gs, box);
    Eigen::VectorXd vper = vper_on_grid(model.vper, box);
    // periodized ground state and the scaled bump on this box
    Eigen::VectorXd psi_ext(box.dof());
    for (std::int64_t i = 0; i < box.dof(); ++i)
      psi_ext(i) =
          gs.at_local(box.local_linear(box.local_of(box.multi_index(i))));
    CutoffBump chi_l(model.geometry, static_cast<double>(L));
    Eigen::VectorXd trial = chi_l.on_grid(box).cwiseProduct(psi_ext);
    trial.normalize();

    std::vector<double> e1s(static_cast<std::size_t>(n_samples));
    std::vector<double> rqs(static_cast<std::size_t>(n_samples));
    std::vector<double> sup_lambda(static_cast<std::size_t>(n_samples));
    std::uint64_t master = rng::keyed(seed, 0xe0ull, static_cast<std::uint64_t>(L));
    parallel_for(n_samples, jobs, [&](std::int64_t s) {
      auto r = sample_realization(model, L, master,
                                  static_cast<std::uint64_t>(s));
      double sup = 0.0;
      for (double l : r.lambda) sup = std::max(sup, l);
      sup_lambda[static_cast<std::size_t>(s)] = sup;
      auto asm_out = assemble_sample(model, r, box, BC::Mezincescu, &robin,
                                     &vper);
      e1s[static_cast<std::size_t>(s)] =
          detail::lowest_eigenvalue(asm_out.h.mat);
      rqs[static_cast<std::size_t>(s)] =
          trial.dot(asm_out.h.mat * trial) / trial.squaredNorm();
    });

    for (double alpha : alpha_list) {
      E0Point pt;
      pt.box_size = L;
      pt.alpha = alpha;
      pt.samples = n_samples;
      double exact = 1.0;
      for (std::int64_t j = 0; j < box.cells().size(); ++j)
        exact *= law_cdf(model.law_at(j), alpha);
      pt.event_probability_exact = exact;
      RunningMean cond;
      double min_e1 = std::numeric_limits<double>::infinity();
      for (std::int64_t s = 0; s < n_samples; ++s) {
        min_e1 = std::min(min_e1, e1s[static_cast<std::size_t>(s)]);
        if (sup_lambda[static_cast<std::size_t>(s)] <= alpha) {
          ++pt.event_hits;
          cond.add(rqs[static_cast<std::size_t>(s)]);
        }
      }
      pt.resolved = pt.event_hits > 0;
      pt.min_e1_offset = min_e1 - gs.energy;
      pt.conditional_rq_offset =
          pt.resolved ? cond.mean() - gs.energy
                      : std::numeric_limits<double>::quiet_NaN();
      pt.approx_bound = (report.c_approx + 1.0) / static_cast<double>(L);
      report.points.push_back(pt);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dirichlet lower-bound witness

struct WitnessSample {
  double rq_offset = 0.0;     // Rayleigh quotient - E0
  double w_term = 0.0;        // <phi, W phi>/||phi||^2
  double blubb_margin = 0.0;  // cblubb/L^2 + w_term - rq_offset (>= 0 expected)
  bool witness = false;       // rq <= E
};

struct WitnessResult {
  int box_size = 0;
  double offset = 0.0;
  std::int64_t samples = 0;
  std::int64_t hits = 0;
  BinomialInterval ci;
  double ids_lower_bound = 0.0;  // p_hat / |Lambda_L|
  double cblubb = 0.0;           // discrete trial-state constant
  double min_blubb_margin = 0.0;
  std::vector<WitnessSample> per_sample;
};

// discrete Dirichlet energy of the scaled bump over the box grid edges
inline double bump_dirichlet_sum(const Eigen::VectorXd& chi,
                                 const BoxGrid& grid) {
  double acc = 0.0;
  const int d = grid.dim();
  const int n = grid.nodes_per_axis();
  for (std::int64_t i = 0; i < grid.dof(); ++i) {
    auto idx = grid.multi_index(i);
    for (int a = 0; a < d; ++a) {
      if (idx[static_cast<std::size_t>(a)] + 1 >= n) continue;
      auto nb = idx;
      nb[static_cast<std::size_t>(a)] += 1;
      double diff = chi(grid.node_index(nb)) - chi(i);
      double h = grid.spacing(a);
      acc += diff * diff / (h * h);
    }
  }
  return acc;
}

inline WitnessResult lower_bound_witness(const PotentialModel& model,
                                         int box_size, double offset,
                                         std::int64_t n_samples,
                                         std::uint64_t seed, int n_h,
                                         int jobs = 1) {
  if (!(offset > 0.0)) throw ConfigError("witness energy must exceed E0");
  model.validate();
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);
  BoxGrid box(model.geometry, box_size, n_h);
  Eigen::VectorXd vper = vper_on_grid(model.vper, box);

  Eigen::VectorXd psi_ext(box.dof());
  for (std::int64_t i = 0; i < box.dof(); ++i)
    psi_ext(i) =
        gs.at_local(box.local_linear(box.local_of(box.multi_index(i))));
  CutoffBump chi_l(model.geometry, static_cast<double>(box_size));
  Eigen::VectorXd chi = chi_l.on_grid(box);
  Eigen::VectorXd phi = chi.cwiseProduct(psi_ext);
  double phi_norm2 = phi.squaredNorm();

  WitnessResult out;
  out.box_size = box_size;
  out.offset = offset;
  out.samples = n_samples;
  double dir_sum = bump_dirichlet_sum(chi, box);
  double l2 = static_cast<double>(box_size) * static_cast<double>(box_size);
  out.cblubb = l2 * dir_sum * gs.psi_max * gs.psi_max /
               (chi.squaredNorm() * gs.psi_min * gs.psi_min);

  out.per_sample.resize(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, jobs, [&](std::int64_t s) {
    auto r = sample_realization(model, box_size, seed,
                                static_cast<std::uint64_t>(s));
    Eigen::VectorXd w = evaluate_on_grid(model, r, box);
    auto h = assemble_hamiltonian((vper + w).eval(), box, BC::Dirichlet);
    WitnessSample ws;
    ws.rq_offset = phi.dot(h.mat * phi) / phi_norm2 - gs.energy;
    ws.w_term = phi.dot(w.cwiseProduct(phi)) / phi_norm2;
    ws.blubb_margin = out.cblubb / l2 + ws.w_term - ws.rq_offset;
    ws.witness = ws.rq_offset <= offset;
    out.per_sample[static_cast<std::size_t>(s)] = ws;
  });
  out.min_blubb_margin = std::numeric_limits<double>::infinity();
  for (const auto& ws : out.per_sample) {
    if (ws.witness) ++out.hits;
    out.min_blubb_margin = std::min(out.min_blubb_margin, ws.blubb_margin);
  }
  out.ci = wilson_interval(out.hits, n_samples);
  out.ids_lower_bound = out.ci.estimate / box.box_volume();
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound constants: decay law, probability-law exponents, and the
// trial-state constant driving the witness length.

struct LowerBoundConfig {
  double decay_c = 1.0;    // shell-norm prefactor
  double decay_eps = 1.0;  // decay exponent (> 0)
  double alpha0 = 1.0;     // low-value probability window, in (0,1]
  double eta = 1.0;        // P{||u|| <= alpha} >= alpha^eta
  double cblubb = 0.0;     // trial-state constant estimate
  int lp_exponent = 4;     // diagnostic norm exponent for d <= 3

  double eps_bar() const { return std::min(2.0, decay_eps); }

  // witness length ceil(sqrt(2 cblubb / (E - E0)))
  int witness_length(double offset) const {
    if (!(offset > 0.0))
      throw OutOfRegimeError("witness length needs E > E0");
    return static_cast<int>(std::ceil(std::sqrt(2.0 * cblubb / offset)));
  }

  void validate() const {
    if (!(decay_eps > 0.0)) throw ConfigError("decay exponent must be > 0");
    if (!(eta > 0.0)) throw ConfigError("probability exponent must be > 0");
    if (!(alpha0 > 0.0) || alpha0 > 1.0)
      throw ConfigError("alpha0 must lie in (0,1]");
  }
};

// ---------------------------------------------------------------------------
// Summable-decay margin for long-range diagnostics

struct ShellDecay {
  double c = 1.0;     // norm at shell r is <= c (1+r)^{-(d+eps)}
  double eps = 1.0;
  int dim = 1;
  double support_radius = 0.0;  // > 0: compactly supported, tail 0 beyond

  double c_decay() const {
    return 2.0 * dim * std::pow(3.0, dim - 1) * c;
  }
};

struct DecayMargin {
  double tail_bound = 0.0;
  int minimal_radius = 0;  // smallest R with tail bound <= requested error
};

inline DecayMargin summable_decay_margin(const ShellDecay& decay, double radius,
                                         double requested_error = 1e-3) {
  if (!(decay.eps > 0.0))
    throw std::domain_error("decay exponent must be positive");
  DecayMargin out;
  if (decay.support_radius > 0.0) {
    out.tail_bound = radius >= decay.support_radius
                         ? 0.0
                         : std::numeric_limits<double>::infinity();
    out.minimal_radius =
        static_cast<int>(std::ceil(decay.support_radius));
    return out;
  }
  out.tail_bound = decay.c_decay() / (decay.eps * std::pow(radius, decay.eps));
  out.minimal_radius = static_cast<int>(std::ceil(std::pow(
      decay.c_decay() / (decay.eps * requested_error), 1.0 / decay.eps)));
  return out;
}

// direct shell summation oracle: sum over shells r > R of count(r) * norm(r)
inline double shell_tail_direct(const ShellDecay& decay, int radius,
                                int r_max = 100000) {
  double acc = 0.0;
  for (int r = radius + 1; r <= r_max; ++r) {
    double count = std::pow(2.0 * r + 1.0, decay.dim) -
                   std::pow(2.0 * r - 1.0, decay.dim);
    acc += count * decay.c * std::pow(1.0 + r, -(decay.dim + decay.eps));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Resolvent decay (below-spectrum off-diagonal estimates)

struct ResolventWindows {
  std::vector<int> base;                   // node set B
  std::vector<std::vector<int>> probes;    // node sets B~ at distances
  std::vector<double> distances;           // matching physical distances
};

// Bands of whole cells: B = leftmost `width` cells, probes walk rightward
// from `first_probe_cell`. Keeping the probes in the bulk (well short of
// the far wall) avoids the finite-box correction to the exponential decay.
inline ResolventWindows cell_bands_1d(const BoxGrid& grid, int width_cells,
                                      int probe_width_cells = 1,
                                      int first_probe_cell = -1,
                                      int probe_count = -1) {
  if (grid.dim() != 1) throw ConfigError("cell bands are one-dimensional");
  ResolventWindows w;
  int n_h = grid.n_h;
  int cells = grid.cells_per_axis();
  if (first_probe_cell < 0) first_probe_cell = width_cells + 1;
  for (int i = 0; i < width_cells * n_h; ++i) w.base.push_back(i);
  double h = grid.spacing(0);
  int taken = 0;
  for (int c = first_probe_cell;
       c + probe_width_cells <= cells && (probe_count < 0 || taken < probe_count);
       ++c, ++taken) {
    std::vector<int> probe;
    for (int i = c * n_h; i < (c + probe_width_cells) * n_h; ++i)
      probe.push_back(i);
    w.probes.push_back(probe);
    // physical gap between the last base node and the first probe node
    double dist = (c * n_h - (width_cells * n_h - 1)) * h;
    w.distances.push_back(dist);
  }
  if (w.probes.size() < 2)
    throw ConfigError("box too small for a resolvent decay fit");
  return w;
}

struct CtDecay {
  double e1 = 0.0;
  double energy = 0.0;
  std::vector<double> distances;
  std::vector<double> norms;
  double rate = 0.0;        // fitted exponential decay rate
  double prefactor = 0.0;   // exp(intercept)
  double fit_residual = 0.0;
  double rate_over_gap = 0.0;  // rate / (E1 - E)
};

inline CtDecay ct_decay(const DiscreteHamiltonian& h, double energy,
                        const ResolventWindows& windows) {
  Eigen::MatrixXd dense(h.mat);
  auto spec = dense_spectrum(dense, false);
  CtDecay out;
  out.e1 = spec.values(0);
  out.energy = energy;
  if (!(energy < out.e1))
    throw HypothesisError("resolvent decay needs E below the spectrum");
  // (E - H)^{-1} columns over the probe sets via an SPD solve of (H - E)
  Eigen::LLT<Eigen::MatrixXd> llt(
      (dense - energy * Eigen::MatrixXd::Identity(dense.rows(), dense.cols()))
          .eval());
  if (llt.info() != Eigen::Success)
    throw HypothesisError("H - E is not positive definite");
  std::vector<double> lx, ly;
  for (std::size_t j = 0; j < windows.probes.size(); ++j) {
    const auto& probe = windows.probes[j];
    Eigen::MatrixXd rhs =
        Eigen::MatrixXd::Zero(dense.rows(), static_cast<int>(probe.size()));
    for (std::size_t c = 0; c < probe.size(); ++c)
      rhs(probe[c], static_cast<int>(c)) = 1.0;
    Eigen::MatrixXd cols = -llt.solve(rhs);  // (E-H)^{-1} = -(H-E)^{-1}
    Eigen::MatrixXd block(static_cast<int>(windows.base.size()),
                          static_cast<int>(probe.size()));
    for (std::size_t r = 0; r < windows.base.size(); ++r)
      block.row(static_cast<int>(r)) = cols.row(windows.base[r]);
    double norm = block.jacobiSvd().singularValues()(0);
    out.distances.push_back(windows.distances[j]);
    out.norms.push_back(norm);
    lx.push_back(windows.distances[j]);
    ly.push_back(std::log(norm));
  }
  auto fit = fit_line(lx, ly);
  out.rate = -fit.slope;
  out.prefactor = std::exp(fit.intercept);
  out.fit_residual = fit.residual;
  out.rate_over_gap = out.rate / (out.e1 - energy);
  return out;
}

// full-resolvent norm bound 1/(E1 - E), the distance-zero reference
inline double resolvent_norm_bound(double e1, double energy) {
  if (!(energy < e1))
    throw HypothesisError("resolvent bound needs E below the spectrum");
  return 1.0 / (e1 - energy);
}

// ---------------------------------------------------------------------------
// Initial-length-scale event statistics

struct IlseConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double cprime = 0.05;
};

struct IlseResult {
  int ell = 0;
  int kappa = 0;
  int box_size = 0;  // L = ell^kappa
  double energy_offset = 0.0;
  double threshold = 0.0;
  double delta = 0.0;  // separation of the windows, lattice units
  std::int64_t samples = 0;
  std::int64_t good = 0;
  BinomialInterval ci;
  double predicted_lower_bound = 0.0;
};

// calibration: fit (C1, C2) from a reference operator's resolvent decay
inline IlseConstants calibrate_ct_constants(const DiscreteHamiltonian& h,
                                            double energy,
                                            const ResolventWindows& windows,
                                            double headroom = 1.5) {
  auto ct = ct_decay(h, energy, windows);
  IlseConstants c;
  c.c2 = ct.rate_over_gap / headroom;
  c.c1 = ct.prefactor * (ct.e1 - energy) * headroom;
  return c;
}

inline IlseResult ilse_probability(const PotentialModel& model, int ell,
                                   int kappa, const IlseConstants& constants,
                                   std::int64_t n_samples, std::uint64_t seed,
                                   int n_h, int jobs = 1,
                                   std::int64_t dof_limit = 4000) {
  if (ell < 2 || kappa < 1)
    throw ConfigError("initial scale needs ell >= 2, kappa >= 1");
  model.validate();
  int box_size = 1;
  for (int i = 0; i < kappa; ++i) box_size *= ell;
  BoxGrid box(model.geometry, box_size, n_h);
  if (box.dof() > dof_limit)
    throw ConfigError(
        "box of " + std::to_string(box.dof()) +
        " nodes is not dense-solvable here; reduce ell or kappa");
  auto gs = periodic_ground_state(model.vper, model.geometry, n_h);
  Eigen::VectorXd vper = vper_on_grid(model.vper, box);

  double l_pow = std::pow(static_cast<double>(box_size), 2.0 / kappa);
  double energy = gs.energy + 1.0 / l_pow;

  // windows: central block vs both outermost cells, separation >= L/3
  if (model.geometry.dim != 1)
    throw ConfigError("initial-scale statistics are wired for d = 1");
  int cells = box.cells_per_axis();
  int core = std::max(1, cells / 6);  // core half-width in cells
  std::vector<int> base, probe;
  for (int c = cells / 2 - core; c <= cells / 2 + core; ++c)
    for (int i = c * n_h; i < (c + 1) * n_h; ++i) base.push_back(i);
  for (int i = 0; i < n_h; ++i) probe.push_back(i);
  for (int i = (cells - 1) * n_h; i < cells * n_h; ++i) probe.push_back(i);
  // exact window separation in lattice units (outermost probe node to the
  // nearest base node); the construction keeps it >= L/3
  double first_base = box.lattice_coord(base.front());
  double last_low_probe = box.lattice_coord(n_h - 1);
  double delta = first_base - last_low_probe;
  if (delta < static_cast<double>(box_size) / 3.0)
    throw ConfigError("window separation fell below L/3");

  double threshold =
      constants.c1 * l_pow * std::exp(-constants.c2 * delta / l_pow);

  IlseResult out;
  out.ell = ell;
  out.kappa = kappa;
  out.box_size = box_size;
  out.energy_offset = energy - gs.energy;
  out.threshold = threshold;
  out.delta = delta;
  out.samples = n_samples;

  std::vector<char> good(static_cast<std::size_t>(n_samples), 0);
  parallel_for(n_samples, jobs, [&](std::int64_t s) {
    auto r = sample_realization(model, box_size, seed,
                                static_cast<std::uint64_t>(s));
    Eigen::VectorXd w = evaluate_on_grid(model, r, box);
    auto h = assemble_hamiltonian((vper + w).eval(), box, BC::Dirichlet);
    Eigen::MatrixXd dense(h.mat);
    Eigen::MatrixXd shifted =
        energy * Eigen::MatrixXd::Identity(dense.rows(), dense.cols()) - dense;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
    Eigen::MatrixXd rhs =
        Eigen::MatrixXd::Zero(dense.rows(), static_cast<int>(probe.size()));
    for (std::size_t c = 0; c < probe.size(); ++c)
      rhs(probe[c], static_cast<int>(c)) = 1.0;
    Eigen::MatrixXd cols = lu.solve(rhs);
    Eigen::MatrixXd block(static_cast<int>(base.size()),
                          static_cast<int>(probe.size()));
    for (std::size_t rr = 0; rr < base.size(); ++rr)
      block.row(static_cast<int>(rr)) = cols.row(base[rr]);
    double norm = block.jacobiSvd().singularValues()(0);
    good[static_cast<std::size_t>(s)] = norm <= threshold ? 1 : 0;
  });
  for (char g : good) out.good += g;
  out.ci = wilson_interval(out.good, n_samples);
  double dim = model.geometry.dim;
  out.predicted_lower_bound =
      1.0 - std::pow(2.0, dim) *
                std::pow(static_cast<double>(box_size),
                         (1.0 - 1.0 / kappa) * dim) *
                std::exp(-constants.cprime *
                         std::pow(static_cast<double>(box_size), dim / kappa));
  return out;
}

}  // namespace speclab
