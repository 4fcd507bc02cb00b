#pragma once

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>

#include "speclab/certify.hpp"
#include "speclab/config.hpp"
#include "speclab/record.hpp"
#include "speclab/spectral_stats.hpp"

namespace speclab {

struct RunOutput {
  ExperimentRecord record;
  FlatTable table;
  RecordPaths paths;
};

namespace rundetail {

// lower bound on E[X_k] over the law classes, by quadrature over draws
inline double estimate_beta(const PotentialModel& model,
                            const PeriodicGroundState& gs,
                            std::int64_t draws, std::uint64_t seed) {
  double beta = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.laws.size(); ++c) {
    RunningMean acc;
    for (std::int64_t s = 0; s < draws; ++s) {
      double u = rng::uniform01(seed, 0xbe7aull, c,
                                static_cast<std::uint64_t>(s));
      acc.add(xk_statistic(gs, model, model.laws[c].sample(u)));
    }
    beta = std::min(beta, acc.mean());
  }
  return beta;
}

inline ProofConstants resolve_constants(const ExperimentConfig& cfg,
                                        const PeriodicGroundState& gs) {
  ProofConstants constants;
  if (cfg.cgap_mode == "auto") {
    constants.cgap = gap_constant(cfg.model.vper, cfg.model.geometry, cfg.n_h,
                                  cfg.gap_l_list)
                         .cgap;
  } else {
    constants.cgap = std::stod(cfg.cgap_mode);
  }
  if (cfg.beta_mode == "auto") {
    constants.beta = estimate_beta(cfg.model, gs, 2000, cfg.seed);
  } else {
    constants.beta = std::stod(cfg.beta_mode);
  }
  constants.mu = cfg.model.site.coupling();
  constants.e0 = gs.energy;
  return constants;
}

inline Realization mean_realization(const PotentialModel& model, int L) {
  Realization r;
  r.box = IndexSet{model.geometry.dim, L};
  r.lambda.resize(static_cast<std::size_t>(r.box.size()));
  for (std::int64_t j = 0; j < r.box.size(); ++j)
    r.lambda[static_cast<std::size_t>(j)] = model.law_at(j).mean();
  return r;
}

inline RunOutput run_spectrum(const ExperimentConfig& cfg) {
  RunOutput out;
  auto gs = periodic_ground_state(cfg.model.vper, cfg.model.geometry, cfg.n_h);
  BoxGrid box(cfg.model.geometry, cfg.box_size, cfg.n_h);
  RobinTable robin;
  if (cfg.bc == BC::Mezincescu) robin = mezincescu_coefficients(gs, box);
  Eigen::VectorXd vper = vper_on_grid(cfg.model.vper, box);
  out.table.header = {"sample", "index", "value", "residual"};
  std::int64_t k = std::min<std::int64_t>(cfg.eigenpair_count, box.dof());
  std::vector<SpectralResult> specs(static_cast<std::size_t>(cfg.samples));
  parallel_for(cfg.samples, cfg.jobs, [&](std::int64_t s) {
    auto r = sample_realization(cfg.model, cfg.box_size, cfg.seed,
                                static_cast<std::uint64_t>(s));
    auto asm_out = assemble_sample(
        cfg.model, r, box, cfg.bc,
        cfg.bc == BC::Mezincescu ? &robin : nullptr, &vper);
    SolverConfig scfg;
    scfg.k = static_cast<int>(k);
    specs[static_cast<std::size_t>(s)] = lowest_eigenpairs(asm_out.h.mat, scfg);
    if (s == 0 && !cfg.dump_operator_path.empty()) {
      std::ofstream os(cfg.dump_operator_path);
      dump_operator(asm_out.h, os);
    }
  });
  for (std::int64_t s = 0; s < cfg.samples; ++s) {
    const auto& spec = specs[static_cast<std::size_t>(s)];
    for (int i = 0; i < spec.values.size(); ++i)
      out.table.add_row(s, i, spec.values(i), spec.residuals(i));
  }
  out.record.results = {{"e0", gs.energy},
                        {"dof", box.dof()},
                        {"eigenpairs", k}};
  return out;
}

inline RunOutput run_ids(const ExperimentConfig& cfg) {
  RunOutput out;
  auto gs = periodic_ground_state(cfg.model.vper, cfg.model.geometry, cfg.n_h);
  auto grid =
      EnergyGrid::geometric(gs.energy, cfg.e_min, cfg.e_ratio, cfg.e_count);
  auto curve = ids_curve(cfg.model, cfg.bcs, cfg.box_size, cfg.n_h, grid,
                         cfg.samples, cfg.seed, cfg.jobs);
  out.table.header = {"bc", "energy_offset", "mean", "ci_half"};
  for (const auto& pt : curve.points)
    out.table.add_row(std::string(bc_name(pt.bc)), pt.offset, pt.mean,
                      pt.ci_half);
  out.record.results = {{"e0", gs.energy}, {"box_size", curve.box_size}};
  return out;
}

inline RunOutput run_tail(const ExperimentConfig& cfg) {
  RunOutput out;
  auto gs = periodic_ground_state(cfg.model.vper, cfg.model.geometry, cfg.n_h);
  auto constants = resolve_constants(cfg, gs);
  auto grid =
      EnergyGrid::geometric(gs.energy, cfg.e_min, cfg.e_ratio, cfg.e_count);
  auto tail = tail_probability(cfg.model, cfg.bc, cfg.n_h, grid, constants,
                               cfg.samples, cfg.seed, cfg.jobs);
  out.table.header = {"energy_offset", "box_size", "skipped",
                      "samples",       "hits",     "p_hat",
                      "wilson_center", "wilson_low", "wilson_high",
                      "predicted_bound"};
  for (const auto& pt : tail.points)
    out.table.add_row(pt.offset, pt.box_size, pt.skipped, pt.samples, pt.hits,
                      pt.ci.estimate, pt.ci.center, pt.ci.lower, pt.ci.upper,
                      pt.predicted_bound);
  out.record.results = {{"e0", gs.energy},
                        {"cgap", constants.cgap},
                        {"beta", constants.beta},
                        {"mu", constants.mu},
                        {"delta", constants.delta()},
                        {"l_floor", constants.l_floor()},
                        {"cexp2", constants.cexp2(cfg.model.geometry.dim)}};
  return out;
}

inline RunOutput run_lifshitz_fit(const ExperimentConfig& cfg) {
  if (cfg.input_table.empty())
    throw ConfigError("lifshitz-fit.input: path to a two-column table "
                      "(energy offset, value) is required");
  std::ifstream in(cfg.input_table);
  if (!in)
    throw ConfigError("lifshitz-fit.input: cannot open '" + cfg.input_table +
                      "'");
  std::vector<std::pair<double, double>> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) continue;
    try {
      pts.emplace_back(std::stod(a), std::stod(b));
    } catch (const std::exception&) {
      if (!first)
        throw ConfigError("lifshitz-fit.input: malformed row '" + line + "'");
    }
    first = false;
  }
  auto fit = fit_lifshitz_exponent(pts);
  RunOutput out;
  out.table.header = {"slope", "intercept", "residual", "points"};
  out.table.add_row(fit.slope, fit.intercept, fit.residual,
                    static_cast<std::int64_t>(pts.size()));
  out.record.results = {{"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"residual", fit.residual},
                        {"points", pts.size()}};
  return out;
}

inline RunOutput run_bounds_check(const ExperimentConfig& cfg) {
  RunOutput out;
  out.record.certifications = run_bounds_checks(cfg.seed, cfg.jobs);
  out.table.header = {"name", "pass", "statistic"};
  for (const auto& c : out.record.certifications)
    out.table.add_row(c.name, c.pass, c.statistic);
  out.record.results = {{"suite_size", out.record.certifications.size()}};
  return out;
}

inline RunOutput run_e0(const ExperimentConfig& cfg) {
  auto report = e0_identification(cfg.model, cfg.l_list, cfg.alpha_list,
                                  cfg.samples, cfg.seed, cfg.n_h, cfg.jobs);
  RunOutput out;
  out.table.header = {"box_size",       "alpha",
                      "samples",        "event_hits",
                      "event_p_exact",  "min_e1_offset",
                      "cond_rq_offset", "approx_bound"};
  for (const auto& pt : report.points)
    out.table.add_row(pt.box_size, pt.alpha, pt.samples, pt.event_hits,
                      pt.event_probability_exact, pt.min_e1_offset,
                      pt.conditional_rq_offset, pt.approx_bound);
  out.record.results = {{"e0", report.e0},
                        {"c_approx", report.c_approx},
                        {"zero_in_support", report.zero_in_support}};
  return out;
}

inline RunOutput run_lower_bound(const ExperimentConfig& cfg) {
  auto res = lower_bound_witness(cfg.model, cfg.box_size, cfg.e_offset,
                                 cfg.samples, cfg.seed, cfg.n_h, cfg.jobs);
  RunOutput out;
  out.table.header = {"sample", "rq_offset", "w_term", "blubb_margin",
                      "witness"};
  for (std::size_t s = 0; s < res.per_sample.size(); ++s) {
    const auto& ws = res.per_sample[s];
    out.table.add_row(static_cast<std::int64_t>(s), ws.rq_offset, ws.w_term,
                      ws.blubb_margin, ws.witness);
  }
  out.record.results = {{"box_size", res.box_size},
                        {"energy_offset", res.offset},
                        {"hits", res.hits},
                        {"p_hat", res.ci.estimate},
                        {"wilson_low", res.ci.lower},
                        {"wilson_high", res.ci.upper},
                        {"ids_lower_bound", res.ids_lower_bound},
                        {"cblubb", res.cblubb},
                        {"min_blubb_margin", res.min_blubb_margin}};
  return out;
}

inline RunOutput run_ct_decay(const ExperimentConfig& cfg) {
  auto gs = periodic_ground_state(cfg.model.vper, cfg.model.geometry, cfg.n_h);
  BoxGrid box(cfg.model.geometry, cfg.box_size, cfg.n_h);
  Eigen::VectorXd v = vper_on_grid(cfg.model.vper, box);
  if (cfg.ct_sample_potential) {
    auto r = sample_realization(cfg.model, cfg.box_size, cfg.seed, 0);
    v += evaluate_on_grid(cfg.model, r, box);
  }
  auto h = assemble_hamiltonian(v, box, BC::Dirichlet);
  double e1 = detail::lowest_eigenvalue(h.mat, 1e-10);
  double energy = gs.energy + cfg.ct_fraction * (e1 - gs.energy);
  auto windows = cell_bands_1d(box, cfg.ct_base_cells, 1, cfg.ct_probe_first,
                               cfg.ct_probe_count);
  auto ct = ct_decay(h, energy, windows);
  RunOutput out;
  out.table.header = {"distance", "norm"};
  for (std::size_t i = 0; i < ct.distances.size(); ++i)
    out.table.add_row(ct.distances[i], ct.norms[i]);
  out.record.results = {{"e0", gs.energy},
                        {"e1", ct.e1},
                        {"energy", ct.energy},
                        {"rate", ct.rate},
                        {"prefactor", ct.prefactor},
                        {"fit_residual", ct.fit_residual},
                        {"rate_over_gap", ct.rate_over_gap}};
  return out;
}

inline RunOutput run_ilse(const ExperimentConfig& cfg) {
  auto gs = periodic_ground_state(cfg.model.vper, cfg.model.geometry, cfg.n_h);
  IlseConstants constants;
  constants.cprime = cfg.ilse_cprime;
  int box_size = 1;
  for (int i = 0; i < cfg.ilse_kappa; ++i) box_size *= cfg.ilse_ell;
  if (cfg.ilse_c1 == "auto" || cfg.ilse_c2 == "auto") {
    // calibrate on the mean-coupling reference operator at the event energy
    BoxGrid box(cfg.model.geometry, box_size, cfg.n_h);
    auto ref = mean_realization(cfg.model, box_size);
    Eigen::VectorXd v = vper_on_grid(cfg.model.vper, box) +
                        evaluate_on_grid(cfg.model, ref, box);
    auto h = assemble_hamiltonian(v, box, BC::Dirichlet);
    double energy =
        gs.energy + std::pow(static_cast<double>(box_size), -2.0 / cfg.ilse_kappa);
    int cells = box.cells_per_axis();
    auto windows =
        cell_bands_1d(box, 2, 1, 4, std::max(2, std::min(10, cells - 6)));
    auto cal = calibrate_ct_constants(h, energy, windows, cfg.ilse_headroom);
    constants.c1 = cal.c1;
    constants.c2 = cal.c2;
  }
  if (cfg.ilse_c1 != "auto") constants.c1 = std::stod(cfg.ilse_c1);
  if (cfg.ilse_c2 != "auto") constants.c2 = std::stod(cfg.ilse_c2);
  auto res = ilse_probability(cfg.model, cfg.ilse_ell, cfg.ilse_kappa,
                              constants, cfg.samples, cfg.seed, cfg.n_h,
                              cfg.jobs);
  RunOutput out;
  out.table.header = {"ell",        "kappa",      "box_size", "threshold",
                      "delta",      "samples",    "good",     "p_hat",
                      "wilson_low", "wilson_high", "predicted_lower_bound"};
  out.table.add_row(res.ell, res.kappa, res.box_size, res.threshold, res.delta,
                    res.samples, res.good, res.ci.estimate, res.ci.lower,
                    res.ci.upper, res.predicted_lower_bound);
  out.record.results = {{"c1", constants.c1},
                        {"c2", constants.c2},
                        {"cprime", constants.cprime},
                        {"threshold", res.threshold},
                        {"p_hat", res.ci.estimate},
                        {"predicted_lower_bound", res.predicted_lower_bound}};
  return out;
}

}  // namespace rundetail

inline RunOutput run_experiment(const ExperimentConfig& cfg,
                                bool write_files = true) {
  auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  switch (cfg.kind) {
    case ExperimentKind::Spectrum: out = rundetail::run_spectrum(cfg); break;
    case ExperimentKind::Ids: out = rundetail::run_ids(cfg); break;
    case ExperimentKind::Tail: out = rundetail::run_tail(cfg); break;
    case ExperimentKind::LifshitzFit:
      out = rundetail::run_lifshitz_fit(cfg);
      break;
    case ExperimentKind::BoundsCheck:
      out = rundetail::run_bounds_check(cfg);
      break;
    case ExperimentKind::E0: out = rundetail::run_e0(cfg); break;
    case ExperimentKind::LowerBound:
      out = rundetail::run_lower_bound(cfg);
      break;
    case ExperimentKind::CtDecay: out = rundetail::run_ct_decay(cfg); break;
    case ExperimentKind::Ilse: out = rundetail::run_ilse(cfg); break;
  }
  auto t1 = std::chrono::steady_clock::now();
  out.record.kind = cfg.kind;
  out.record.config_hash = cfg.config_hash;
  out.record.seed = cfg.seed;
  out.record.samples = cfg.samples;
  out.record.jobs = cfg.jobs;
  out.record.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  out.record.canonical_config = cfg.canonical;
  if (write_files) out.paths = write_record(out.record, out.table, cfg.out_dir);
  return out;
}

}  // namespace speclab
