#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/operators.hpp"
#include "speclab/potential.hpp"

namespace speclab {

// Key-value configuration with [section] headers, '#' comments and
// 'key = value' lines. Keys are addressed as "section.key".
class KeyValueText {
 public:
  static KeyValueText parse(const std::string& text) {
    KeyValueText kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::vector<std::string> errors;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          errors.push_back("line " + std::to_string(lineno) +
                           ": unterminated section header");
          continue;
        }
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        errors.push_back("line " + std::to_string(lineno) +
                         ": expected 'key = value'");
        continue;
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        errors.push_back("line " + std::to_string(lineno) + ": empty key");
        continue;
      }
      std::string full = section.empty() ? key : section + "." + key;
      if (kv.values_.count(full))
        errors.push_back("line " + std::to_string(lineno) +
                         ": duplicate key '" + full + "'");
      kv.values_[full] = value;
    }
    if (!errors.empty()) throw ConfigError(errors);
    return kv;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

 private:
  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  std::map<std::string, std::string> values_;
};

enum class ExperimentKind {
  Spectrum,
  Ids,
  Tail,
  LifshitzFit,
  BoundsCheck,
  E0,
  LowerBound,
  CtDecay,
  Ilse,
};

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Ids: return "ids";
    case ExperimentKind::Tail: return "tail";
    case ExperimentKind::LifshitzFit: return "lifshitz-fit";
    case ExperimentKind::BoundsCheck: return "bounds-check";
    case ExperimentKind::E0: return "e0";
    case ExperimentKind::LowerBound: return "lower-bound";
    case ExperimentKind::CtDecay: return "ct-decay";
    case ExperimentKind::Ilse: return "ilse";
  }
  return "?";
}

inline std::optional<ExperimentKind> kind_from_name(const std::string& s) {
  for (auto k : {ExperimentKind::Spectrum, ExperimentKind::Ids,
                 ExperimentKind::Tail, ExperimentKind::LifshitzFit,
                 ExperimentKind::BoundsCheck, ExperimentKind::E0,
                 ExperimentKind::LowerBound, ExperimentKind::CtDecay,
                 ExperimentKind::Ilse})
    if (s == kind_name(k)) return k;
  return std::nullopt;
}

struct ExperimentConfig {
  PotentialModel model;
  int n_h = 8;
  int box_size = 4;
  ExperimentKind kind = ExperimentKind::Spectrum;
  std::uint64_t seed = 1;
  std::int64_t samples = 1000;
  int jobs = 1;
  std::string out_dir = "out";

  // kind-specific knobs
  BC bc = BC::Dirichlet;
  int eigenpair_count = 6;
  std::string dump_operator_path;
  std::vector<BC> bcs{BC::Dirichlet, BC::Mezincescu, BC::Neumann};
  double e_min = 0.01;
  double e_ratio = 2.0;
  int e_count = 6;
  std::string cgap_mode = "auto";  // or a numeric literal
  std::string beta_mode = "auto";
  std::vector<int> gap_l_list{1, 2, 3, 4, 5, 6};
  std::string input_table;  // lifshitz-fit
  std::vector<int> l_list{1, 2, 4};
  std::vector<double> alpha_list{0.25, 0.5};
  double e_offset = 0.3;       // lower-bound
  double ct_fraction = 0.5;    // ct-decay: E = E0 + frac (E1 - E0)
  int ct_base_cells = 3;
  int ct_probe_first = -1;
  int ct_probe_count = -1;
  bool ct_sample_potential = false;
  int ilse_ell = 3;
  int ilse_kappa = 2;
  std::string ilse_c1 = "auto";
  std::string ilse_c2 = "auto";
  double ilse_cprime = 0.05;
  double ilse_headroom = 1.5;

  std::string canonical;        // resolved key = value text
  std::uint64_t config_hash = 0;
};

namespace confdetail {

struct Collector {
  const KeyValueText& kv;
  std::vector<std::string> errors;
  std::vector<std::string> seen;

  std::string raw(const std::string& key, const std::string& fallback) {
    seen.push_back(key);
    return kv.get(key, fallback);
  }

  double number(const std::string& key, double fallback, double lo, double hi,
                const std::string& what) {
    std::string v = raw(key, "");
    if (v.empty()) return fallback;
    try {
      std::size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      if (x < lo || x > hi) {
        errors.push_back(key + ": " + what + " must lie in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) +
                         "], got " + v);
        return fallback;
      }
      return x;
    } catch (const std::exception&) {
      errors.push_back(key + ": expected a number, got '" + v + "'");
      return fallback;
    }
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback,
                       std::int64_t lo, std::int64_t hi,
                       const std::string& what) {
    std::string v = raw(key, "");
    if (v.empty()) return fallback;
    try {
      std::size_t pos = 0;
      long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      if (x < lo || x > hi) {
        errors.push_back(key + ": " + what + " must lie in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) +
                         "], got " + v);
        return fallback;
      }
      return x;
    } catch (const std::exception&) {
      errors.push_back(key + ": expected an integer, got '" + v + "'");
      return fallback;
    }
  }

  std::vector<double> number_list(const std::string& key,
                                  std::vector<double> fallback) {
    std::string v = raw(key, "");
    if (v.empty()) return fallback;
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        errors.push_back(key + ": expected a comma-separated number list");
        return fallback;
      }
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) {
    auto nums = number_list(key, {});
    if (nums.empty()) return fallback;
    std::vector<int> out;
    for (double x : nums) out.push_back(static_cast<int>(x));
    return out;
  }
};

inline CouplingLaw parse_law(const std::string& text, Collector& col,
                             const std::string& key) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ':')) parts.push_back(tok);
  try {
    if (parts.empty()) throw ConfigError("empty law");
    if (parts[0] == "uniform") return CouplingLaw::uniform();
    if (parts[0] == "constant") return CouplingLaw::constant(std::stod(parts.at(1)));
    if (parts[0] == "two_point")
      return CouplingLaw::two_point(std::stod(parts.at(1)),
                                    std::stod(parts.at(2)));
    if (parts[0] == "table") {
      std::vector<double> q;
      std::istringstream qs(parts.at(1));
      while (std::getline(qs, tok, ',')) q.push_back(std::stod(tok));
      return CouplingLaw::inverse_cdf(q);
    }
    throw ConfigError("unknown law '" + parts[0] + "'");
  } catch (const std::exception& e) {
    col.errors.push_back(key + ": invalid coupling law '" + text +
                         "' (uniform | constant:a | two_point:q:a | "
                         "table:v0,v1,...)");
    return CouplingLaw::uniform();
  }
}

inline PeriodicBackground parse_vper(const std::string& text, Collector& col,
                                     const std::string& key) {
  if (text == "zero" || text.empty()) return PeriodicBackground::zero();
  std::vector<PeriodicBackground::CosTerm> terms;
  std::istringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ';')) {
    std::vector<std::string> parts;
    std::istringstream ps(piece);
    std::string tok;
    while (std::getline(ps, tok, ':')) parts.push_back(tok);
    if (parts.empty() || parts[0] != "cosine") {
      col.errors.push_back(key + ": expected zero | cosine:amp[:wave[:phase]]");
      return PeriodicBackground::zero();
    }
    try {
      PeriodicBackground::CosTerm t;
      t.amplitude = std::stod(parts.at(1));
      t.wave = {parts.size() > 2 ? std::stoi(parts[2]) : 1, 0, 0};
      t.phase = parts.size() > 3 ? std::stod(parts[3]) : 0.0;
      terms.push_back(t);
    } catch (const std::exception&) {
      col.errors.push_back(key + ": malformed cosine term '" + piece + "'");
      return PeriodicBackground::zero();
    }
  }
  return PeriodicBackground::cosine_sum(terms);
}

}  // namespace confdetail

inline std::uint64_t hash_text(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Parses and validates a configuration, reporting every violation at once.
inline ExperimentConfig parse_config(const std::string& text) {
  KeyValueText kv = KeyValueText::parse(text);
  confdetail::Collector col{kv, {}, {}};
  ExperimentConfig cfg;

  // [model]
  int dim = static_cast<int>(
      col.integer("model.dimension", 1, 1, 3, "dimension"));
  auto m_diag = col.number_list("model.m_diag",
                                std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  if (static_cast<int>(m_diag.size()) == 1 && dim > 1)
    m_diag.assign(static_cast<std::size_t>(dim), m_diag[0]);
  if (static_cast<int>(m_diag.size()) != dim) {
    col.errors.push_back("model.m_diag: needs one entry per dimension");
    m_diag.assign(static_cast<std::size_t>(dim), 1.0);
  }
  bool geometry_ok = true;
  for (double m : m_diag)
    if (!(m > 0.0)) {
      col.errors.push_back("model.m_diag: entries must be positive");
      geometry_ok = false;
    }
  cfg.model.geometry = geometry_ok ? LatticeGeometry::diag(dim, m_diag)
                                   : LatticeGeometry::cubic(dim);

  double mu = col.number("model.coupling", 1.0, 1e-12, 1e6, "coupling");
  std::string site = col.raw("model.site", "standard");
  std::string base = col.raw("model.base_set", "half_cell");
  double radius = col.number("model.radius", 0.45, 1e-9, 1e3, "radius");
  auto widths = col.number_list("model.widths",
                                std::vector<double>(static_cast<std::size_t>(dim), 1.0));
  double tent_peak = col.number("model.tent_peak", 1.0, 1e-12, 1e6, "tent_peak");
  if (site == "standard") {
    if (base == "half_cell")
      cfg.model.site =
          SingleSitePotential::standard_half_cell(mu, cfg.model.geometry);
    else if (base == "ball")
      cfg.model.site = SingleSitePotential::standard_ball(mu, radius);
    else if (base == "axis_box") {
      Vec3 w = Vec3::Constant(1.0);
      for (int a = 0; a < dim && a < static_cast<int>(widths.size()); ++a)
        w(a) = widths[static_cast<std::size_t>(a)];
      cfg.model.site = SingleSitePotential::standard_box(mu, w, dim);
    } else {
      col.errors.push_back(
          "model.base_set: expected half_cell | ball | axis_box, got '" +
          base + "'");
    }
  } else if (site == "general_tent") {
    cfg.model.site = SingleSitePotential::general_tent(tent_peak, radius);
  } else {
    col.errors.push_back("model.site: expected standard | general_tent, got '" +
                         site + "'");
  }
  std::string cutoff = col.raw("model.cutoff_mu", "");
  if (!cutoff.empty()) {
    double level = col.number("model.cutoff_mu", 0.0, 1e-12, 1e6, "cutoff_mu");
    if (level > 0.0) cfg.model.site = cutoff_simplify(cfg.model.site, level);
  }

  std::string law_cycle = col.raw("model.law_cycle", "");
  if (!law_cycle.empty()) {
    cfg.model.laws.clear();
    std::istringstream in(law_cycle);
    std::string piece;
    while (std::getline(in, piece, ';'))
      cfg.model.laws.push_back(
          confdetail::parse_law(piece, col, "model.law_cycle"));
  } else {
    cfg.model.laws = {
        confdetail::parse_law(col.raw("model.law", "uniform"), col, "model.law")};
  }
  cfg.model.vper =
      confdetail::parse_vper(col.raw("model.vper", "zero"), col, "model.vper");

  // [grid]
  cfg.n_h = static_cast<int>(col.integer("grid.n_h", 8, 2, 512, "n_h"));
  cfg.box_size = static_cast<int>(col.integer("grid.L", 4, 0, 4096, "L"));

  // [experiment]
  std::string kind = col.raw("experiment.kind", "spectrum");
  if (auto k = kind_from_name(kind))
    cfg.kind = *k;
  else
    col.errors.push_back("experiment.kind: unknown kind '" + kind + "'");
  cfg.seed = static_cast<std::uint64_t>(col.integer(
      "experiment.seed", 1, 0, std::numeric_limits<std::int64_t>::max(),
      "seed"));
  cfg.samples = col.integer("experiment.samples", 1000, 1, 100000000, "samples");
  cfg.jobs = static_cast<int>(col.integer("experiment.jobs", 1, 1, 256, "jobs"));
  cfg.out_dir = col.raw("experiment.out", "out");

  // kind-specific sections
  auto parse_bc = [&](const std::string& key, BC fallback) {
    std::string v = col.raw(key, "");
    if (v.empty()) return fallback;
    try {
      return bc_from_name(v);
    } catch (const ConfigError&) {
      col.errors.push_back(key + ": expected one of D, N, P, M");
      return fallback;
    }
  };
  cfg.eigenpair_count = static_cast<int>(
      col.integer("spectrum.k", 6, 1, 100000, "eigenpair count"));
  cfg.dump_operator_path = col.raw("spectrum.dump", "");
  BC spec_bc = parse_bc("spectrum.bc", BC::Dirichlet);
  BC tail_bc = parse_bc("tail.bc", BC::Mezincescu);
  cfg.bc = cfg.kind == ExperimentKind::Tail ? tail_bc : spec_bc;
  std::string bcs = col.raw("ids.bcs", "D,M,N");
  {
    cfg.bcs.clear();
    std::istringstream in(bcs);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      try {
        cfg.bcs.push_back(bc_from_name(tok));
      } catch (const ConfigError&) {
        col.errors.push_back("ids.bcs: expected a list of D, N, P, M");
      }
    }
  }
  double ids_emin = col.number("ids.e_min", 0.01, 1e-12, 1e6, "energy offset");
  double ids_ratio = col.number("ids.e_ratio", 2.0, 1.0001, 100.0, "grid ratio");
  int ids_count = static_cast<int>(
      col.integer("ids.e_count", 6, 1, 1000, "energy count"));
  double tail_emin = col.number("tail.e_min", 0.01, 1e-12, 1e6, "energy offset");
  double tail_ratio =
      col.number("tail.e_ratio", 2.0, 1.0001, 100.0, "grid ratio");
  int tail_count = static_cast<int>(
      col.integer("tail.e_count", 6, 1, 1000, "energy count"));
  bool use_ids = cfg.kind == ExperimentKind::Ids;
  cfg.e_min = use_ids ? ids_emin : tail_emin;
  cfg.e_ratio = use_ids ? ids_ratio : tail_ratio;
  cfg.e_count = use_ids ? ids_count : tail_count;
  cfg.cgap_mode = col.raw("tail.cgap", "auto");
  cfg.beta_mode = col.raw("tail.beta", "auto");
  cfg.gap_l_list = col.int_list("tail.gap_l_list", {1, 2, 3, 4, 5, 6});
  cfg.input_table = col.raw("lifshitz-fit.input", "");
  cfg.l_list = col.int_list("e0.l_list", {1, 2, 4});
  cfg.alpha_list = col.number_list("e0.alpha_list", {0.25, 0.5});
  cfg.e_offset =
      col.number("lower-bound.e_offset", 0.3, 1e-12, 1e6, "energy offset");
  cfg.ct_fraction =
      col.number("ct-decay.fraction", 0.5, 1e-6, 0.999999, "energy fraction");
  cfg.ct_base_cells = static_cast<int>(
      col.integer("ct-decay.base_cells", 3, 1, 1000, "base cells"));
  cfg.ct_probe_first = static_cast<int>(
      col.integer("ct-decay.probe_first", -1, -1, 100000, "first probe cell"));
  cfg.ct_probe_count = static_cast<int>(
      col.integer("ct-decay.probe_count", -1, -1, 100000, "probe count"));
  cfg.ct_sample_potential =
      col.raw("ct-decay.potential", "zero") == "sample";
  cfg.ilse_ell =
      static_cast<int>(col.integer("ilse.ell", 3, 2, 100, "base scale"));
  cfg.ilse_kappa =
      static_cast<int>(col.integer("ilse.kappa", 2, 1, 6, "scale exponent"));
  cfg.ilse_c1 = col.raw("ilse.c1", "auto");
  cfg.ilse_c2 = col.raw("ilse.c2", "auto");
  cfg.ilse_cprime =
      col.number("ilse.cprime", 0.05, 1e-9, 1e6, "rate constant");
  cfg.ilse_headroom =
      col.number("ilse.headroom", 1.5, 1.0, 100.0, "calibration headroom");

  // unknown keys
  std::sort(col.seen.begin(), col.seen.end());
  for (const auto& [key, value] : kv.values()) {
    if (!std::binary_search(col.seen.begin(), col.seen.end(), key))
      col.errors.push_back("unknown key '" + key + "'");
  }

  // model-level invariants surface as configuration errors too
  if (col.errors.empty()) {
    try {
      cfg.model.validate();
    } catch (const ConfigError& e) {
      col.errors.push_back(std::string("model: ") + e.what());
    }
  }
  if (!col.errors.empty()) throw ConfigError(col.errors);

  // canonical text: resolved values for every recognized key
  std::ostringstream canon;
  canon << "experiment.kind = " << kind_name(cfg.kind) << "\n";
  for (const auto& [key, value] : kv.values())
    if (key != "experiment.kind") canon << key << " = " << value << "\n";
  cfg.canonical = canon.str();
  cfg.config_hash = hash_text(cfg.canonical);
  return cfg;
}

}  // namespace speclab
