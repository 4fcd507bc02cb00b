#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/geometry.hpp"
#include "speclab/law.hpp"
#include "speclab/rng.hpp"
#include "speclab/stats.hpp"

namespace speclab {

// L-periodic background potential, in lattice coordinates y (x = M y).
struct PeriodicBackground {
  struct CosTerm {
    double amplitude = 0.0;
    std::array<int, 3> wave{1, 0, 0};  // integer wave vector
    double phase = 0.0;
  };

  enum class Kind { Zero, CosineSum };
  Kind kind = Kind::Zero;
  std::vector<CosTerm> terms;

  static PeriodicBackground zero() { return PeriodicBackground{}; }
  static PeriodicBackground cosine(double amplitude, int wave = 1,
                                   double phase = 0.0) {
    PeriodicBackground v;
    v.kind = Kind::CosineSum;
    v.terms.push_back(CosTerm{amplitude, {wave, 0, 0}, phase});
    return v;
  }
  static PeriodicBackground cosine_sum(std::vector<CosTerm> t) {
    PeriodicBackground v;
    v.kind = Kind::CosineSum;
    v.terms = std::move(t);
    return v;
  }

  bool is_zero() const { return kind == Kind::Zero || terms.empty(); }

  double eval_lattice(const Vec3& y, int dim) const {
    if (is_zero()) return 0.0;
    double v = 0.0;
    for (const auto& t : terms) {
      double arg = t.phase;
      for (int a = 0; a < dim; ++a)
        arg += 2.0 * M_PI * t.wave[static_cast<std::size_t>(a)] * y(a);
      v += t.amplitude * std::cos(arg);
    }
    return v;
  }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.amplitude);
    return s;
  }
};

// Single-site potential family u(lambda, x), lambda in [0,1], u >= 0,
// compactly supported, u(0,.) == 0.
class SingleSitePotential {
 public:
  enum class Kind { StandardBreather, GeneralBreather, Custom, Cutoff };
  enum class BaseSet { Ball, AxisBox, HalfCell };

  // u(lambda,x) = mu * 1_{lambda A}(x)
  static SingleSitePotential standard_ball(double mu, double radius) {
    SingleSitePotential u;
    u.kind_ = Kind::StandardBreather;
    u.mu_ = mu;
    u.base_ = BaseSet::Ball;
    u.radius_ = radius;
    u.support_radius_ = radius;
    return u;
  }
  static SingleSitePotential standard_box(double mu, const Vec3& widths,
                                          int dim) {
    SingleSitePotential u;
    u.kind_ = Kind::StandardBreather;
    u.mu_ = mu;
    u.base_ = BaseSet::AxisBox;
    u.widths_ = widths;
    double r = 0.0;
    for (int a = 0; a < dim; ++a) r += 0.25 * widths(a) * widths(a);
    u.support_radius_ = std::sqrt(r);
    return u;
  }
  // A = M*((0,1/2) x (-1/2,1/2)^{d-1}), half of the fundamental cell
  static SingleSitePotential standard_half_cell(double mu,
                                                const LatticeGeometry& g) {
    SingleSitePotential u;
    u.kind_ = Kind::StandardBreather;
    u.mu_ = mu;
    u.base_ = BaseSet::HalfCell;
    u.support_radius_ = (g.M * Vec3::Constant(0.5)).norm();
    return u;
  }

  // u(lambda,x) = profile(|x|/lambda), profile nonincreasing on [0,radius]
  static SingleSitePotential general_radial(std::vector<double> profile,
                                            double radius) {
    SingleSitePotential u;
    u.kind_ = Kind::GeneralBreather;
    u.profile_ = std::move(profile);
    u.radius_ = radius;
    u.support_radius_ = radius;
    double peak = 0.0;
    for (double v : u.profile_) peak = std::max(peak, v);
    u.mu_ = peak;
    return u;
  }
  // tent of given peak: profile(t) = peak * max(0, 1 - t/radius)
  static SingleSitePotential general_tent(double peak, double radius) {
    return general_radial({peak, 0.0}, radius);
  }

  static SingleSitePotential custom(
      std::function<double(double, const Vec3&)> f, double support_radius) {
    SingleSitePotential u;
    u.kind_ = Kind::Custom;
    u.custom_ = std::move(f);
    u.support_radius_ = support_radius;
    u.mu_ = 0.0;
    return u;
  }

  Kind kind() const { return kind_; }
  double coupling() const { return mu_; }
  double support_radius() const { return support_radius_; }
  // true when u only takes the values {0, mu} (exact per-cell algebra applies)
  bool two_valued() const {
    return kind_ == Kind::StandardBreather || kind_ == Kind::Cutoff;
  }

  void validate(const LatticeGeometry& g) const {
    if (kind_ == Kind::StandardBreather || kind_ == Kind::Cutoff) {
      if (!(mu_ > 0.0)) throw ConfigError("coupling must be positive");
    }
    if (base_ == BaseSet::Ball && !(radius_ > 0.0))
      throw ConfigError("ball base set needs a positive radius");
    if (base_ == BaseSet::AxisBox) {
      for (int a = 0; a < g.dim; ++a)
        if (!(widths_(a) > 0.0))
          throw ConfigError("axis-box base set needs positive widths");
    }
    if (kind_ == Kind::GeneralBreather) {
      if (profile_.size() < 2 || !(radius_ > 0.0))
        throw ConfigError("general breather needs a profile and radius");
      for (std::size_t i = 0; i < profile_.size(); ++i) {
        if (profile_[i] < 0.0)
          throw ConfigError("breather profile must be nonnegative");
        if (i > 0 && profile_[i] > profile_[i - 1])
          throw ConfigError("breather profile must be nonincreasing");
      }
    }
    if (kind_ == Kind::Cutoff) inner_->validate(g);
  }

  // evaluate u(lambda, z) at a physical offset z from the site
  double eval(double lambda, const Vec3& z, const LatticeGeometry& g) const {
    if (lambda <= 0.0) return 0.0;
    switch (kind_) {
      case Kind::StandardBreather:
        return in_base(lambda, z, g) ? mu_ : 0.0;
      case Kind::GeneralBreather: {
        double t = z.norm() / lambda;
        if (t > radius_) return 0.0;
        double s = t / radius_ * static_cast<double>(profile_.size() - 1);
        auto i = static_cast<std::size_t>(s);
        if (i + 1 >= profile_.size()) return profile_.back();
        double f = s - static_cast<double>(i);
        return profile_[i] + f * (profile_[i + 1] - profile_[i]);
      }
      case Kind::Custom:
        return custom_(lambda, z);
      case Kind::Cutoff: {
        Vec3 y = g.to_lattice(z);
        for (int a = 0; a < g.dim; ++a)
          if (std::abs(y(a)) > 0.5) return 0.0;
        return inner_->eval(lambda, z, g) >= mu_ ? mu_ : 0.0;
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::StandardBreather: {
        std::string b = base_ == BaseSet::Ball      ? "ball"
                        : base_ == BaseSet::AxisBox ? "axis_box"
                                                    : "half_cell";
        return "standard(" + b + ",mu=" + std::to_string(mu_) + ")";
      }
      case Kind::GeneralBreather:
        return "general(radius=" + std::to_string(radius_) + ")";
      case Kind::Custom:
        return "custom";
      case Kind::Cutoff:
        return "cutoff(mu=" + std::to_string(mu_) + "," +
               inner_->describe() + ")";
    }
    return "?";
  }

  friend SingleSitePotential cutoff_simplify(const SingleSitePotential& u,
                                             double mu);

 private:
  bool in_base(double lambda, const Vec3& z, const LatticeGeometry& g) const {
    switch (base_) {
      case BaseSet::Ball:
        return z.norm() <= lambda * radius_;
      case BaseSet::AxisBox: {
        for (int a = 0; a < 3; ++a)
          if (std::abs(z(a)) > 0.5 * lambda * widths_(a)) return false;
        return true;
      }
      case BaseSet::HalfCell: {
        Vec3 y = g.to_lattice(z);
        if (y(0) < 0.0 || y(0) > 0.5 * lambda) return false;
        for (int a = 1; a < g.dim; ++a)
          if (std::abs(y(a)) > 0.5 * lambda) return false;
        return true;
      }
    }
    return false;
  }

  Kind kind_ = Kind::StandardBreather;
  double mu_ = 1.0;
  BaseSet base_ = BaseSet::HalfCell;
  double radius_ = 0.5;
  Vec3 widths_ = Vec3::Constant(1.0);
  std::vector<double> profile_;
  std::function<double(double, const Vec3&)> custom_;
  std::shared_ptr<const SingleSitePotential> inner_;
  double support_radius_ = 1.0;
};

// Two-valued reduction: (A_mu u)(x) = mu on {x in D : u(x) >= mu}, else 0.
inline SingleSitePotential cutoff_simplify(const SingleSitePotential& u,
                                           double mu) {
  if (!(mu > 0.0)) throw ConfigError("cutoff level must be positive");
  SingleSitePotential v;
  v.kind_ = SingleSitePotential::Kind::Cutoff;
  v.mu_ = mu;
  v.inner_ = std::make_shared<SingleSitePotential>(u);
  v.support_radius_ = u.support_radius();
  return v;
}

// Full specification of the random operator: geometry, single-site family,
// coupling law(s), periodic background. Per-site laws (independent,
// non-identical) are a finite list cycled over the index set.
struct PotentialModel {
  LatticeGeometry geometry;
  SingleSitePotential site;
  std::vector<CouplingLaw> laws{CouplingLaw::uniform()};
  PeriodicBackground vper;

  void validate() const {
    if (laws.empty()) throw ConfigError("at least one coupling law required");
    for (const auto& l : laws) l.validate();
    site.validate(geometry);
  }

  const CouplingLaw& law_at(std::int64_t site_linear_index) const {
    return laws[static_cast<std::size_t>(
        site_linear_index % static_cast<std::int64_t>(laws.size()))];
  }
};

// One sampled coupling vector on I_L with its seed lineage. Regeneration
// from (master_seed, sample_index) is bit-identical.
struct Realization {
  IndexSet box;
  std::vector<double> lambda;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;

  double at(const std::array<int, 3>& k) const {
    return lambda[static_cast<std::size_t>(box.linear(k))];
  }
};

namespace detail {
inline constexpr std::uint64_t kCouplingTag = 0x636f75706cull;  // draw domain
}

inline Realization sample_realization(const PotentialModel& model, int L,
                                      std::uint64_t master_seed,
                                      std::uint64_t sample_index) {
  model.validate();
  if (L < 0) throw ConfigError("box size L must be >= 0");
  Realization r;
  r.box = IndexSet{model.geometry.dim, L};
  r.master_seed = master_seed;
  r.sample_index = sample_index;
  std::int64_t n = r.box.size();
  r.lambda.resize(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    double u = rng::uniform01(master_seed, sample_index,
                              static_cast<std::uint64_t>(j),
                              detail::kCouplingTag);
    r.lambda[static_cast<std::size_t>(j)] = model.law_at(j).sample(u);
  }
  return r;
}

struct PotentialValue {
  double value = 0.0;
  bool complete = true;  // false when x needs cells outside the realization
};

// W_omega(x) = sum_k u(lambda_k, x - k) over the realization's index set.
inline PotentialValue evaluate_potential(const PotentialModel& model,
                                         const Realization& r,
                                         const Vec3& x) {
  const auto& g = model.geometry;
  Vec3 y = g.to_lattice(x);
  // conservative per-axis reach of the support in lattice units
  double reach = model.site.support_radius();
  PotentialValue out;
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    double r_lat = g.diagonal ? reach / g.M(a, a) : reach * g.Minv.norm();
    lo[static_cast<std::size_t>(a)] =
        static_cast<int>(std::ceil(y(a) - r_lat - 1e-12));
    hi[static_cast<std::size_t>(a)] =
        static_cast<int>(std::floor(y(a) + r_lat + 1e-12));
  }
  std::array<int, 3> k = lo;
  for (;;) {
    if (r.box.contains(k)) {
      Vec3 kl = Vec3::Zero();
      for (int a = 0; a < g.dim; ++a)
        kl(a) = static_cast<double>(k[static_cast<std::size_t>(a)]);
      Vec3 z = x - g.to_physical(kl);
      out.value += model.site.eval(r.at(k), z, g);
    } else {
      // a cell whose support could reach x lies outside the realization
      out.complete = false;
    }
    // advance multi-index
    int a = g.dim - 1;
    for (;;) {
      if (++k[static_cast<std::size_t>(a)] <= hi[static_cast<std::size_t>(a)])
        break;
      k[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
      if (--a < 0) return out;
    }
  }
}

// W_omega sampled at the cell centers of a box grid. The sum runs over the
// realization's index set only; indicator sets are sampled pointwise.
inline Eigen::VectorXd evaluate_on_grid(const PotentialModel& model,
                                        const Realization& r,
                                        const BoxGrid& grid) {
  if (grid.L != r.box.L || grid.dim() != r.box.dim)
    throw ConfigError("grid box does not match the realization box");
  const auto& g = model.geometry;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(grid.dof());
  // reach of the support in whole cells
  int reach = 0;
  for (int a = 0; a < g.dim; ++a) {
    double r_lat = model.site.support_radius() / g.M(a, a);
    if (!g.diagonal) r_lat = model.site.support_radius() * g.Minv.norm();
    reach = std::max(reach, static_cast<int>(std::ceil(r_lat + 0.5)));
  }
  const std::int64_t dof = grid.dof();
  for (std::int64_t i = 0; i < dof; ++i) {
    auto idx = grid.multi_index(i);
    Vec3 x = grid.physical_point(idx);
    auto home = grid.cell_of(idx);
    double v = 0.0;
    std::array<int, 3> off{0, 0, 0};
    std::array<int, 3> k{0, 0, 0};
    std::function<void(int)> visit = [&](int axis) {
      if (axis == g.dim) {
        for (int a = 0; a < g.dim; ++a)
          k[static_cast<std::size_t>(a)] = home[static_cast<std::size_t>(a)] +
                                           off[static_cast<std::size_t>(a)];
        if (!r.box.contains(k)) return;
        Vec3 kl = Vec3::Zero();
        for (int a = 0; a < g.dim; ++a)
          kl(a) = static_cast<double>(k[static_cast<std::size_t>(a)]);
        v += model.site.eval(r.at(k), x - g.to_physical(kl), g);
        return;
      }
      for (int o = -reach; o <= reach; ++o) {
        off[static_cast<std::size_t>(axis)] = o;
        visit(axis + 1);
      }
    };
    visit(0);
    w(i) = v;
  }
  return w;
}

// support mask of u(lambda, .) relative to one site, on the cell grid
inline std::vector<bool> support_mask_on_cell(const PotentialModel& model,
                                              double lambda,
                                              const BoxGrid& cell_grid) {
  std::vector<bool> mask(static_cast<std::size_t>(cell_grid.dof()), false);
  for (std::int64_t i = 0; i < cell_grid.dof(); ++i) {
    auto idx = cell_grid.multi_index(i);
    Vec3 z = cell_grid.physical_point(idx);
    mask[static_cast<std::size_t>(i)] =
        model.site.eval(lambda, z, model.geometry) > 0.0;
  }
  return mask;
}

struct NonDegeneracyMargin {
  double estimate = 0.0;    // inf_k E int_D min(u_{lambda_k},1) dx
  double half_width = 0.0;  // 3 sigma of the infimum class
  std::vector<double> per_class;
  std::vector<double> per_class_sigma;
};

// Monte Carlo estimate of inf_k E int_D min{u_{lambda_k}(x),1} dx, one
// estimate per distinct site law. Quadrature at cell centers.
inline NonDegeneracyMargin non_degeneracy_margin(const PotentialModel& model,
                                                 int n_samples,
                                                 std::uint64_t seed,
                                                 int quad_per_axis = 64) {
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  model.validate();
  BoxGrid quad(model.geometry, 0, quad_per_axis);
  const double w = quad.node_weight();
  NonDegeneracyMargin out;
  for (std::size_t c = 0; c < model.laws.size(); ++c) {
    RunningMean acc;
    for (int s = 0; s < n_samples; ++s) {
      double u = rng::uniform01(seed, static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(s),
                                detail::kCouplingTag);
      double lambda = model.laws[c].sample(u);
      double integral = 0.0;
      for (std::int64_t i = 0; i < quad.dof(); ++i) {
        Vec3 z = quad.physical_point(quad.multi_index(i));
        integral +=
            std::min(model.site.eval(lambda, z, model.geometry), 1.0) * w;
      }
      acc.add(integral);
    }
    out.per_class.push_back(acc.mean());
    out.per_class_sigma.push_back(acc.stderr_mean());
  }
  std::size_t arg = 0;
  for (std::size_t c = 1; c < out.per_class.size(); ++c)
    if (out.per_class[c] < out.per_class[arg]) arg = c;
  out.estimate = out.per_class[arg];
  out.half_width = 3.0 * out.per_class_sigma[arg];
  return out;
}

struct MuNonDegeneracy {
  bool pass = false;
  double probability = 0.0;  // inf_k P{ |{u_{lambda_k} >= mu}| >= mu }
  double lower_confidence = 0.0;
};

// Checks mu-non-degeneracy: with probability >= mu, the site potential
// exceeds mu on a set of measure >= mu inside the cell.
inline MuNonDegeneracy mu_nondegeneracy_check(const PotentialModel& model,
                                              double mu, int n_samples,
                                              std::uint64_t seed,
                                              int quad_per_axis = 64) {
  if (!(mu > 0.0) || mu > 1.0)
    throw ConfigError("mu must lie in (0,1]");
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  model.validate();
  BoxGrid quad(model.geometry, 0, quad_per_axis);
  const double w = quad.node_weight();
  MuNonDegeneracy out;
  out.probability = 1.0;
  out.lower_confidence = 1.0;
  for (std::size_t c = 0; c < model.laws.size(); ++c) {
    std::int64_t hits = 0;
    for (int s = 0; s < n_samples; ++s) {
      double u = rng::uniform01(seed, static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(s),
                                detail::kCouplingTag);
      double lambda = model.laws[c].sample(u);
      double measure = 0.0;
      for (std::int64_t i = 0; i < quad.dof(); ++i) {
        Vec3 z = quad.physical_point(quad.multi_index(i));
        if (model.site.eval(lambda, z, model.geometry) >= mu) measure += w;
      }
      if (measure >= mu) ++hits;
    }
    auto ci = wilson_interval(hits, n_samples);
    if (ci.estimate < out.probability) out.probability = ci.estimate;
    if (ci.lower < out.lower_confidence) out.lower_confidence = ci.lower;
  }
  out.pass = out.lower_confidence >= mu;
  return out;
}

}  // namespace speclab
