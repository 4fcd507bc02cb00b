#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {

// Law of a single coupling lambda_0 with support in [0,1]. Sampling is by
// inverse CDF from one uniform, so matched seeds give monotone couplings
// across laws.
struct CouplingLaw {
  enum class Kind { Uniform, Constant, TwoPoint, InverseCdfTable };

  Kind kind = Kind::Uniform;
  double atom_weight = 0.0;  // TwoPoint: P{lambda = 0}
  double value = 1.0;        // Constant / TwoPoint upper value
  // InverseCdfTable: quantile function sampled at equispaced u in [0,1]
  std::vector<double> quantiles;

  static CouplingLaw uniform() { return CouplingLaw{}; }
  static CouplingLaw constant(double a) {
    CouplingLaw law;
    law.kind = Kind::Constant;
    law.value = a;
    return law;
  }
  static CouplingLaw two_point(double q, double a) {
    CouplingLaw law;
    law.kind = Kind::TwoPoint;
    law.atom_weight = q;
    law.value = a;
    return law;
  }
  static CouplingLaw inverse_cdf(std::vector<double> q) {
    CouplingLaw law;
    law.kind = Kind::InverseCdfTable;
    law.quantiles = std::move(q);
    return law;
  }

  void validate() const {
    switch (kind) {
      case Kind::Uniform:
        return;
      case Kind::Constant:
        if (value < 0.0 || value > 1.0)
          throw ConfigError("constant coupling must lie in [0,1]");
        return;
      case Kind::TwoPoint:
        if (atom_weight < 0.0 || atom_weight > 1.0)
          throw ConfigError("two-point atom weight must lie in [0,1]");
        if (value < 0.0 || value > 1.0)
          throw ConfigError("two-point coupling value must lie in [0,1]");
        if (atom_weight == 1.0 || (value == 0.0 && atom_weight < 1.0)) {
          // P{lambda=0} = 1 is the deterministic trivial case
          if (atom_weight == 1.0)
            throw ConfigError("two-point law with full mass at 0 is trivial");
        }
        return;
      case Kind::InverseCdfTable:
        if (quantiles.size() < 2)
          throw ConfigError("inverse-CDF table needs at least 2 knots");
        for (std::size_t i = 0; i < quantiles.size(); ++i) {
          double v = quantiles[i];
          if (v < 0.0 || v > 1.0)
            throw ConfigError("inverse-CDF values must lie in [0,1]");
          if (i > 0 && v < quantiles[i - 1])
            throw ConfigError("inverse-CDF table must be nondecreasing");
        }
        return;
    }
  }

  double sample(double u) const {
    switch (kind) {
      case Kind::Uniform:
        return u;
      case Kind::Constant:
        return value;
      case Kind::TwoPoint:
        return u < atom_weight ? 0.0 : value;
      case Kind::InverseCdfTable: {
        double t = u * static_cast<double>(quantiles.size() - 1);
        auto i = static_cast<std::size_t>(t);
        if (i + 1 >= quantiles.size()) return quantiles.back();
        double f = t - static_cast<double>(i);
        return quantiles[i] + f * (quantiles[i + 1] - quantiles[i]);
      }
    }
    return 0.0;
  }

  double mean() const {
    switch (kind) {
      case Kind::Uniform:
        return 0.5;
      case Kind::Constant:
        return value;
      case Kind::TwoPoint:
        return (1.0 - atom_weight) * value;
      case Kind::InverseCdfTable: {
        // integral of the quantile function over [0,1]
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < quantiles.size(); ++i)
          s += 0.5 * (quantiles[i] + quantiles[i + 1]);
        return s / static_cast<double>(quantiles.size() - 1);
      }
    }
    return 0.0;
  }

  // P{lambda <= eps} > 0 for every eps > 0
  bool zero_in_support() const {
    switch (kind) {
      case Kind::Uniform:
        return true;
      case Kind::Constant:
        return value == 0.0;
      case Kind::TwoPoint:
        return atom_weight > 0.0;
      case Kind::InverseCdfTable:
        return quantiles.front() == 0.0;
    }
    return false;
  }

  // P{lambda = 0} (exact for the atom laws; 0 for continuous families)
  double mass_at_zero() const {
    switch (kind) {
      case Kind::Uniform:
        return 0.0;
      case Kind::Constant:
        return value == 0.0 ? 1.0 : 0.0;
      case Kind::TwoPoint:
        return atom_weight;
      case Kind::InverseCdfTable: {
        std::size_t i = 0;
        while (i < quantiles.size() && quantiles[i] == 0.0) ++i;
        return static_cast<double>(i == 0 ? 0 : i - 1) /
               static_cast<double>(quantiles.size() - 1);
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Uniform:
        return "uniform";
      case Kind::Constant:
        return "constant:" + std::to_string(value);
      case Kind::TwoPoint:
        return "two_point:" + std::to_string(atom_weight) + ":" +
               std::to_string(value);
      case Kind::InverseCdfTable:
        return "table[" + std::to_string(quantiles.size()) + "]";
    }
    return "?";
  }
};

}  // namespace speclab
