#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "speclab/geometry.hpp"

namespace speclab {

// C^2 polynomial bump chi: 1 on the fundamental cell, 0 outside
// Lambda_{1/2} = M*(-1,1)^d, built per axis from the quintic step. Scaled
// copies chi_L(y) = chi(y/L) are sampled on box grids; the gradient and
// Laplacian are available in closed form.
class CutoffBump {
 public:
  // one-axis profile on lattice coordinate t
  static double q(double t) {
    double s = (std::abs(t) - 0.5) * 2.0;
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  }
  static double dq(double t) {
    double a = std::abs(t);
    double s = (a - 0.5) * 2.0;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double ds = -30.0 * s * s * (1.0 - s) * (1.0 - s);
    return (t < 0.0 ? -1.0 : 1.0) * 2.0 * ds;
  }
  static double d2q(double t) {
    double a = std::abs(t);
    double s = (a - 0.5) * 2.0;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    double d2s = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    return 4.0 * d2s;
  }

  explicit CutoffBump(LatticeGeometry geom, double scale = 1.0)
      : geom_(std::move(geom)), scale_(scale) {}

  double scale() const { return scale_; }

  // chi_L at lattice coordinate y
  double value(const Vec3& y) const {
    double v = 1.0;
    for (int a = 0; a < geom_.dim; ++a) v *= q(y(a) / scale_);
    return v;
  }

  // physical-space gradient at lattice coordinate y
  Vec3 gradient(const Vec3& y) const {
    Vec3 glat = Vec3::Zero();
    for (int a = 0; a < geom_.dim; ++a) {
      double g = dq(y(a) / scale_) / scale_;
      for (int b = 0; b < geom_.dim; ++b)
        if (b != a) g *= q(y(b) / scale_);
      glat(a) = g;
    }
    // grad_x = M^{-T} grad_y
    return geom_.Minv.transpose() * glat;
  }

  // physical-space Laplacian at lattice coordinate y (diagonal generators)
  double laplacian(const Vec3& y) const {
    double lap = 0.0;
    for (int a = 0; a < geom_.dim; ++a) {
      double term = d2q(y(a) / scale_) / (scale_ * scale_);
      for (int b = 0; b < geom_.dim; ++b)
        if (b != a) term *= q(y(b) / scale_);
      lap += term / (geom_.M(a, a) * geom_.M(a, a));
    }
    return lap;
  }

  Eigen::VectorXd on_grid(const BoxGrid& grid) const {
    Eigen::VectorXd v(grid.dof());
    for (std::int64_t i = 0; i < grid.dof(); ++i)
      v(i) = value(grid.lattice_point(grid.multi_index(i)));
    return v;
  }

  // sup |grad chi| and ||Laplace chi||_2 over the support, by sampling
  double grad_sup(int samples_per_axis = 64) const {
    BoxGrid probe(geom_, 0, samples_per_axis);
    double best = 0.0;
    for (std::int64_t i = 0; i < probe.dof(); ++i) {
      Vec3 y = probe.lattice_point(probe.multi_index(i)) * 2.0 * scale_;
      best = std::max(best, gradient(y).norm());
    }
    return best;
  }
  double laplacian_l2(int samples_per_axis = 64) const {
    BoxGrid probe(geom_, 0, samples_per_axis);
    double acc = 0.0;
    double w = probe.node_weight();
    for (std::int64_t i = 0; i < probe.dof(); ++i) {
      Vec3 y = probe.lattice_point(probe.multi_index(i)) * 2.0 * scale_;
      double l = laplacian(y);
      acc += l * l * w * std::pow(2.0 * scale_, geom_.dim);
    }
    return std::sqrt(acc);
  }

 private:
  LatticeGeometry geom_;
  double scale_;
};

}  // namespace speclab
