#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "jumplq/errors.hpp"

namespace jumplq {

// Per-coordinate constraint of a coordinate cone.
enum class CoordinateSign { free_axis, nonneg, nonpos, zero };

// Closed cone of admissible control values. Three variants: the whole space,
// a product of half-lines/axes/origins, and a single ray {lambda*g : lambda >= 0}.
// Every variant is convex and contains the origin.
class Cone {
 public:
  enum class Kind { full_space, coordinate, ray };

  static Cone full_space(int dim) {
    if (dim < 1) throw ArgumentError("cone: dimension must be positive");
    Cone c;
    c.kind_ = Kind::full_space;
    c.dim_ = dim;
    return c;
  }

  static Cone coordinate(std::vector<CoordinateSign> signs) {
    if (signs.empty()) throw ArgumentError("cone: empty sign list");
    Cone c;
    c.kind_ = Kind::coordinate;
    c.dim_ = static_cast<int>(signs.size());
    c.signs_ = std::move(signs);
    return c;
  }

  static Cone ray(Eigen::VectorXd generator) {
    if (generator.size() == 0) throw ArgumentError("cone: empty ray generator");
    if (!generator.allFinite()) throw ArgumentError("cone: non-finite ray generator");
    double norm = generator.norm();
    if (norm == 0.0) throw ArgumentError("cone: zero ray generator");
    Cone c;
    c.kind_ = Kind::ray;
    c.dim_ = static_cast<int>(generator.size());
    c.generator_ = std::move(generator);
    c.generator_sqnorm_ = norm * norm;
    return c;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<CoordinateSign>& signs() const { return signs_; }
  const Eigen::VectorXd& generator() const { return generator_; }

  // All supported variants are convex closed cones.
  bool is_convex() const { return true; }

  // True when v in Pi implies -v in Pi.
  bool is_symmetric() const {
    switch (kind_) {
      case Kind::full_space:
        return true;
      case Kind::coordinate:
        return std::all_of(signs_.begin(), signs_.end(), [](CoordinateSign s) {
          return s == CoordinateSign::free_axis || s == CoordinateSign::zero;
        });
      case Kind::ray:
        return false;
    }
    return false;
  }

  // Euclidean projection onto the cone.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    check_point(x);
    switch (kind_) {
      case Kind::full_space:
        return x;
      case Kind::coordinate: {
        Eigen::VectorXd p(x.size());
        for (int i = 0; i < x.size(); ++i) {
          switch (signs_[static_cast<size_t>(i)]) {
            case CoordinateSign::free_axis: p[i] = x[i]; break;
            case CoordinateSign::nonneg: p[i] = std::max(x[i], 0.0); break;
            case CoordinateSign::nonpos: p[i] = std::min(x[i], 0.0); break;
            case CoordinateSign::zero: p[i] = 0.0; break;
          }
        }
        return p;
      }
      case Kind::ray: {
        double lambda = std::max(0.0, generator_.dot(x) / generator_sqnorm_);
        return lambda * generator_;
      }
    }
    throw NumericError("cone: unreachable");
  }

  // Projection onto the intersection with the centered ball of the given
  // radius. For a closed convex cone this is radial clipping of the cone
  // projection.
  Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double radius) const {
    if (!(radius >= 0.0)) throw ArgumentError("cone: negative ball radius");
    Eigen::VectorXd p = project(x);
    double norm = p.norm();
    if (norm > radius) {
      if (radius == 0.0) {
        p.setZero();
      } else {
        p *= radius / norm;
      }
    }
    return p;
  }

  bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const {
    check_point(x);
    return (x - project(x)).norm() <= tol;
  }

  // Membership in the dual-like test set {y : sup_{v in Pi, |v|<=1} y.v <= tol}.
  // Evaluated analytically per variant.
  bool dual_membership(const Eigen::VectorXd& y, double tol = 1e-12) const {
    check_point(y);
    return support_on_unit_ball(y) <= tol;
  }

  // sup{y.v : v in Pi, |v| <= 1}.
  double support_on_unit_ball(const Eigen::VectorXd& y) const {
    check_point(y);
    switch (kind_) {
      case Kind::full_space:
        return y.norm();
      case Kind::coordinate: {
        double sq = 0.0;
        for (int i = 0; i < y.size(); ++i) {
          double w = 0.0;
          switch (signs_[static_cast<size_t>(i)]) {
            case CoordinateSign::free_axis: w = std::abs(y[i]); break;
            case CoordinateSign::nonneg: w = std::max(y[i], 0.0); break;
            case CoordinateSign::nonpos: w = std::max(-y[i], 0.0); break;
            case CoordinateSign::zero: w = 0.0; break;
          }
          sq += w * w;
        }
        return std::sqrt(sq);
      }
      case Kind::ray:
        return std::max(0.0, generator_.dot(y)) / std::sqrt(generator_sqnorm_);
    }
    throw NumericError("cone: unreachable");
  }

 private:
  void check_point(const Eigen::VectorXd& x) const {
    if (x.size() != dim_) throw ArgumentError("cone: dimension mismatch");
    if (!x.allFinite()) throw ArgumentError("cone: non-finite point");
  }

  Kind kind_ = Kind::full_space;
  int dim_ = 0;
  std::vector<CoordinateSign> signs_;
  Eigen::VectorXd generator_;
  double generator_sqnorm_ = 0.0;
};

}  // namespace jumplq
