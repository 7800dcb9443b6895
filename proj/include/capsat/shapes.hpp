#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "capsat/sampling.hpp"

namespace capsat {

// Model error sets, described in a frame where the data point sits at the
// origin and e_1 points towards the set.

/// {x_1 >= d}.
struct HalfSpace {
  double d;
};

/// Boundary through d e_1 bent with radius |bend_radius|. Positive radius: the
/// error set is the ball of that radius centred at (d + R) e_1 (bent away from
/// the data point). Negative radius: the error set is the exterior of the ball
/// of radius |R| centred at (d - |R|) e_1 (bent around the data point).
/// An infinite radius is the flat case.
struct SphericalCapBoundary {
  double d;
  double bend_radius;
};

/// Solid cylinder of radius rho along e_1 occupying near <= x_1 <= near + h.
struct Cylinder {
  double rho;
  double h;
  double near;
};

/// Dihedral wedge with edge {x_1 = d, x_2 = 0}, opening `angle` symmetric
/// about +e_1 in the (x_1, x_2) plane.
struct Wedge {
  double angle;
  double d;
};

/// Circular cone with apex d e_1, axis +e_1 and full opening `angle`.
struct Cone {
  double angle;
  double d;
};

/// Axis-aligned box d <= x_1 <= d + a_1, |x_j| <= a_j / 2 for j >= 2.
struct Cuboid {
  double d;
  std::vector<double> sides;
};

/// Ball of radius `radius` centred at center_distance e_1.
struct BallObstacle {
  double center_distance;
  double radius;
};

using ModelShape =
    std::variant<HalfSpace, SphericalCapBoundary, Cylinder, Wedge, Cone, Cuboid, BallObstacle>;

std::string shape_name(const ModelShape& shape);

/// Throws DomainError when the shape's parameters are invalid in R^n.
void validate_shape(const ModelShape& shape, int n);

/// Membership oracle of a model error set (data point at the origin).
class ShapeOracle final : public MembershipOracle {
 public:
  ShapeOracle(ModelShape shape, int n);
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const override;
  const ModelShape& shape() const { return shape_; }

 private:
  ModelShape shape_;
  int n_;
};

/// Membership in (shape cap B(0, r)); obstacles confined to a ball.
class ClippedShapeOracle final : public MembershipOracle {
 public:
  ClippedShapeOracle(ModelShape shape, int n, double r);
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const override;

 private:
  ShapeOracle inner_;
  double r2_;
};

/// Closed-form hitting probability where one exists (half-space and the flat
/// spherical-cap boundary).
std::optional<double> analytic_hitting_probability(const ModelShape& shape, int n, double t);

/// Closed-form (or quadrature) relative volume of the shape inside B(0, r).
std::optional<double> analytic_relative_volume(const ModelShape& shape, int n, double r);

}  // namespace capsat
