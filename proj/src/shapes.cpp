#include "capsat/shapes.hpp"

#include <cmath>
#include <numbers>

#include "capsat/analytic_models.hpp"

namespace capsat {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool valid_angle(double a) { return a > 0.0 && a < std::numbers::pi; }

}  // namespace

std::string shape_name(const ModelShape& shape) {
  return std::visit(overloaded{[](const HalfSpace&) { return std::string("halfspace"); },
                               [](const SphericalCapBoundary&) { return std::string("cap"); },
                               [](const Cylinder&) { return std::string("cylinder"); },
                               [](const Wedge&) { return std::string("wedge"); },
                               [](const Cone&) { return std::string("cone"); },
                               [](const Cuboid&) { return std::string("cuboid"); },
                               [](const BallObstacle&) { return std::string("ball"); }},
                    shape);
}

void validate_shape(const ModelShape& shape, int n) {
  if (n < 1) throw DomainError("shape: dimension must be >= 1");
  std::visit(
      overloaded{
          [](const HalfSpace& s) {
            if (!(s.d >= 0.0)) throw DomainError("halfspace: d must be >= 0");
          },
          [](const SphericalCapBoundary& s) {
            if (!(s.d >= 0.0)) throw DomainError("cap: d must be >= 0");
            if (s.bend_radius == 0.0 || std::isnan(s.bend_radius))
              throw DomainError("cap: bend radius must be nonzero");
            if (s.bend_radius < 0.0 && -s.bend_radius < s.d)
              throw DomainError("cap: concave bend radius must be >= d");
          },
          [n](const Cylinder& s) {
            if (n < 2) throw DomainError("cylinder: needs n >= 2");
            if (!(s.rho >= 0.0) || !(s.h >= 0.0)) throw DomainError("cylinder: lengths must be >= 0");
          },
          [n](const Wedge& s) {
            if (n < 2) throw DomainError("wedge: needs n >= 2");
            if (!valid_angle(s.angle)) throw DomainError("wedge: angle must lie in (0, pi)");
            if (!(s.d >= 0.0)) throw DomainError("wedge: d must be >= 0");
          },
          [](const Cone& s) {
            if (!valid_angle(s.angle)) throw DomainError("cone: angle must lie in (0, pi)");
            if (!(s.d >= 0.0)) throw DomainError("cone: d must be >= 0");
          },
          [n](const Cuboid& s) {
            if (static_cast<int>(s.sides.size()) != n)
              throw DomainError("cuboid: need exactly n side lengths");
            if (!(s.d >= 0.0)) throw DomainError("cuboid: d must be >= 0");
            for (double a : s.sides)
              if (!(a >= 0.0)) throw DomainError("cuboid: sides must be >= 0");
          },
          [](const BallObstacle& s) {
            if (!(s.radius >= 0.0)) throw DomainError("ball: radius must be >= 0");
          }},
      shape);
}

ShapeOracle::ShapeOracle(ModelShape shape, int n) : shape_(std::move(shape)), n_(n) {
  validate_shape(shape_, n_);
}

bool ShapeOracle::contains(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  return std::visit(
      overloaded{
          [&](const HalfSpace& s) { return p[0] >= s.d; },
          [&](const SphericalCapBoundary& s) {
            if (std::isinf(s.bend_radius)) return p[0] >= s.d;
            const double radius = std::abs(s.bend_radius);
            const double c = s.bend_radius > 0.0 ? s.d + radius : s.d - radius;
            const double dist2 = (p[0] - c) * (p[0] - c) + p.tail(p.size() - 1).squaredNorm();
            return s.bend_radius > 0.0 ? dist2 <= radius * radius : dist2 >= radius * radius;
          },
          [&](const Cylinder& s) {
            if (p[0] < s.near || p[0] > s.near + s.h) return false;
            return p.tail(p.size() - 1).squaredNorm() <= s.rho * s.rho;
          },
          [&](const Wedge& s) {
            const double u = p[0] - s.d;
            const double v = p[1];
            if (u == 0.0 && v == 0.0) return true;
            return std::abs(std::atan2(v, u)) <= 0.5 * s.angle;
          },
          [&](const Cone& s) {
            const double u = p[0] - s.d;
            const double perp = p.tail(p.size() - 1).norm();
            if (u == 0.0 && perp == 0.0) return true;
            return std::atan2(perp, u) <= 0.5 * s.angle;
          },
          [&](const Cuboid& s) {
            if (p[0] < s.d || p[0] > s.d + s.sides[0]) return false;
            for (Eigen::Index j = 1; j < p.size(); ++j)
              if (std::abs(p[j]) > 0.5 * s.sides[static_cast<std::size_t>(j)]) return false;
            return true;
          },
          [&](const BallObstacle& s) {
            const double dx = p[0] - s.center_distance;
            return dx * dx + p.tail(p.size() - 1).squaredNorm() <= s.radius * s.radius;
          }},
      shape_);
}

ClippedShapeOracle::ClippedShapeOracle(ModelShape shape, int n, double r)
    : inner_(std::move(shape), n), r2_(r * r) {
  if (!(r > 0.0)) throw DomainError("ClippedShapeOracle: r must be > 0");
}

bool ClippedShapeOracle::contains(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  return p.squaredNorm() <= r2_ && inner_.contains(p);
}

std::optional<double> analytic_hitting_probability(const ModelShape& shape, int n, double t) {
  validate_shape(shape, n);
  if (const auto* h = std::get_if<HalfSpace>(&shape)) return halfspace_hitting_probability(h->d, t);
  if (const auto* c = std::get_if<SphericalCapBoundary>(&shape); c && std::isinf(c->bend_radius))
    return halfspace_hitting_probability(c->d, t);
  return std::nullopt;
}

std::optional<double> analytic_relative_volume(const ModelShape& shape, int n, double r) {
  validate_shape(shape, n);
  if (!(r > 0.0)) throw DomainError("analytic_relative_volume: r must be > 0");
  return std::visit(
      overloaded{
          [&](const HalfSpace& s) -> std::optional<double> {
            return s.d >= r ? 0.0 : spherical_cap_fraction(n, s.d, r);
          },
          [&](const SphericalCapBoundary& s) -> std::optional<double> {
            if (!std::isinf(s.bend_radius)) return std::nullopt;
            return s.d >= r ? 0.0 : spherical_cap_fraction(n, s.d, r);
          },
          [&](const Cylinder& s) -> std::optional<double> {
            return cylinder_relative_volume(n, s.rho, s.h, s.near, r);
          },
          [&](const Wedge&) -> std::optional<double> { return std::nullopt; },
          [&](const Cone&) -> std::optional<double> { return std::nullopt; },
          [&](const Cuboid& s) -> std::optional<double> {
            // Only when the box lies inside the ball: farthest corner check.
            double far2 = (s.d + s.sides[0]) * (s.d + s.sides[0]);
            double volume = s.sides[0];
            for (std::size_t j = 1; j < s.sides.size(); ++j) {
              far2 += 0.25 * s.sides[j] * s.sides[j];
              volume *= s.sides[j];
            }
            if (far2 > r * r) return std::nullopt;
            return volume / ball_volume(n, r);
          },
          [&](const BallObstacle& s) -> std::optional<double> {
            if (std::abs(s.center_distance) + s.radius > r) return std::nullopt;
            return std::pow(s.radius / r, n);
          }},
      shape);
}

}  // namespace capsat
