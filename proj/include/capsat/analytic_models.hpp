#pragma once

#include <span>

#include "capsat/special_functions.hpp"

namespace capsat {

/// Exponent n/(n-2) of the isocapacitory inequality; n >= 3.
double saturation_exponent(int n);

/// Volume of the smaller solid cap cut from B(0, r) in R^n by a hyperplane at
/// distance d from the center; 0 <= d <= r.
double spherical_cap_volume(int n, double d, double r);

/// spherical_cap_volume / ball_volume, evaluated without forming either
/// (stays accurate when both underflow).
double spherical_cap_fraction(int n, double d, double r);

/// Brownian hitting probability of a half-space at distance d within time t:
/// 2 Phi(-d / sqrt(t)).
double halfspace_hitting_probability(double d, double t);

/// Isocapacitory saturation of a flat error set at distance d from the center
/// of B(x, r) in R^n, with t = r^2/n: psi^(n/(n-2)) / mu for the exact
/// half-space psi and cap fraction mu. Requires n >= 3 and 0 <= d < r.
double flat_tau(int n, double d, double r);

/// Constant c_n of mu <= c_n psi^(n/(n-2)) in the regime r^2 = n t:
/// (Gamma(n/2 - 1) / Gamma(n/2 - 1, n/4))^(n/(n-2)).
double isocap_constant(int n);

enum class CuboidVariant {
  /// First factor Phi(-a1/sqrt t) - Phi(-(a1 + d)/sqrt t), exactly as printed.
  as_printed,
  /// First factor Phi(-d/sqrt t) - Phi(-(d + a1)/sqrt t).
  role_swapped,
};

/// Product formula for the hitting probability of an axis-aligned cuboid with
/// sides a_1..a_n whose nearest face is at distance d, the foot of the
/// perpendicular being the face center:
///   2^n (first factor) prod_{j >= 2} (Phi(a_j / 2 sqrt t) - Phi(-a_j / 2 sqrt t)).
/// The result is not clamped to [0, 1].
double cuboid_hitting_probability(double d, std::span<const double> sides, double t,
                                  CuboidVariant variant = CuboidVariant::as_printed);

/// Predicted tau(lambda rho) / tau(rho) for a thin cylinder: lambda^(-2/(n-2)).
double cylinder_tau_scaling(int n, double lambda);

/// Relative volume of the cylinder {near <= x_1 <= near + h, |x_perp| <= rho}
/// inside B(0, r) in R^n, by adaptive quadrature over x_1.
double cylinder_relative_volume(int n, double rho, double h, double near, double r);

/// Lower bound on the maximal curvature of the decision boundary implied by
/// saturation tau at distance d (t = r^2/n). With near_center the variant for
/// a curvature maximum inside B(x, r/2) is returned.
double curvature_lower_bound(double tau, int n, double d, double r, bool near_center);

/// Lower bound on the L1 norm of the line-integrated curvature:
/// V_n(d, r) - 2 omega_n r^n Phi(-d/sqrt t) / tau_H.
double integral_curvature_lower_bound(double tau_h, int n, double d, double r);

struct AlphaChoice {
  double alpha;
  double delta;
  double time;
};

/// Solves 2 (Phi(-(d - delta)/sqrt t) / Phi(-d/sqrt t) - 1) = epsilon for
/// delta in [0, d) by bisection, with t = time_factor * d^2, and returns
/// alpha = delta / (frobenius_norm * input_norm). Throws DomainError when the
/// equation has no root below d.
AlphaChoice choose_alpha(double epsilon, double d, double frobenius_norm, double input_norm,
                         double time_factor);

/// Right-hand side -r Phi^{-1}(mu) / sqrt(n) of the Gaussian isoperimetric
/// bound, defined as 0 for mu >= 1/2.
double gaussian_isoperimetric_rhs(double mu, double r, int n);

}  // namespace capsat
