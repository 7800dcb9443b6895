#include "capsat/analytic_models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace capsat {

namespace {

void require_dim_at_least(int n, int min, const char* what) {
  if (n < min)
    throw DomainError(std::string(what) + ": dimension must be >= " + std::to_string(min));
}

}  // namespace

double saturation_exponent(int n) {
  require_dim_at_least(n, 3, "saturation_exponent");
  return static_cast<double>(n) / static_cast<double>(n - 2);
}

double spherical_cap_fraction(int n, double d, double r) {
  require_dim_at_least(n, 1, "spherical_cap_fraction");
  if (!(r > 0.0)) throw DomainError("spherical_cap_fraction: r must be > 0");
  if (!(d >= 0.0) || d > r) throw DomainError("spherical_cap_fraction: need 0 <= d <= r");
  if (d == r) return 0.0;
  const double ratio = d / r;
  const double x = (1.0 - ratio) * (1.0 + ratio);
  return 0.5 * boost::math::ibeta(0.5 * (n + 1), 0.5, x);
}

double spherical_cap_volume(int n, double d, double r) {
  return spherical_cap_fraction(n, d, r) * ball_volume(n, r);
}

double halfspace_hitting_probability(double d, double t) {
  if (!(d >= 0.0)) throw DomainError("halfspace_hitting_probability: d must be >= 0");
  if (!(t > 0.0)) throw DomainError("halfspace_hitting_probability: t must be > 0");
  return 2.0 * std_normal_cdf(-d / std::sqrt(t));
}

double flat_tau(int n, double d, double r) {
  require_dim_at_least(n, 3, "flat_tau");
  if (!(r > 0.0)) throw DomainError("flat_tau: r must be > 0");
  if (!(d >= 0.0) || !(d < r)) throw DomainError("flat_tau: need 0 <= d < r");
  const double t = r * r / n;
  const double psi = halfspace_hitting_probability(d, t);
  const double mu = spherical_cap_fraction(n, d, r);
  if (mu == 0.0) return std::numeric_limits<double>::infinity();
  return std::exp(saturation_exponent(n) * std::log(psi) - std::log(mu));
}

double isocap_constant(int n) {
  require_dim_at_least(n, 3, "isocap_constant");
  const double s = 0.5 * n - 1.0;
  const double ratio = std::tgamma(s) / upper_incomplete_gamma(s, 0.25 * n);
  return std::pow(ratio, saturation_exponent(n));
}

double cuboid_hitting_probability(double d, std::span<const double> sides, double t,
                                  CuboidVariant variant) {
  if (sides.empty()) throw DomainError("cuboid_hitting_probability: need at least one side");
  if (!(d >= 0.0)) throw DomainError("cuboid_hitting_probability: d must be >= 0");
  if (!(t > 0.0)) throw DomainError("cuboid_hitting_probability: t must be > 0");
  for (double a : sides)
    if (!(a > 0.0)) throw DomainError("cuboid_hitting_probability: sides must be > 0");
  const double st = std::sqrt(t);
  const double a1 = sides[0];
  double value = variant == CuboidVariant::as_printed
                     ? std_normal_cdf(-a1 / st) - std_normal_cdf(-(a1 + d) / st)
                     : std_normal_cdf(-d / st) - std_normal_cdf(-(d + a1) / st);
  value *= 2.0;
  for (std::size_t j = 1; j < sides.size(); ++j) {
    const double half = sides[j] / (2.0 * st);
    value *= 2.0 * (std_normal_cdf(half) - std_normal_cdf(-half));
  }
  return value;
}

double cylinder_tau_scaling(int n, double lambda) {
  require_dim_at_least(n, 3, "cylinder_tau_scaling");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw DomainError("cylinder_tau_scaling: lambda must lie in (0, 1]");
  return std::pow(lambda, -2.0 / (n - 2));
}

double cylinder_relative_volume(int n, double rho, double h, double near, double r) {
  require_dim_at_least(n, 2, "cylinder_relative_volume");
  if (!(rho >= 0.0) || !(h >= 0.0) || !(r > 0.0))
    throw DomainError("cylinder_relative_volume: lengths must be nonnegative");
  const double lo = std::max(near, -r);
  const double hi = std::min(near + h, r);
  if (!(hi > lo) || rho == 0.0) return 0.0;
  // Cross-section radius is min(rho, sqrt(r^2 - x^2)); integrate (radius/r)^(n-1)
  // over x/r so the result is already normalised by r^n.
  const double section = unit_ball_volume(n - 1) / unit_ball_volume(n);
  auto integrand = [&](double u) {
    const double x = u * r;
    const double radial = std::min(rho, std::sqrt(std::max(0.0, r * r - x * x)));
    return std::pow(radial / r, n - 1);
  };
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double kink = rho < r ? std::sqrt(r * r - rho * rho) : 0.0;
  double total = 0.0;
  const double ulo = lo / r;
  const double uhi = hi / r;
  if (kink > lo && kink < hi) {
    total += Quad::integrate(integrand, ulo, kink / r, 15, 1e-13);
    total += Quad::integrate(integrand, kink / r, uhi, 15, 1e-13);
  } else {
    total += Quad::integrate(integrand, ulo, uhi, 15, 1e-13);
  }
  return section * total;
}

double curvature_lower_bound(double tau, int n, double d, double r, bool near_center) {
  require_dim_at_least(n, 3, "curvature_lower_bound");
  if (!(tau > 0.0)) throw DomainError("curvature_lower_bound: tau must be > 0");
  if (!(r > 0.0) || !(d >= 0.0) || !(d < r))
    throw DomainError("curvature_lower_bound: need 0 <= d < r");
  const double t = r * r / n;
  const double phi = std_normal_cdf(-d / std::sqrt(t));
  const double root = std::pow(tau, 1.0 / n);
  if (!near_center) return root / r * std::pow(phi, -1.0 / (n - 2));
  const double nn = n;
  return root * (r - d) / std::pow(r, nn / (nn - 1.0)) *
         std::pow(phi, -nn / ((nn - 1.0) * (nn - 2.0)));
}

double integral_curvature_lower_bound(double tau_h, int n, double d, double r) {
  if (!(tau_h > 0.0)) throw DomainError("integral_curvature_lower_bound: tau_H must be > 0");
  const double t = r * r / n;
  return spherical_cap_volume(n, d, r) -
         2.0 * ball_volume(n, r) * std_normal_cdf(-d / std::sqrt(t)) / tau_h;
}

AlphaChoice choose_alpha(double epsilon, double d, double frobenius_norm, double input_norm,
                         double time_factor) {
  if (!(epsilon > 0.0)) throw DomainError("choose_alpha: epsilon must be > 0");
  if (!(d > 0.0)) throw DomainError("choose_alpha: d must be > 0");
  if (!(frobenius_norm > 0.0) || !(input_norm > 0.0))
    throw DomainError("choose_alpha: norms must be > 0");
  if (!(time_factor > 0.0)) throw DomainError("choose_alpha: time factor must be > 0");
  const double t = time_factor * d * d;
  const double st = std::sqrt(t);
  const double base = std_normal_cdf(-d / st);
  auto excess = [&](double delta) {
    return 2.0 * (std_normal_cdf(-(d - delta) / st) / base - 1.0) - epsilon;
  };
  if (!(excess(d) > 0.0))
    throw DomainError("choose_alpha: no root in [0, d) for this epsilon");
  double lo = 0.0;
  double hi = d;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * d; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double delta = 0.5 * (lo + hi);
  return {delta / (frobenius_norm * input_norm), delta, t};
}

double gaussian_isoperimetric_rhs(double mu, double r, int n) {
  require_dim_at_least(n, 1, "gaussian_isoperimetric_rhs");
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("gaussian_isoperimetric_rhs: mu must lie in (0, 1)");
  if (mu >= 0.5) return 0.0;
  return -r * std_normal_cdf_inv(mu) / std::sqrt(static_cast<double>(n));
}

}  // namespace capsat
