#include "capsat/special_functions.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace capsat {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_cdf_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_cdf_inv: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double upper_incomplete_gamma(double s, double x) {
  if (!(s > 0.0)) throw DomainError("upper_incomplete_gamma: s must be > 0");
  if (!(x >= 0.0)) throw DomainError("upper_incomplete_gamma: x must be >= 0");
  if (x == 0.0) return std::tgamma(s);
  return boost::math::tgamma(s, x);
}

double unit_ball_volume(int n) {
  if (n < 1) throw DomainError("unit_ball_volume: n must be >= 1");
  const double half = 0.5 * n;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

double ball_volume(int n, double r) {
  if (!(r >= 0.0)) throw DomainError("ball_volume: r must be >= 0");
  return unit_ball_volume(n) * std::pow(r, n);
}

}  // namespace capsat
