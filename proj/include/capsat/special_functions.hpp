#pragma once

#include <stdexcept>

namespace capsat {

/// Raised when an argument lies outside a function's mathematical domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Standard normal c.d.f.
double std_normal_cdf(double z);
/// Inverse standard normal c.d.f.; p must lie in (0, 1).
double std_normal_cdf_inv(double p);

/// Upper incomplete gamma Gamma(s, x) = int_x^inf e^-u u^(s-1) du, s > 0, x >= 0.
double upper_incomplete_gamma(double s, double x);

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);
/// Volume of B(0, r) in R^n.
double ball_volume(int n, double r);

}  // namespace capsat
