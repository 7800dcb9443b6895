#include <doctest.h>

#include <cmath>
#include <numbers>

#include "capsat/special_functions.hpp"

using namespace capsat;

namespace {

// Composite Simpson rule; the oracle for the incomplete gamma function.
template <class F>
double simpson(F f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("standard normal cdf") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-13));
  for (double z = -8.0; z <= 8.0; z += 0.25) CHECK(std_normal_cdf(z) + std_normal_cdf(-z) == doctest::Approx(1.0).epsilon(1e-15));
  double prev = 0.0;
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    const double v = std_normal_cdf(z);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("inverse normal cdf round trip and domain") {
  // Phi(z) rounds towards 1 for large z, so the upper tail is checked via symmetry.
  for (double z = -8.0; z <= 0.0; z += 0.05) CHECK(std::abs(std_normal_cdf_inv(std_normal_cdf(z)) - z) < 1e-9);
  for (double p = 0.01; p < 0.995; p += 0.01) CHECK(std_normal_cdf_inv(p) == doctest::Approx(-std_normal_cdf_inv(1.0 - p)).epsilon(1e-12));
  CHECK_THROWS_AS(std_normal_cdf_inv(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_cdf_inv(1.0), DomainError);
  CHECK_THROWS_AS(std_normal_cdf_inv(-0.5), DomainError);
  CHECK_THROWS_AS(std_normal_cdf_inv(std::nan("")), DomainError);
}

TEST_CASE("upper incomplete gamma") {
  for (double x : {0.0, 0.5, 1.0, 3.0, 10.0}) CHECK(upper_incomplete_gamma(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-14));
  for (double s : {0.5, 1.0, 2.5, 7.0}) CHECK(upper_incomplete_gamma(s, 0.0) == doctest::Approx(std::tgamma(s)).epsilon(1e-14));
  const double oracle = simpson([](double u) { return std::exp(-u) * std::pow(u, 1.5); }, 2.5, 80.0, 200000);
  CHECK(std::abs(upper_incomplete_gamma(2.5, 2.5) - oracle) < 1e-8);
  double prev = upper_incomplete_gamma(3.0, 0.0);
  for (double x = 0.1; x < 20.0; x += 0.1) {
    const double v = upper_incomplete_gamma(3.0, x);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(upper_incomplete_gamma(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(upper_incomplete_gamma(1.0, -1.0), DomainError);
}

TEST_CASE("ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0));
  CHECK(ball_volume(4, 2.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2.0 * 16.0));
}
