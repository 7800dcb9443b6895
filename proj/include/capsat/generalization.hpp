#pragma once

#include <cstdint>

namespace capsat {

struct GenBoundInputs {
  double empirical_hit_prob = 0.0;
  double eta = 0.0;
  double q = 1.0;
  double r_levels = 2.0;
  double m = 1.0;
  double slack_constant = 1.0;

  void validate() const;
};

struct GenBound {
  /// empirical_hit_prob + eta + slack_constant sqrt(q ln(r_levels) / m).
  double value;
  /// 1 - e^(-q ln r_levels).
  double confidence;
};

GenBound generalization_bound(const GenBoundInputs& in);

/// Smallest m with e^(-2 m deviation^2) <= delta.
std::uint64_t hoeffding_sample_size(double deviation, double delta);

/// e^(-2 m deviation^2).
double hoeffding_tail(double deviation, std::uint64_t m);

/// e^(-2 tau^2 m k), the deviation bound of the pathwise sensitivity estimator.
double pathwise_hoeffding_bound(double tau, std::uint64_t m, std::uint64_t k);

}  // namespace capsat
