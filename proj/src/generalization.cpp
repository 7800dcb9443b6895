#include "capsat/generalization.hpp"

#include <cmath>
#include <stdexcept>

namespace capsat {

void GenBoundInputs::validate() const {
  if (!(empirical_hit_prob >= 0.0 && empirical_hit_prob <= 1.0))
    throw std::invalid_argument("bound: empirical hit probability must lie in [0, 1]");
  if (!(eta >= 0.0)) throw std::invalid_argument("bound: eta must be >= 0");
  if (!(q > 0.0) || !(m > 0.0)) throw std::invalid_argument("bound: q and m must be positive");
  if (!(r_levels >= 1.0)) throw std::invalid_argument("bound: r_levels must be >= 1");
  if (!(slack_constant >= 0.0)) throw std::invalid_argument("bound: slack constant must be >= 0");
}

GenBound generalization_bound(const GenBoundInputs& in) {
  in.validate();
  const double qlogr = in.q * std::log(in.r_levels);
  return {in.empirical_hit_prob + in.eta + in.slack_constant * std::sqrt(qlogr / in.m),
          -std::expm1(-qlogr)};
}

double hoeffding_tail(double deviation, std::uint64_t m) {
  return std::exp(-2.0 * static_cast<double>(m) * deviation * deviation);
}

std::uint64_t hoeffding_sample_size(double deviation, double delta) {
  if (!(deviation > 0.0 && deviation < 1.0)) throw std::invalid_argument("hoeffding: deviation must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("hoeffding: delta must lie in (0, 1)");
  auto m = static_cast<std::uint64_t>(std::ceil(std::log(1.0 / delta) / (2.0 * deviation * deviation)));
  while (m > 1 && hoeffding_tail(deviation, m - 1) <= delta) --m;
  while (hoeffding_tail(deviation, m) > delta) ++m;
  return m;
}

double pathwise_hoeffding_bound(double tau, std::uint64_t m, std::uint64_t k) {
  if (!(tau >= 0.0)) throw std::invalid_argument("pathwise_hoeffding_bound: tau must be >= 0");
  return std::exp(-2.0 * tau * tau * static_cast<double>(m) * static_cast<double>(k));
}

}  // namespace capsat
