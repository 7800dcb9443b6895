#include "capsat/capacitory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capsat/analytic_models.hpp"
#include "capsat/attacks.hpp"
#include "capsat/parallel.hpp"
#include "capsat/rng.hpp"

namespace capsat {

double tau(double psi, double mu, int n) {
  if (n < 3) throw DomainError("tau: dimension must be >= 3");
  if (!(mu > 0.0)) throw DomainError("tau: undefined for mu = 0");
  if (!(psi >= 0.0 && psi <= 1.0)) throw DomainError("tau: psi must lie in [0, 1]");
  return std::pow(psi, saturation_exponent(n)) / mu;
}

IsocapacitoryCheck isocapacitory_check(double mu, double psi, int n) {
  const double slack = isocap_constant(n) * std::pow(psi, saturation_exponent(n)) - mu;
  return {slack >= 0.0, slack};
}

void SweepConfig::validate() const {
  if (!(target_mu > 0.0 && target_mu < 1.0)) throw std::invalid_argument("sweep: target_mu must lie in (0, 1)");
  if (!(tolerance() > 0.0)) throw std::invalid_argument("sweep: mu tolerance must be > 0");
  if (num_paths == 0 || volume_samples == 0) throw std::invalid_argument("sweep: sample counts must be > 0");
  if (!(radius_lo > 0.0 && radius_hi > radius_lo))
    throw std::invalid_argument("sweep: radius bracket must satisfy 0 < lo < hi");
  if (!(pgd_budget_factor > 0.0)) throw std::invalid_argument("sweep: pgd budget factor must be > 0");
}

NonBracketingError::NonBracketingError(double rl, double rh, double ml, double mh)
    : std::runtime_error("radius search does not bracket the target: mu(" + std::to_string(rl) +
                         ") = " + std::to_string(ml) + ", mu(" + std::to_string(rh) +
                         ") = " + std::to_string(mh)),
      r_lo(rl), r_hi(rh), mu_lo(ml), mu_hi(mh) {}

RadiusSearchResult find_radius_for_mu(const MembershipOracle& oracle, const Point& x,
                                      const SweepConfig& config, std::uint64_t seed) {
  config.validate();
  const double target = config.target_mu;
  const double tol = config.tolerance();
  std::size_t probes = 0;
  auto probe = [&](double r) {
    return estimate_relative_volume(oracle, x, r, config.volume_samples, mix64(seed + ++probes));
  };
  double lo = config.radius_lo;
  double hi = config.radius_hi;
  HitEstimate mu_lo = probe(lo);
  HitEstimate mu_hi = probe(hi);
  for (std::size_t w = 0; w < config.max_widenings && mu_hi.psi < target; ++w) {
    lo = hi;
    mu_lo = mu_hi;
    hi *= 2.0;
    mu_hi = probe(hi);
  }
  for (std::size_t w = 0; w < config.max_widenings && mu_lo.psi > target; ++w) {
    hi = lo;
    mu_hi = mu_lo;
    lo *= 0.5;
    mu_lo = probe(lo);
  }
  if (mu_lo.psi > target || mu_hi.psi < target) throw NonBracketingError(lo, hi, mu_lo.psi, mu_hi.psi);
  if (std::abs(mu_lo.psi - target) <= tol) return {lo, mu_lo, probes};
  if (std::abs(mu_hi.psi - target) <= tol) return {hi, mu_hi, probes};
  while (probes < config.max_probes) {
    const double mid = std::sqrt(lo * hi);
    const HitEstimate mu = probe(mid);
    if (std::abs(mu.psi - target) <= tol) return {mid, mu, probes};
    if (mu.psi < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw std::runtime_error("radius search did not reach the mu tolerance within " +
                           std::to_string(config.max_probes) + " probes (bracket [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "])");
}

RadiusSearchResult find_radius_for_mu(const MlpModel& model, const Point& x, std::size_t y,
                                      const SweepConfig& config, std::uint64_t seed) {
  const ErrorSetOracle oracle(model, y);
  return find_radius_for_mu(oracle, x, config, seed);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double a = values[n / 2 - 1];
  const double b = values[n / 2];
  if (std::isinf(a) || std::isinf(b)) return b;
  return 0.5 * (a + b);
}

IsoperimetricResult isoperimetric_saturation(const MlpModel& model, const Point& x, std::size_t y,
                                             double r, double mu, const SweepConfig& config,
                                             std::uint64_t seed, unsigned threads) {
  if (!(r > 0.0)) throw DomainError("isoperimetric_saturation: r must be > 0");
  if (config.distance_samples == 0) throw std::invalid_argument("isoperimetric_saturation: need samples");
  const int n = static_cast<int>(model.input_dim());
  const PointCloud cloud = sample_gaussian_cloud(x, r, config.distance_samples, seed);
  AttackConfig attack;
  attack.epsilon = config.pgd_budget_factor * r;
  attack.steps = config.pgd_steps;
  attack.step_size = 2.5 * attack.epsilon / static_cast<double>(std::max<std::size_t>(1, config.pgd_steps));
  std::vector<double> distances(config.distance_samples);
  parallel_for(config.distance_samples, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto d = pgd_distance_to_boundary(model, cloud.col(static_cast<Eigen::Index>(i)), y, attack);
      distances[i] = d.l2;
    }
  });
  IsoperimetricResult out{};
  out.samples = distances.size();
  out.failures = static_cast<std::size_t>(std::count_if(distances.begin(), distances.end(),
                                                        [](double d) { return std::isinf(d); }));
  out.flagged = out.failures == out.samples;
  out.d_median = median(distances);
  if (mu > 0.0 && mu < 1.0) {
    out.rhs = gaussian_isoperimetric_rhs(mu, r, n);
    out.ratio = out.rhs == 0.0 ? 0.0 : out.d_median / out.rhs;
  } else if (mu >= 1.0) {
    out.rhs = 0.0;
    out.ratio = 0.0;
  } else {
    out.rhs = std::numeric_limits<double>::infinity();
  }
  return out;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return mix64(seed ^ mix64(0x5357454550ULL + index));
}

namespace {

SaturationRecord measure_point(const MlpModel& model, const Point& x, std::size_t y,
                               std::size_t index, const SweepConfig& config) {
  const std::uint64_t ps = point_seed(config.seed, index);
  const int n = static_cast<int>(model.input_dim());
  const ErrorSetOracle oracle(model, y);
  const RadiusSearchResult radius = find_radius_for_mu(oracle, x, config, mix64(ps + 1));
  const BrownianConfig bc(model.input_dim(), radius.radius, mix64(ps + 2), config.num_paths,
                          config.num_steps);
  const HitEstimate psi = estimate_hitting_probability(oracle, x, bc);
  const IsoperimetricResult iso =
      isoperimetric_saturation(model, x, y, radius.radius, radius.mu.psi, config, mix64(ps + 3));

  SaturationRecord rec;
  rec.point_index = index;
  rec.label = y;
  rec.r = radius.radius;
  rec.t = bc.time_horizon();
  rec.mu = radius.mu.psi;
  rec.mu_stderr = radius.mu.std_error;
  rec.psi = psi.psi;
  rec.psi_stderr = psi.std_error;
  if (n >= 3 && rec.mu > 0.0) rec.tau = tau(rec.psi, rec.mu, n);
  if (rec.mu > 0.0) rec.raw_ratio = rec.psi / rec.mu;
  rec.d_median = iso.d_median;
  rec.iso_rhs = iso.rhs;
  rec.iso_perimetric_saturation = iso.ratio;
  if (n >= 3 && rec.d_median < rec.r) rec.flat_tau_reference = flat_tau(n, rec.d_median, rec.r);
  rec.pgd_failures = iso.failures;
  rec.flagged = iso.flagged;
  return rec;
}

}  // namespace

SweepResult sweep(const MlpModel& model, const LabeledDataset& data, const SweepConfig& config,
                  unsigned threads) {
  config.validate();
  data.validate();
  if (data.size() > 0 && data.dim() != model.input_dim())
    throw std::invalid_argument("sweep: dataset dimension does not match the model");
  const std::size_t count = data.size();
  std::vector<std::optional<SaturationRecord>> records(count);
  std::vector<std::optional<std::string>> errors(count);
  std::vector<std::uint8_t> skipped(count, 0);
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Point x = data.points.col(static_cast<Eigen::Index>(i));
      const std::size_t y = data.labels[i];
      if (y >= model.num_classes() || in_error_set(model, x, y)) {
        skipped[i] = 1;
        continue;
      }
      try {
        records[i] = measure_point(model, x, y, i, config);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  });
  SweepResult result;
  for (std::size_t i = 0; i < count; ++i) {
    if (skipped[i]) ++result.skipped_misclassified;
    if (records[i]) result.records.push_back(std::move(*records[i]));
    if (errors[i]) result.failures.push_back({i, *errors[i]});
  }
  return result;
}

}  // namespace capsat
