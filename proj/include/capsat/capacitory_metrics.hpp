#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "capsat/datasets.hpp"
#include "capsat/mlp.hpp"
#include "capsat/sampling.hpp"

namespace capsat {

/// psi^(n/(n-2)) / mu. Throws DomainError for n < 3 or mu <= 0.
double tau(double psi, double mu, int n);

struct IsocapacitoryCheck {
  bool holds;
  /// c_n psi^(n/(n-2)) - mu.
  double slack;
};
IsocapacitoryCheck isocapacitory_check(double mu, double psi, int n);

struct SweepConfig {
  double target_mu = 0.01;
  /// Absolute tolerance on mu at the returned radius; defaults to target_mu / 10.
  std::optional<double> mu_tolerance;
  std::size_t num_paths = BrownianConfig::kDefaultPaths;
  std::size_t num_steps = BrownianConfig::kDefaultSteps;
  std::size_t volume_samples = 10000;
  std::size_t distance_samples = 1000;
  std::size_t pgd_steps = 400;
  /// PGD budget epsilon = pgd_budget_factor * r; step = 2.5 epsilon / pgd_steps.
  double pgd_budget_factor = 2.0;
  double radius_lo = 0.01;
  double radius_hi = 10.0;
  std::size_t max_widenings = 10;
  std::size_t max_probes = 60;
  std::uint64_t seed = 0;

  double tolerance() const { return mu_tolerance.value_or(0.1 * target_mu); }
  void validate() const;
};

/// Raised when mu stays below the target at the (widened) upper radius or
/// above it at the (shrunk) lower radius.
class NonBracketingError : public std::runtime_error {
 public:
  NonBracketingError(double r_lo, double r_hi, double mu_lo, double mu_hi);
  double r_lo, r_hi, mu_lo, mu_hi;
};

struct RadiusSearchResult {
  double radius;
  HitEstimate mu;
  std::size_t probes;
};

/// Bisection (in log r) on fresh Monte-Carlo estimates of mu(x, r) until
/// |mu - target| <= tolerance.
RadiusSearchResult find_radius_for_mu(const MembershipOracle& oracle, const Point& x,
                                      const SweepConfig& config, std::uint64_t seed);
RadiusSearchResult find_radius_for_mu(const MlpModel& model, const Point& x, std::size_t y,
                                      const SweepConfig& config, std::uint64_t seed);

struct IsoperimetricResult {
  double d_median;
  double rhs;
  /// d_median / rhs; 0 when mu >= 1/2. Absent when mu = 0.
  std::optional<double> ratio;
  std::size_t samples;
  std::size_t failures;
  /// Every PGD run failed to reach the boundary.
  bool flagged;
};

/// Median PGD boundary distance from distance_samples points drawn from
/// N(x, r^2/n I) (points already in E count as 0), compared with the Gaussian
/// isoperimetric bound -r Phi^{-1}(mu) / sqrt(n).
IsoperimetricResult isoperimetric_saturation(const MlpModel& model, const Point& x, std::size_t y,
                                             double r, double mu, const SweepConfig& config,
                                             std::uint64_t seed, unsigned threads = 1);

struct SaturationRecord {
  std::size_t point_index = 0;
  std::size_t label = 0;
  double r = 0.0;
  double t = 0.0;
  double mu = 0.0;
  double mu_stderr = 0.0;
  double psi = 0.0;
  double psi_stderr = 0.0;
  std::optional<double> tau;
  std::optional<double> raw_ratio;
  double d_median = 0.0;
  double iso_rhs = 0.0;
  std::optional<double> iso_perimetric_saturation;
  std::optional<double> flat_tau_reference;
  std::size_t pgd_failures = 0;
  bool flagged = false;
};

struct SweepFailure {
  std::size_t point_index;
  std::string message;
};

struct SweepResult {
  std::vector<SaturationRecord> records;
  std::size_t skipped_misclassified = 0;
  std::vector<SweepFailure> failures;
};

/// Per correctly classified point: radius search for target_mu, psi of E(y)
/// at that radius, isoperimetric saturation. Points are processed in parallel;
/// results are ordered by point index and independent of `threads`.
SweepResult sweep(const MlpModel& model, const LabeledDataset& data, const SweepConfig& config,
                  unsigned threads = 1);

/// Per-point seed used by sweep().
std::uint64_t point_seed(std::uint64_t seed, std::size_t index);

/// Median of a sample (mean of the two middle order statistics for even sizes).
double median(std::vector<double> values);

}  // namespace capsat
