#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace capsat {

using Point = Eigen::VectorXd;
/// Column-major point cloud: one point per column.
using PointCloud = Eigen::MatrixXd;

/// Predicate x -> (x in E). Implementations must be pure.
class MembershipOracle {
 public:
  virtual ~MembershipOracle() = default;
  virtual bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const = 0;
  /// Evaluates every column of `points`; out[i] = 1 iff column i is in E.
  /// The default loops over contains(); batched backends override it.
  virtual void contains_batch(const Eigen::Ref<const Eigen::MatrixXd>& points,
                              std::span<std::uint8_t> out) const;
};

/// Adapts a callable to MembershipOracle.
class PredicateOracle final : public MembershipOracle {
 public:
  using Fn = std::function<bool(const Eigen::Ref<const Eigen::VectorXd>&)>;
  explicit PredicateOracle(Fn fn) : fn_(std::move(fn)) {}
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const override { return fn_(p); }

 private:
  Fn fn_;
};

/// Discretised Brownian motion coupled to a ball radius r via r = sqrt(n t).
/// The step size s = r / sqrt(n k) and horizon t = k s^2 = r^2 / n are derived,
/// never stored.
class BrownianConfig {
 public:
  static constexpr std::size_t kDefaultPaths = 10000;
  static constexpr std::size_t kDefaultSteps = 400;

  BrownianConfig(std::size_t dim, double radius, std::uint64_t seed,
                 std::size_t num_paths = kDefaultPaths, std::size_t num_steps = kDefaultSteps);

  /// Config whose horizon is `time` (radius = sqrt(dim * time)).
  static BrownianConfig for_time(std::size_t dim, double time, std::uint64_t seed,
                                 std::size_t num_paths = kDefaultPaths,
                                 std::size_t num_steps = kDefaultSteps);

  std::size_t dim() const { return dim_; }
  std::size_t num_paths() const { return num_paths_; }
  std::size_t num_steps() const { return num_steps_; }
  double radius() const { return radius_; }
  std::uint64_t seed() const { return seed_; }

  double step_size() const;
  double time_horizon() const;

  BrownianConfig with_radius(double radius) const;
  BrownianConfig with_seed(std::uint64_t seed) const;
  BrownianConfig with_paths(std::size_t num_paths) const;

 private:
  std::size_t dim_;
  double radius_;
  std::uint64_t seed_;
  std::size_t num_paths_;
  std::size_t num_steps_;
};

/// Binomial proportion estimate.
struct HitEstimate {
  double psi = 0.0;
  double std_error = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;

  static HitEstimate from_counts(std::uint64_t hits, std::uint64_t trials);
};

/// Path `path_index` of the configured family, as a dim x (k+1) matrix whose
/// first column is the origin. Increment j is a function of (seed, path_index, j).
Eigen::MatrixXd sample_brownian_path(const BrownianConfig& config, std::size_t path_index);

/// Fills `out` (dim) with the increment of step `step` (1-based) of a path.
void brownian_increment(const BrownianConfig& config, std::size_t path_index, std::size_t step,
                        Eigen::Ref<Eigen::VectorXd> out);

/// First discrete step (0..k) at which the path started at `start` lies in E.
struct PathHit {
  std::size_t step;
  Point point;
};
std::optional<PathHit> first_hit(const MembershipOracle& oracle, const Point& start,
                                 const BrownianConfig& config, std::size_t path_index);

/// Fraction of paths with at least one of the k+1 discrete positions in E.
HitEstimate estimate_hitting_probability(const MembershipOracle& oracle, const Point& start,
                                         const BrownianConfig& config, unsigned threads = 1);

/// Per-path hit indicators (size num_paths), same path family as above.
std::vector<std::uint8_t> hitting_indicators(const MembershipOracle& oracle, const Point& start,
                                             const BrownianConfig& config, unsigned threads = 1);

/// Uniform samples in the closed ball B(center, r): Gaussian direction times
/// r * U^(1/n). Sample i depends only on (seed, i).
PointCloud sample_uniform_ball(const Point& center, double r, std::size_t count, std::uint64_t seed);

/// Isotropic N(center, (r / sqrt(n))^2 I) samples.
PointCloud sample_gaussian_cloud(const Point& center, double r, std::size_t count,
                                 std::uint64_t seed);

/// Monte-Carlo relative volume |E cap B(center, r)| / |B(center, r)|.
HitEstimate estimate_relative_volume(const MembershipOracle& oracle, const Point& center, double r,
                                     std::size_t count, std::uint64_t seed, unsigned threads = 1);

}  // namespace capsat
