#include "capsat/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "capsat/parallel.hpp"
#include "capsat/rng.hpp"

namespace capsat {

namespace {

constexpr std::size_t kPathBatch = 256;
constexpr std::size_t kSampleBatch = 1024;

// Sample i of the uniform-ball family keyed by `key`.
void ball_sample(std::uint64_t key, const Point& center, double r, std::size_t i,
                 Eigen::Ref<Eigen::VectorXd> out) {
  const auto n = center.size();
  CounterStream stream(key, i);
  for (Eigen::Index j = 0; j < n; ++j) out[j] = stream.normal();
  const double norm = out.norm();
  const double radial = r * std::pow(stream.uniform(), 1.0 / static_cast<double>(n));
  if (norm > 0.0 && r > 0.0) {
    out = center + (radial / norm) * out;
  } else {
    out = center;
  }
}

void require_dim(const Point& p, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(p.size()) != dim)
    throw std::invalid_argument(std::string(what) + ": point dimension does not match config");
}

}  // namespace

void MembershipOracle::contains_batch(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                      std::span<std::uint8_t> out) const {
  for (Eigen::Index i = 0; i < points.cols(); ++i) out[i] = contains(points.col(i)) ? 1 : 0;
}

BrownianConfig::BrownianConfig(std::size_t dim, double radius, std::uint64_t seed,
                               std::size_t num_paths, std::size_t num_steps)
    : dim_(dim), radius_(radius), seed_(seed), num_paths_(num_paths), num_steps_(num_steps) {
  if (dim == 0) throw std::invalid_argument("BrownianConfig: dim must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("BrownianConfig: radius must be positive and finite");
  if (num_paths == 0) throw std::invalid_argument("BrownianConfig: num_paths must be positive");
}

BrownianConfig BrownianConfig::for_time(std::size_t dim, double time, std::uint64_t seed,
                                        std::size_t num_paths, std::size_t num_steps) {
  if (!(time > 0.0)) throw std::invalid_argument("BrownianConfig: time must be positive");
  return BrownianConfig(dim, std::sqrt(static_cast<double>(dim) * time), seed, num_paths,
                        num_steps);
}

double BrownianConfig::step_size() const {
  if (num_steps_ == 0) return 0.0;
  return radius_ / std::sqrt(static_cast<double>(dim_) * static_cast<double>(num_steps_));
}

double BrownianConfig::time_horizon() const {
  return radius_ * radius_ / static_cast<double>(dim_);
}

BrownianConfig BrownianConfig::with_radius(double radius) const {
  return BrownianConfig(dim_, radius, seed_, num_paths_, num_steps_);
}

BrownianConfig BrownianConfig::with_seed(std::uint64_t seed) const {
  return BrownianConfig(dim_, radius_, seed, num_paths_, num_steps_);
}

BrownianConfig BrownianConfig::with_paths(std::size_t num_paths) const {
  return BrownianConfig(dim_, radius_, seed_, num_paths, num_steps_);
}

HitEstimate HitEstimate::from_counts(std::uint64_t hits, std::uint64_t trials) {
  HitEstimate e;
  e.hits = hits;
  e.trials = trials;
  if (trials == 0) return e;
  e.psi = static_cast<double>(hits) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.psi * (1.0 - e.psi) / static_cast<double>(trials));
  return e;
}

void brownian_increment(const BrownianConfig& config, std::size_t path_index, std::size_t step,
                        Eigen::Ref<Eigen::VectorXd> out) {
  CounterStream stream(derive_key(config.seed(), domain::brownian), path_index, step);
  const double s = config.step_size();
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = s * stream.normal();
}

Eigen::MatrixXd sample_brownian_path(const BrownianConfig& config, std::size_t path_index) {
  if (path_index >= config.num_paths())
    throw std::out_of_range("sample_brownian_path: path_index out of range");
  const auto n = static_cast<Eigen::Index>(config.dim());
  const auto k = static_cast<Eigen::Index>(config.num_steps());
  Eigen::MatrixXd path = Eigen::MatrixXd::Zero(n, k + 1);
  Eigen::VectorXd inc(n);
  for (Eigen::Index j = 1; j <= k; ++j) {
    brownian_increment(config, path_index, static_cast<std::size_t>(j), inc);
    path.col(j) = path.col(j - 1) + inc;
  }
  return path;
}

std::optional<PathHit> first_hit(const MembershipOracle& oracle, const Point& start,
                                 const BrownianConfig& config, std::size_t path_index) {
  require_dim(start, config.dim(), "first_hit");
  Point x = start;
  if (oracle.contains(x)) return PathHit{0, x};
  Eigen::VectorXd inc(start.size());
  for (std::size_t j = 1; j <= config.num_steps(); ++j) {
    brownian_increment(config, path_index, j, inc);
    x += inc;
    if (oracle.contains(x)) return PathHit{j, x};
  }
  return std::nullopt;
}

namespace {

// Runs paths [begin, end) in batches, stopping each path at its first hit.
void run_paths(const MembershipOracle& oracle, const Point& start, const BrownianConfig& config,
               std::size_t begin, std::size_t end, std::vector<std::uint8_t>& hit) {
  const auto n = static_cast<Eigen::Index>(config.dim());
  const std::uint64_t key = derive_key(config.seed(), domain::brownian);
  const double s = config.step_size();
  Eigen::MatrixXd pos;
  Eigen::MatrixXd active_pos;
  std::vector<std::size_t> active;
  std::vector<std::uint8_t> flags;
  for (std::size_t b0 = begin; b0 < end; b0 += kPathBatch) {
    const std::size_t b1 = std::min(end, b0 + kPathBatch);
    const auto width = static_cast<Eigen::Index>(b1 - b0);
    pos = start.replicate(1, width);
    active.clear();
    for (std::size_t p = b0; p < b1; ++p) active.push_back(p);
    for (std::size_t step = 1; step <= config.num_steps() && !active.empty(); ++step) {
      active_pos.resize(n, static_cast<Eigen::Index>(active.size()));
      for (std::size_t a = 0; a < active.size(); ++a) {
        const std::size_t p = active[a];
        CounterStream stream(key, p, step);
        auto col = pos.col(static_cast<Eigen::Index>(p - b0));
        for (Eigen::Index i = 0; i < n; ++i) col[i] += s * stream.normal();
        active_pos.col(static_cast<Eigen::Index>(a)) = col;
      }
      flags.assign(active.size(), 0);
      oracle.contains_batch(active_pos, flags);
      std::size_t keep = 0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (flags[a]) {
          hit[active[a]] = 1;
        } else {
          active[keep++] = active[a];
        }
      }
      active.resize(keep);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> hitting_indicators(const MembershipOracle& oracle, const Point& start,
                                             const BrownianConfig& config, unsigned threads) {
  require_dim(start, config.dim(), "hitting_indicators");
  std::vector<std::uint8_t> hit(config.num_paths(), 0);
  if (oracle.contains(start)) {
    std::fill(hit.begin(), hit.end(), 1);
    return hit;
  }
  parallel_for(config.num_paths(), threads, [&](std::size_t begin, std::size_t end) {
    run_paths(oracle, start, config, begin, end, hit);
  });
  return hit;
}

HitEstimate estimate_hitting_probability(const MembershipOracle& oracle, const Point& start,
                                         const BrownianConfig& config, unsigned threads) {
  const auto hit = hitting_indicators(oracle, start, config, threads);
  std::uint64_t hits = 0;
  for (auto h : hit) hits += h;
  return HitEstimate::from_counts(hits, hit.size());
}

PointCloud sample_uniform_ball(const Point& center, double r, std::size_t count,
                               std::uint64_t seed) {
  if (!(r >= 0.0)) throw std::invalid_argument("sample_uniform_ball: r must be >= 0");
  const auto n = center.size();
  const std::uint64_t key = derive_key(seed, domain::ball);
  PointCloud out(n, static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) ball_sample(key, center, r, i, out.col(static_cast<Eigen::Index>(i)));
  return out;
}

PointCloud sample_gaussian_cloud(const Point& center, double r, std::size_t count,
                                 std::uint64_t seed) {
  if (!(r > 0.0)) throw std::invalid_argument("sample_gaussian_cloud: r must be > 0");
  const auto n = center.size();
  const double sigma = r / std::sqrt(static_cast<double>(n));
  const std::uint64_t key = derive_key(seed, domain::gauss);
  PointCloud out(n, static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    CounterStream stream(key, i);
    auto col = out.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 0; j < n; ++j) col[j] = center[j] + sigma * stream.normal();
  }
  return out;
}

HitEstimate estimate_relative_volume(const MembershipOracle& oracle, const Point& center, double r,
                                     std::size_t count, std::uint64_t seed, unsigned threads) {
  if (!(r > 0.0)) throw std::invalid_argument("estimate_relative_volume: r must be > 0");
  std::vector<std::uint8_t> in(count, 0);
  const std::uint64_t key = derive_key(seed, domain::ball);
  parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b0 = begin; b0 < end; b0 += kSampleBatch) {
      const std::size_t b1 = std::min(end, b0 + kSampleBatch);
      // Sample i depends only on (seed, i), so slices match sample_uniform_ball.
      PointCloud pts(center.size(), static_cast<Eigen::Index>(b1 - b0));
      for (std::size_t i = b0; i < b1; ++i)
        ball_sample(key, center, r, i, pts.col(static_cast<Eigen::Index>(i - b0)));
      oracle.contains_batch(pts, std::span<std::uint8_t>(in.data() + b0, b1 - b0));
    }
  });
  std::uint64_t hits = 0;
  for (auto v : in) hits += v;
  return HitEstimate::from_counts(hits, count);
}

}  // namespace capsat
