#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "capsat/sampling.hpp"

namespace capsat {

struct LabeledDataset {
  PointCloud points;  // one point per column
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(points.rows()); }
  /// Throws std::invalid_argument on a length mismatch or non-finite coordinate.
  void validate() const;
  LabeledDataset subset(std::size_t begin, std::size_t end) const;
};

struct CircleDatasetConfig {
  double radius = 5.0;
  std::size_t count = 1250;
  /// Number of rays; consecutive rays alternate between class 0 and class 1.
  std::size_t rays = 50;
  /// Points on a ray sit at distance radius * (1 + u), u uniform in [-jitter, jitter].
  double radial_jitter = 0.1;
};

/// Planar two-class set alternating along a circle: point i lies on ray
/// i mod rays at angle 2 pi ray / rays and carries label ray mod 2.
LabeledDataset generate_circle_dataset(const CircleDatasetConfig& config, std::uint64_t seed);

/// Two isotropic unit-variance Gaussian blobs centred at -/+ separation/2 e_1.
LabeledDataset generate_blobs(std::size_t dim, std::size_t count, double separation,
                              std::uint64_t seed);

/// CSV with one row per point: x_1, ..., x_n, label. No header.
LabeledDataset load_dataset_csv(const std::filesystem::path& path);
void save_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);

}  // namespace capsat
