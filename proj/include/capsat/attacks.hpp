#pragma once

#include <cstdint>
#include <optional>

#include "capsat/mlp.hpp"
#include "capsat/sampling.hpp"

namespace capsat {

struct AttackConfig {
  double epsilon = 0.1;
  double step_size = 0.01;
  std::size_t steps = 400;
  std::uint64_t seed = 0;

  void validate() const;
};

/// x + epsilon sign(grad loss). Zero gradient components stay unperturbed.
Eigen::VectorXd fgsm_attack(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                            std::size_t y, double epsilon);

/// Iterated signed-gradient ascent, projected back onto the L-infinity ball of
/// radius epsilon around x after every step.
Eigen::VectorXd pgd_attack(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           std::size_t y, const AttackConfig& config);

struct BoundaryDistance {
  bool found = false;
  /// L2 distance from x to the refined boundary point (+inf when not found).
  double l2 = 0.0;
  double linf = 0.0;
  Eigen::VectorXd point;
  std::size_t steps_used = 0;
};

/// Searches for the nearest boundary crossing along normalised margin-gradient
/// steps projected to the L2 ball of radius epsilon, then bisects between the
/// last iterate outside E(y) and the first inside until the logit gap is below
/// 1e-6. The boundary point returned lies in E(y).
BoundaryDistance pgd_distance_to_boundary(const MlpModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& x,
                                          std::size_t y, const AttackConfig& config);

/// First discrete point of Brownian path `path_index` that lies in E(y).
std::optional<PathHit> brownian_attack(const MlpModel& model, const Point& x, std::size_t y,
                                       const BrownianConfig& config, std::size_t path_index = 0);

}  // namespace capsat
