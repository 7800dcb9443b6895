#include "capsat/attacks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace capsat {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("attack: epsilon must be >= 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("attack: step size must be > 0");
}

Eigen::VectorXd fgsm_attack(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                            std::size_t y, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("fgsm: epsilon must be >= 0");
  const Eigen::VectorXd g = input_gradient(model, x, y, Loss::cross_entropy);
  return x + epsilon * g.array().sign().matrix();
}

Eigen::VectorXd pgd_attack(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           std::size_t y, const AttackConfig& config) {
  config.validate();
  Eigen::VectorXd adv = x;
  for (std::size_t s = 0; s < config.steps; ++s) {
    const Eigen::VectorXd g = input_gradient(model, adv, y, Loss::cross_entropy);
    adv += config.step_size * g.array().sign().matrix();
    adv = x + (adv - x).cwiseMax(-config.epsilon).cwiseMin(config.epsilon);
  }
  return adv;
}

BoundaryDistance pgd_distance_to_boundary(const MlpModel& model,
                                          const Eigen::Ref<const Eigen::VectorXd>& x,
                                          std::size_t y, const AttackConfig& config) {
  config.validate();
  BoundaryDistance result;
  const auto gap = [&](const Eigen::VectorXd& p) { return label_gap(model.forward(p), y); };
  const Eigen::VectorXd x0 = x;
  if (!(gap(x0) > 0.0)) {
    result.found = true;
    result.point = x0;
    return result;
  }
  Eigen::VectorXd outside = x0;
  Eigen::VectorXd current = x0;
  for (std::size_t s = 1; s <= config.steps; ++s) {
    const Eigen::VectorXd g = input_gradient(model, current, y, Loss::margin);
    const double norm = g.norm();
    if (!(norm > 0.0)) break;
    current += (config.step_size / norm) * g;
    const Eigen::VectorXd delta = current - x0;
    const double dn = delta.norm();
    if (dn > config.epsilon) current = x0 + delta * (config.epsilon / dn);
    if (gap(current) > 0.0) {
      outside = current;
      continue;
    }
    Eigen::VectorXd inside = current;
    for (int it = 0; it < 200; ++it) {
      const double gi = gap(inside);
      if (gi > -1e-6 || (inside - outside).norm() < 1e-14) break;
      const Eigen::VectorXd mid = 0.5 * (inside + outside);
      if (gap(mid) > 0.0) {
        outside = mid;
      } else {
        inside = mid;
      }
    }
    result.found = true;
    result.point = inside;
    result.l2 = (inside - x0).norm();
    result.linf = (inside - x0).cwiseAbs().maxCoeff();
    result.steps_used = s;
    return result;
  }
  result.l2 = std::numeric_limits<double>::infinity();
  result.linf = std::numeric_limits<double>::infinity();
  result.steps_used = config.steps;
  return result;
}

std::optional<PathHit> brownian_attack(const MlpModel& model, const Point& x, std::size_t y,
                                       const BrownianConfig& config, std::size_t path_index) {
  if (config.dim() != model.input_dim())
    throw std::invalid_argument("brownian_attack: config dimension does not match model");
  const ErrorSetOracle oracle(model, y);
  return first_hit(oracle, x, config, path_index);
}

}  // namespace capsat
