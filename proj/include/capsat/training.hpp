#pragma once

#include <cstdint>
#include <vector>

#include "capsat/datasets.hpp"
#include "capsat/mlp.hpp"

namespace capsat {

enum class Augmentation {
  none,
  /// One copy per sample with N(0, noise_variance) added per coordinate.
  gaussian,
  /// One FGSM copy per sample (epsilon = fgsm_epsilon) against the current model.
  fgsm,
  /// The first Brownian path point in the error set, when a path finds one.
  brownian,
};

std::string to_string(Augmentation a);
Augmentation augmentation_from_string(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 128;
  std::size_t epochs = 10;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  Augmentation augmentation = Augmentation::none;
  double noise_variance = 0.4;
  double fgsm_epsilon = 0.1;
  /// Brownian augmentation: ball radius and step count of the attacking path.
  double brownian_radius = 0.5;
  std::size_t brownian_steps = 400;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  /// Mean cross-entropy over the samples seen in each epoch.
  std::vector<double> loss_trace;
};

/// Mini-batch ADAM on the mean cross-entropy. Deterministic given the seed:
/// the shuffle, augmentation noise and Brownian paths are all keyed by
/// (seed, epoch, sample index).
TrainResult train_adam(const MlpModel& initial, const LabeledDataset& data, const TrainConfig& config);

/// Fraction of points whose prediction equals the label.
double accuracy(const MlpModel& model, const LabeledDataset& data);

}  // namespace capsat
