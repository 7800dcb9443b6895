#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "capsat/sampling.hpp"

namespace capsat {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  /// Serialise as a coordinate list (compressed layers).
  bool sparse = false;
};

/// Dense feed-forward classifier: affine layers with `activation` after every
/// layer except the last, whose outputs are the logits.
class MlpModel {
 public:
  MlpModel(Activation activation, std::vector<DenseLayer> layers);

  /// He-style initialisation (N(0, 2/fan_in) weights, zero biases).
  static MlpModel random(std::span<const int> dims, Activation activation, std::uint64_t seed);

  Activation activation() const { return activation_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weight.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(layers_.back().weight.rows()); }
  std::size_t num_layers() const { return layers_.size(); }
  std::vector<int> dims() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Columns are inputs; returns logits column-wise.
  Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const;

  /// Applies layers [first, num_layers) to representations that are the
  /// (post-activation) outputs of layer first - 1.
  Eigen::MatrixXd forward_from(std::size_t first, const Eigen::Ref<const Eigen::MatrixXd>& zs) const;

  /// Applies the single layer `layer` (activation included unless it is the last).
  Eigen::MatrixXd apply_layer(std::size_t layer, const Eigen::Ref<const Eigen::MatrixXd>& a) const;

  /// Output of the first `count` layers, activation included for hidden layers.
  Eigen::VectorXd representation(std::size_t count, const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Dimension of the representation after `count` layers.
  std::size_t representation_dim(std::size_t count) const;

 private:
  void apply(std::size_t layer, Eigen::MatrixXd& a) const;

  Activation activation_;
  std::vector<DenseLayer> layers_;
};

/// Lowest index attaining the maximum.
std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// z_y - max_{j != y} z_j; nonpositive exactly on the error set E(y).
double label_gap(const Eigen::Ref<const Eigen::VectorXd>& logits, std::size_t y);

std::size_t predict(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// True iff the prediction differs from y or the maximum logit is tied.
bool in_error_set(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t y);

enum class Loss {
  cross_entropy,
  /// max_{j != y} z_j - z_y.
  margin,
};

/// Gradient of the loss with respect to the input, by backpropagation.
Eigen::VectorXd input_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                               std::size_t y, Loss loss = Loss::cross_entropy);

/// Loss value matching input_gradient.
double loss_value(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t y,
                  Loss loss = Loss::cross_entropy);

/// E(y) of a model, optionally relative to an intermediate layer: points are
/// representations after `first_layer` layers and membership is decided by
/// the remaining layers.
class ErrorSetOracle final : public MembershipOracle {
 public:
  ErrorSetOracle(const MlpModel& model, std::size_t label, std::size_t first_layer = 0);
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p) const override;
  void contains_batch(const Eigen::Ref<const Eigen::MatrixXd>& points,
                      std::span<std::uint8_t> out) const override;

 private:
  const MlpModel& model_;
  std::size_t label_;
  std::size_t first_layer_;
};

}  // namespace capsat
