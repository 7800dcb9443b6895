#include "capsat/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "capsat/rng.hpp"

namespace capsat {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

MlpModel::MlpModel(Activation activation, std::vector<DenseLayer> layers)
    : activation_(activation), layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("MlpModel: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      throw std::invalid_argument("MlpModel: empty weight matrix in layer " + std::to_string(i));
    if (l.bias.size() != l.weight.rows())
      throw std::invalid_argument("MlpModel: bias size mismatch in layer " + std::to_string(i));
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
      throw std::invalid_argument("MlpModel: layer " + std::to_string(i) +
                                  " input does not chain with previous output");
  }
  if (num_classes() < 2) throw std::invalid_argument("MlpModel: need at least 2 classes");
}

MlpModel MlpModel::random(std::span<const int> dims, Activation activation, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("MlpModel::random: need input and output dims");
  const std::uint64_t key = derive_key(seed, domain::init);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i + 1] <= 0)
      throw std::invalid_argument("MlpModel::random: dims must be positive");
    DenseLayer l;
    l.weight.resize(dims[i + 1], dims[i]);
    l.bias = Eigen::VectorXd::Zero(dims[i + 1]);
    CounterStream stream(key, i);
    const double scale = std::sqrt(2.0 / dims[i]);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = scale * stream.normal();
    layers.push_back(std::move(l));
  }
  return MlpModel(activation, std::move(layers));
}

std::vector<int> MlpModel::dims() const {
  std::vector<int> d{static_cast<int>(layers_.front().weight.cols())};
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weight.rows()));
  return d;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers_) count += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return count;
}

void MlpModel::apply(std::size_t layer, Eigen::MatrixXd& a) const {
  const auto& l = layers_[layer];
  Eigen::MatrixXd z = l.weight * a;
  z.colwise() += l.bias;
  if (layer + 1 < layers_.size()) {
    if (activation_ == Activation::relu) {
      z = z.cwiseMax(0.0);
    } else {
      z = z.array().tanh().matrix();
    }
  }
  a = std::move(z);
}

Eigen::MatrixXd MlpModel::forward_from(std::size_t first,
                                       const Eigen::Ref<const Eigen::MatrixXd>& zs) const {
  if (first > layers_.size()) throw std::out_of_range("forward_from: layer index out of range");
  if (static_cast<std::size_t>(zs.rows()) != representation_dim(first))
    throw std::invalid_argument("forward_from: input dimension mismatch");
  Eigen::MatrixXd a = zs;
  for (std::size_t i = first; i < layers_.size(); ++i) apply(i, a);
  return a;
}

Eigen::MatrixXd MlpModel::apply_layer(std::size_t layer,
                                      const Eigen::Ref<const Eigen::MatrixXd>& a) const {
  if (layer >= layers_.size()) throw std::out_of_range("apply_layer: layer index out of range");
  if (a.rows() != layers_[layer].weight.cols())
    throw std::invalid_argument("apply_layer: input dimension mismatch");
  Eigen::MatrixXd out = a;
  apply(layer, out);
  return out;
}

Eigen::MatrixXd MlpModel::forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& xs) const {
  return forward_from(0, xs);
}

Eigen::VectorXd MlpModel::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw std::invalid_argument("forward: input dimension " + std::to_string(x.size()) +
                                " does not match model input " + std::to_string(input_dim()));
  return forward_from(0, x);
}

Eigen::VectorXd MlpModel::representation(std::size_t count,
                                         const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (count > layers_.size()) throw std::out_of_range("representation: layer index out of range");
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw std::invalid_argument("representation: input dimension mismatch");
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < count; ++i) apply(i, a);
  return a.col(0);
}

std::size_t MlpModel::representation_dim(std::size_t count) const {
  if (count == 0) return input_dim();
  return static_cast<std::size_t>(layers_.at(count - 1).weight.rows());
}

std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

double label_gap(const Eigen::Ref<const Eigen::VectorXd>& logits, std::size_t y) {
  const auto yi = static_cast<Eigen::Index>(y);
  double other = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (i != yi) other = std::max(other, logits[i]);
  return logits[yi] - other;
}

std::size_t predict(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return argmax_lowest(model.forward(x));
}

bool in_error_set(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t y) {
  if (y >= model.num_classes()) throw std::out_of_range("in_error_set: label out of range");
  return !(label_gap(model.forward(x), y) > 0.0);
}

namespace {

// d loss / d logits.
Eigen::VectorXd logit_gradient(const Eigen::VectorXd& z, std::size_t y, Loss loss) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  const auto yi = static_cast<Eigen::Index>(y);
  if (loss == Loss::cross_entropy) {
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp().matrix();
    g = e / e.sum();
    g[yi] -= 1.0;
  } else {
    Eigen::Index other = -1;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (i != yi && (other < 0 || z[i] > z[other])) other = i;
    g[other] = 1.0;
    g[yi] = -1.0;
  }
  return g;
}

}  // namespace

double loss_value(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t y,
                  Loss loss) {
  const Eigen::VectorXd z = model.forward(x);
  if (loss == Loss::margin) return -label_gap(z, y);
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum()) - z[static_cast<Eigen::Index>(y)];
}

Eigen::VectorXd input_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                               std::size_t y, Loss loss) {
  if (static_cast<std::size_t>(x.size()) != model.input_dim())
    throw std::invalid_argument("input_gradient: input dimension mismatch");
  if (y >= model.num_classes()) throw std::out_of_range("input_gradient: label out of range");
  const auto& layers = model.layers();
  std::vector<Eigen::VectorXd> pre(layers.size());
  Eigen::VectorXd a = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    pre[i] = layers[i].weight * a + layers[i].bias;
    if (i + 1 < layers.size()) {
      a = model.activation() == Activation::relu ? pre[i].cwiseMax(0.0).eval()
                                                 : pre[i].array().tanh().matrix().eval();
    } else {
      a = pre[i];
    }
  }
  Eigen::VectorXd delta = logit_gradient(a, y, loss);
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (i + 1 < layers.size()) {
      if (model.activation() == Activation::relu) {
        delta = delta.cwiseProduct((pre[i].array() > 0.0).cast<double>().matrix());
      } else {
        delta = delta.cwiseProduct((1.0 - pre[i].array().tanh().square()).matrix());
      }
    }
    delta = layers[i].weight.transpose() * delta;
  }
  return delta;
}

ErrorSetOracle::ErrorSetOracle(const MlpModel& model, std::size_t label, std::size_t first_layer)
    : model_(model), label_(label), first_layer_(first_layer) {
  if (label >= model.num_classes()) throw std::out_of_range("ErrorSetOracle: label out of range");
  if (first_layer > model.num_layers())
    throw std::out_of_range("ErrorSetOracle: layer index out of range");
}

bool ErrorSetOracle::contains(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  const Eigen::MatrixXd z = model_.forward_from(first_layer_, p);
  return !(label_gap(z.col(0), label_) > 0.0);
}

void ErrorSetOracle::contains_batch(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                    std::span<std::uint8_t> out) const {
  const Eigen::MatrixXd z = model_.forward_from(first_layer_, points);
  for (Eigen::Index i = 0; i < z.cols(); ++i) out[i] = label_gap(z.col(i), label_) > 0.0 ? 0 : 1;
}

}  // namespace capsat
