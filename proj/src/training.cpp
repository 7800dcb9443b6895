#include "capsat/training.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "capsat/attacks.hpp"
#include "capsat/rng.hpp"

namespace capsat {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::none: return "none";
    case Augmentation::gaussian: return "gaussian";
    case Augmentation::fgsm: return "fgsm";
    case Augmentation::brownian: return "brownian";
  }
  return "none";
}

Augmentation augmentation_from_string(const std::string& name) {
  if (name == "none") return Augmentation::none;
  if (name == "gaussian") return Augmentation::gaussian;
  if (name == "fgsm") return Augmentation::fgsm;
  if (name == "brownian") return Augmentation::brownian;
  throw std::invalid_argument("unknown augmentation '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("train: batch size must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train: weight decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("train: ADAM betas must lie in [0, 1)");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("train: noise variance must be >= 0");
  if (!(fgsm_epsilon >= 0.0)) throw std::invalid_argument("train: fgsm epsilon must be >= 0");
  if (!(brownian_radius > 0.0)) throw std::invalid_argument("train: brownian radius must be > 0");
}

namespace {

struct Moments {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
};

// Mean cross-entropy of a batch and its parameter gradients.
double batch_gradient(const MlpModel& model, const Eigen::MatrixXd& xs,
                      const std::vector<std::size_t>& ys, std::vector<Eigen::MatrixXd>& gw,
                      std::vector<Eigen::VectorXd>& gb) {
  const auto& layers = model.layers();
  const std::size_t depth = layers.size();
  std::vector<Eigen::MatrixXd> acts(depth + 1);
  std::vector<Eigen::MatrixXd> pre(depth);
  acts[0] = xs;
  for (std::size_t i = 0; i < depth; ++i) {
    pre[i] = layers[i].weight * acts[i];
    pre[i].colwise() += layers[i].bias;
    if (i + 1 < depth) {
      acts[i + 1] = model.activation() == Activation::relu ? pre[i].cwiseMax(0.0).eval()
                                                           : pre[i].array().tanh().matrix().eval();
    } else {
      acts[i + 1] = pre[i];
    }
  }
  const Eigen::Index batch = xs.cols();
  Eigen::MatrixXd delta(acts[depth].rows(), batch);
  double loss = 0.0;
  for (Eigen::Index c = 0; c < batch; ++c) {
    const auto z = acts[depth].col(c);
    const double m = z.maxCoeff();
    const Eigen::VectorXd e = (z.array() - m).exp().matrix();
    const double sum = e.sum();
    const auto y = static_cast<Eigen::Index>(ys[static_cast<std::size_t>(c)]);
    loss += m + std::log(sum) - z[y];
    delta.col(c) = e / sum;
    delta(y, c) -= 1.0;
  }
  delta /= static_cast<double>(batch);
  for (std::size_t i = depth; i-- > 0;) {
    if (i + 1 < depth) {
      if (model.activation() == Activation::relu) {
        delta = delta.cwiseProduct((pre[i].array() > 0.0).cast<double>().matrix());
      } else {
        delta = delta.cwiseProduct((1.0 - pre[i].array().tanh().square()).matrix());
      }
    }
    gw[i] = delta * acts[i].transpose();
    gb[i] = delta.rowwise().sum();
    if (i > 0) delta = layers[i].weight.transpose() * delta;
  }
  return loss / static_cast<double>(batch);
}

LabeledDataset augment(const MlpModel& model, const LabeledDataset& data, const TrainConfig& config,
                       std::size_t epoch) {
  if (config.augmentation == Augmentation::none) return data;
  const std::uint64_t key = derive_key(config.seed, domain::noise);
  std::vector<Eigen::VectorXd> extra;
  std::vector<std::size_t> extra_labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.points.col(static_cast<Eigen::Index>(i));
    const std::size_t y = data.labels[i];
    switch (config.augmentation) {
      case Augmentation::gaussian: {
        CounterStream stream(key, epoch, i);
        Eigen::VectorXd noisy = x;
        const double sigma = std::sqrt(config.noise_variance);
        for (Eigen::Index j = 0; j < noisy.size(); ++j) noisy[j] += sigma * stream.normal();
        extra.push_back(std::move(noisy));
        extra_labels.push_back(y);
        break;
      }
      case Augmentation::fgsm:
        extra.push_back(fgsm_attack(model, x, y, config.fgsm_epsilon));
        extra_labels.push_back(y);
        break;
      case Augmentation::brownian: {
        const BrownianConfig bc(data.dim(), config.brownian_radius, mix64(config.seed ^ mix64(epoch + 1)),
                                data.size(), config.brownian_steps);
        if (auto hit = brownian_attack(model, x, y, bc, i)) {
          extra.push_back(std::move(hit->point));
          extra_labels.push_back(y);
        }
        break;
      }
      case Augmentation::none: break;
    }
  }
  LabeledDataset out;
  out.points.resize(data.points.rows(), data.points.cols() + static_cast<Eigen::Index>(extra.size()));
  out.points.leftCols(data.points.cols()) = data.points;
  for (std::size_t i = 0; i < extra.size(); ++i)
    out.points.col(data.points.cols() + static_cast<Eigen::Index>(i)) = extra[i];
  out.labels = data.labels;
  out.labels.insert(out.labels.end(), extra_labels.begin(), extra_labels.end());
  return out;
}

}  // namespace

TrainResult train_adam(const MlpModel& initial, const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("train: dataset is empty");
  if (data.dim() != initial.input_dim())
    throw std::invalid_argument("train: dataset dimension does not match the model");
  for (std::size_t y : data.labels)
    if (y >= initial.num_classes()) throw std::invalid_argument("train: label out of range");

  MlpModel model = initial;
  auto& layers = model.layers();
  const std::size_t depth = layers.size();
  Moments mom;
  for (const auto& l : layers) {
    mom.mw.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    mom.vw.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    mom.mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    mom.vb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  std::vector<Eigen::MatrixXd> gw(depth);
  std::vector<Eigen::VectorXd> gb(depth);
  const std::uint64_t shuffle_key = derive_key(config.seed, domain::shuffle);
  std::uint64_t step = 0;
  TrainResult result{model, {}};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const LabeledDataset epoch_data = augment(model, data, config, epoch);
    const std::size_t count = epoch_data.size();
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterStream shuffle(shuffle_key, epoch);
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < count; begin += config.batch_size) {
      const std::size_t end = std::min(count, begin + config.batch_size);
      Eigen::MatrixXd xs(epoch_data.points.rows(), static_cast<Eigen::Index>(end - begin));
      std::vector<std::size_t> ys(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        xs.col(static_cast<Eigen::Index>(k - begin)) = epoch_data.points.col(static_cast<Eigen::Index>(order[k]));
        ys[k - begin] = epoch_data.labels[order[k]];
      }
      epoch_loss += batch_gradient(model, xs, ys, gw, gb) * static_cast<double>(end - begin);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < depth; ++i) {
        if (config.weight_decay > 0.0) gw[i] += config.weight_decay * layers[i].weight;
        mom.mw[i] = config.beta1 * mom.mw[i] + (1.0 - config.beta1) * gw[i];
        mom.vw[i] = config.beta2 * mom.vw[i] + (1.0 - config.beta2) * gw[i].cwiseAbs2();
        mom.mb[i] = config.beta1 * mom.mb[i] + (1.0 - config.beta1) * gb[i];
        mom.vb[i] = config.beta2 * mom.vb[i] + (1.0 - config.beta2) * gb[i].cwiseAbs2();
        layers[i].weight.array() -= config.learning_rate * (mom.mw[i].array() / c1) /
                                    ((mom.vw[i].array() / c2).sqrt() + config.adam_epsilon);
        layers[i].bias.array() -= config.learning_rate * (mom.mb[i].array() / c1) /
                                  ((mom.vb[i].array() / c2).sqrt() + config.adam_epsilon);
      }
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(count));
  }
  result.model = std::move(model);
  return result;
}

double accuracy(const MlpModel& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  const Eigen::MatrixXd logits = model.forward_batch(data.points);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (argmax_lowest(logits.col(static_cast<Eigen::Index>(i))) == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace capsat
