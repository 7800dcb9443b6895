#include <doctest.h>

#include <array>
#include <cmath>

#include "capsat/datasets.hpp"
#include "capsat/model_io.hpp"
#include "capsat/training.hpp"

using namespace capsat;

namespace {

double mean_loss(const MlpModel& m, const LabeledDataset& d) {
  double s = 0;
  for (std::size_t i = 0; i < d.size(); ++i) s += loss_value(m, d.points.col(static_cast<Eigen::Index>(i)), d.labels[i]);
  return s / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("augmentation names and config validation") {
  for (auto a : {Augmentation::none, Augmentation::gaussian, Augmentation::fgsm, Augmentation::brownian})
    CHECK(augmentation_from_string(to_string(a)) == a);
  CHECK_THROWS(augmentation_from_string("mixup"));
  TrainConfig c;
  CHECK(c.learning_rate == 1e-5);
  CHECK(c.batch_size == 128);
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.beta2 = 1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("zero epochs leave the model unchanged") {
  const std::array<int, 3> dims{2, 5, 2};
  const auto m = MlpModel::random(dims, Activation::relu, 1);
  TrainConfig c;
  c.epochs = 0;
  const auto r = train_adam(m, generate_blobs(2, 20, 3.0, 1), c);
  CHECK(model_to_json(r.model) == model_to_json(m));
  CHECK(r.loss_trace.empty());
}

TEST_CASE("input validation") {
  const std::array<int, 3> dims{2, 5, 2};
  const auto m = MlpModel::random(dims, Activation::relu, 1);
  CHECK_THROWS(train_adam(m, LabeledDataset{Eigen::MatrixXd(2, 0), {}}, TrainConfig{}));
  CHECK_THROWS(train_adam(m, generate_blobs(3, 10, 3.0, 1), TrainConfig{}));
  auto bad = generate_blobs(2, 10, 3.0, 1);
  bad.labels[0] = 2;
  CHECK_THROWS(train_adam(m, bad, TrainConfig{}));
}

TEST_CASE("first full-batch ADAM step moves each parameter by lr against the gradient sign") {
  const std::array<int, 3> dims{2, 4, 2};
  const auto m = MlpModel::random(dims, Activation::tanh, 3);
  const auto data = generate_blobs(2, 16, 1.0, 5);
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 16;
  c.learning_rate = 1e-3;
  const auto r = train_adam(m, data, c);
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < m.layers()[l].weight.size(); ++i) {
      auto mp = m, mm = m;
      mp.layers()[l].weight.data()[i] += h;
      mm.layers()[l].weight.data()[i] -= h;
      const double g = (mean_loss(mp, data) - mean_loss(mm, data)) / (2 * h);
      if (std::abs(g) < 1e-5) continue;
      const double delta = r.model.layers()[l].weight.data()[i] - m.layers()[l].weight.data()[i];
      CHECK(delta == doctest::Approx(g > 0 ? -1e-3 : 1e-3).epsilon(1e-3));
      ++checked;
    }
  }
  CHECK(checked > 10);
  CHECK(r.loss_trace.size() == 1);
  CHECK(r.loss_trace[0] == doctest::Approx(mean_loss(m, data)).epsilon(1e-12));
}

TEST_CASE("separable blobs reach full training accuracy within 200 epochs") {
  const std::array<int, 3> dims{2, 8, 2};
  const auto data = generate_blobs(2, 200, 8.0, 6);
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.epochs = 200;
  c.batch_size = 32;
  c.seed = 2;
  const auto r = train_adam(MlpModel::random(dims, Activation::relu, 4), data, c);
  CHECK(accuracy(r.model, data) == 1.0);
  CHECK(r.loss_trace.size() == 200);
  CHECK(r.loss_trace.back() < r.loss_trace.front());
}

TEST_CASE("training is bit-for-bit deterministic for every augmentation") {
  const std::array<int, 3> dims{2, 6, 2};
  const auto data = generate_circle_dataset(CircleDatasetConfig{5.0, 60, 6, 0.1}, 1);
  for (auto aug : {Augmentation::none, Augmentation::gaussian, Augmentation::fgsm, Augmentation::brownian}) {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.epochs = 3;
    c.batch_size = 16;
    c.seed = 9;
    c.augmentation = aug;
    c.brownian_steps = 50;
    const auto init = MlpModel::random(dims, Activation::relu, 8);
    const auto a = train_adam(init, data, c);
    const auto b = train_adam(init, data, c);
    CHECK(model_to_json(a.model) == model_to_json(b.model));
    CHECK(a.loss_trace == b.loss_trace);
    c.seed = 10;
    CHECK(model_to_json(train_adam(init, data, c).model) != model_to_json(a.model));
  }
}

TEST_CASE("accuracy") {
  Eigen::MatrixXd w(2, 1);
  w << 1, -1;
  const MlpModel m(Activation::relu, {DenseLayer{w, Eigen::Vector2d::Zero(), false}});
  LabeledDataset d{Eigen::RowVector3d(1, -1, 2), {0, 0, 0}};
  CHECK(accuracy(m, d) == doctest::Approx(2.0 / 3.0));
}
