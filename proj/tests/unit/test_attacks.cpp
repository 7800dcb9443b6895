#include <doctest.h>

#include <array>
#include <cmath>

#include "capsat/attacks.hpp"
#include "capsat/datasets.hpp"
#include "capsat/rng.hpp"
#include "capsat/training.hpp"

using namespace capsat;

namespace {

// Binary linear model with logits (w0 . x + b0, w1 . x + b1).
MlpModel linear_binary(const Eigen::VectorXd& w0, const Eigen::VectorXd& w1, double b0, double b1) {
  Eigen::MatrixXd w(2, w0.size());
  w.row(0) = w0.transpose();
  w.row(1) = w1.transpose();
  return MlpModel(Activation::relu, {DenseLayer{w, Eigen::Vector2d(b0, b1), false}});
}

const MlpModel& planar_model() {
  static const MlpModel model = [] {
    const auto data = generate_circle_dataset(CircleDatasetConfig{5.0, 400, 8, 0.1}, 3);
    const std::array<int, 4> dims{2, 24, 24, 2};
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.epochs = 150;
    cfg.batch_size = 64;
    cfg.seed = 4;
    return train_adam(MlpModel::random(dims, Activation::relu, 2), data, cfg).model;
  }();
  return model;
}

}  // namespace

TEST_CASE("config validation") {
  AttackConfig c;
  CHECK_NOTHROW(c.validate());
  c.step_size = 0.0;
  CHECK_THROWS(c.validate());
  c = AttackConfig{};
  c.epsilon = -1.0;
  CHECK_THROWS(c.validate());
  CHECK_THROWS(fgsm_attack(linear_binary(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 0, 0),
                           Eigen::Vector2d(1, 0), 0, -0.1));
}

TEST_CASE("fgsm basics") {
  const Eigen::Vector3d w0(1.0, -2.0, 0.0), w1(-0.5, 1.0, 0.0);
  const auto m = linear_binary(w0, w1, 0.2, -0.1);
  const Eigen::Vector3d x(0.3, -0.4, 1.0);
  CHECK(fgsm_attack(m, x, 0, 0.0) == x);
  const Eigen::VectorXd adv = fgsm_attack(m, x, 0, 0.25);
  const Eigen::VectorXd g = input_gradient(m, x, 0);
  for (int i = 0; i < 3; ++i) {
    if (g[i] == 0.0) {
      CHECK(adv[i] == x[i]);
    } else {
      CHECK(adv[i] - x[i] == doctest::Approx(0.25 * (g[i] > 0 ? 1 : -1)));
    }
  }
  // The third coordinate has zero weights, so its gradient vanishes.
  CHECK(adv[2] == x[2]);
  CHECK((adv - x).cwiseAbs().maxCoeff() == doctest::Approx(0.25));
}

TEST_CASE("fgsm flips a linear model exactly past margin / l1 norm") {
  const Eigen::Vector3d w0(1.0, -2.0, 0.5), w1(-0.5, 1.0, 0.25);
  const auto m = linear_binary(w0, w1, 0.2, -0.1);
  const Eigen::Vector3d x(0.8, -0.4, 1.0);
  const double gap = (w0 - w1).dot(x) + 0.3;
  REQUIRE(gap > 0);
  const double threshold = gap / (w0 - w1).lpNorm<1>();
  CHECK(!in_error_set(m, fgsm_attack(m, x, 0, 0.99 * threshold), 0));
  CHECK(in_error_set(m, fgsm_attack(m, x, 0, 1.01 * threshold), 0));
}

TEST_CASE("pgd stays inside the box at every iterate") {
  const auto& m = planar_model();
  AttackConfig c{0.3, 0.05, 0, 1};
  const Eigen::Vector2d x(5.0, 0.2);
  CHECK(pgd_attack(m, x, 0, c) == x);
  for (std::size_t steps = 1; steps <= 30; ++steps) {
    c.steps = steps;
    const Eigen::VectorXd adv = pgd_attack(m, x, 1, c);
    CHECK((adv - x).cwiseAbs().maxCoeff() <= 0.3 + 1e-15);
  }
}

TEST_CASE("pgd succeeds at least as often as fgsm") {
  const auto& m = planar_model();
  const auto data = generate_circle_dataset(CircleDatasetConfig{5.0, 200, 8, 0.1}, 77);
  const AttackConfig c{1.5, 0.05, 60, 0};
  int fgsm_success = 0, pgd_success = 0, correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.points.col(static_cast<Eigen::Index>(i));
    const std::size_t y = data.labels[i];
    if (in_error_set(m, x, y)) continue;
    ++correct;
    fgsm_success += in_error_set(m, fgsm_attack(m, x, y, c.epsilon), y);
    pgd_success += in_error_set(m, pgd_attack(m, x, y, c), y);
  }
  MESSAGE("correct " << correct << " fgsm " << fgsm_success << " pgd " << pgd_success);
  CHECK(correct > 150);
  CHECK(pgd_success >= fgsm_success);
  CHECK(pgd_success > 0);
}

TEST_CASE("boundary distance of a linear model is the hyperplane distance") {
  CounterStream s(derive_key(3, 0), 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd w0(4), w1(4), x(4);
    for (int i = 0; i < 4; ++i) {
      w0[i] = s.normal();
      w1[i] = s.normal();
      x[i] = s.normal();
    }
    const double b0 = s.normal(), b1 = s.normal();
    const auto m = linear_binary(w0, w1, b0, b1);
    const std::size_t y = predict(m, x);
    const Eigen::VectorXd n = y == 0 ? Eigen::VectorXd(w0 - w1) : Eigen::VectorXd(w1 - w0);
    const double gap = std::abs((w0 - w1).dot(x) + b0 - b1);
    const double exact = gap / n.norm();
    const AttackConfig c{exact * 2 + 1, (exact * 2 + 1) / 400, 400, 0};
    const auto d = pgd_distance_to_boundary(m, x, y, c);
    REQUIRE(d.found);
    CHECK(d.l2 == doctest::Approx(exact).epsilon(0.01));
    CHECK(in_error_set(m, d.point, y));
    CHECK(std::abs(label_gap(m.forward(d.point), y)) <= 1e-6);
    CHECK(d.linf <= d.l2 + 1e-15);
    // Too small a budget: no crossing.
    const auto none = pgd_distance_to_boundary(m, x, y, AttackConfig{0.5 * exact, exact / 100, 400, 0});
    CHECK(!none.found);
    CHECK(std::isinf(none.l2));
  }
}

TEST_CASE("boundary distance is zero inside the error set") {
  const auto m = linear_binary(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 0, 0);
  const auto d = pgd_distance_to_boundary(m, Eigen::Vector2d(0, 1), 0, AttackConfig{});
  CHECK(d.found);
  CHECK(d.l2 == 0.0);
  CHECK(d.steps_used == 0);
  // A tie counts as inside.
  CHECK(pgd_distance_to_boundary(m, Eigen::Vector2d(1, 1), 0, AttackConfig{}).l2 == 0.0);
}

TEST_CASE("boundary distance does not grow with the budget") {
  const auto& m = planar_model();
  const auto data = generate_circle_dataset(CircleDatasetConfig{5.0, 40, 8, 0.1}, 9);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.points.col(static_cast<Eigen::Index>(i));
    const std::size_t y = data.labels[i];
    if (in_error_set(m, x, y)) continue;
    double prev = INFINITY;
    for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const auto d = pgd_distance_to_boundary(m, x, y, AttackConfig{eps, 0.01, 400, 0});
      CHECK(d.l2 <= prev * (1 + 1e-9));
      if (d.found) CHECK(d.l2 <= eps + 1e-12);
      prev = d.l2;
    }
  }
}

TEST_CASE("brownian attack") {
  const auto m = linear_binary(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0), 0, 0);
  // x in E(0): returned at step 0.
  const BrownianConfig c(2, 0.5, 5, 100, 400);
  const auto at = brownian_attack(m, Eigen::Vector2d(-0.1, 0), 0, c);
  REQUIRE(at);
  CHECK(at->step == 0);
  CHECK_THROWS(brownian_attack(m, Eigen::Vector2d(0.1, 0), 0, BrownianConfig(3, 0.5, 5)));

  // Boundary through x: nearly every path crosses.
  const Eigen::Vector2d x(1e-9, 0);
  int success = 0;
  for (std::size_t p = 0; p < 100; ++p) {
    const auto hit = brownian_attack(m, x, 0, c, p);
    if (!hit) continue;
    ++success;
    CHECK(in_error_set(m, hit->point, 0));
  }
  CHECK(success >= 90);
}

TEST_CASE("brownian hits straddle the decision boundary") {
  const auto& m = planar_model();
  const auto data = generate_circle_dataset(CircleDatasetConfig{5.0, 30, 8, 0.1}, 11);
  const BrownianConfig c(2, 1.5, 21, 20, 400);
  int checked = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.points.col(static_cast<Eigen::Index>(i));
    const std::size_t y = data.labels[i];
    if (in_error_set(m, x, y)) continue;
    for (std::size_t p = 0; p < c.num_paths(); ++p) {
      const auto hit = brownian_attack(m, x, y, c, p);
      if (!hit) continue;
      REQUIRE(in_error_set(m, hit->point, y));
      // Bisection on the segment finds a point with |gap| <= 1e-6.
      Eigen::VectorXd lo = x, hi = hit->point;
      for (int it = 0; it < 200 && std::abs(label_gap(m.forward(hi), y)) > 1e-6; ++it) {
        const Eigen::VectorXd mid = 0.5 * (lo + hi);
        (label_gap(m.forward(mid), y) > 0 ? lo : hi) = mid;
      }
      CHECK(std::abs(label_gap(m.forward(hi), y)) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 0);
}
