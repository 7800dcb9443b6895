#include <doctest.h>

#include <cmath>
#include <array>
#include <random>

#include "capsat/compression.hpp"
#include "capsat/datasets.hpp"
#include "capsat/rng.hpp"

using namespace capsat;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(gen);
  return a;
}

// Logits (w0 . x + b0, w1 . x + b1); E(0) in logit space is the half-plane
// {z_0 <= z_1} at distance (z_0 - z_1) / sqrt 2 from z.
MlpModel linear_binary(const Eigen::Vector3d& w0, const Eigen::Vector3d& w1, double b0, double b1) {
  Eigen::MatrixXd w(2, 3);
  w.row(0) = w0.transpose();
  w.row(1) = w1.transpose();
  return MlpModel(Activation::relu, {DenseLayer{w, Eigen::Vector2d(b0, b1), false}});
}

// Discretely monitored (k = 400) half-plane hitting probability in R^2.
double psi_logit(double gap, double t) {
  const double step = std::sqrt(t) / 20.0;
  return 2.0 * phi(-(gap / std::sqrt(2.0) + 0.5826 * step) / std::sqrt(t));
}

Eigen::Vector3d uniform_ball3(std::mt19937_64& gen, double radius) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u;
  Eigen::Vector3d v(n(gen), n(gen), n(gen));
  return v.normalized() * radius * std::cbrt(u(gen));
}

// Logits (0, x_1 - d): E(0) = {x_1 >= d} in input space.
MlpModel halfspace_model(double d) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(1, 0) = 1.0;
  return MlpModel(Activation::relu, {DenseLayer{w, Eigen::Vector2d(0.0, -d), false}});
}

LabeledDataset origin_dataset() { return LabeledDataset{Eigen::MatrixXd::Zero(2, 1), {0}}; }

}  // namespace

TEST_CASE("keep probabilities") {
  Eigen::MatrixXd a(2, 2);
  a << 3, 0, 1, 0.5;
  const auto p = jl_keep_probabilities(a, 0.5, 0.5);
  const double fro2 = 9 + 1 + 0.25;
  CHECK(p(0, 0) == 1.0);
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 0) == doctest::Approx(std::min(1.0, 2.0 / (0.5 * 0.25 * fro2))));
  CHECK(p(1, 1) == doctest::Approx(2.0 * 0.25 / (0.5 * 0.25 * fro2)));
  CHECK(jl_keep_probabilities(Eigen::MatrixXd::Zero(3, 3), 0.5, 0.5).isZero());
  CHECK(jl_sparsify(Eigen::MatrixXd::Zero(3, 3), 0.5, 0.5, 1).isZero());
  CHECK_THROWS(jl_keep_probabilities(a, 0.0, 0.5));
  CHECK_THROWS(jl_keep_probabilities(a, 0.5, 1.0));
  // Tiny alpha keeps everything unchanged.
  CHECK(jl_sparsify(a, 1e-6, 0.5, 3) == a);
}

TEST_CASE("sparsifier is entrywise unbiased") {
  const Eigen::MatrixXd a = gaussian_matrix(6, 5, 11);
  const double alpha = 0.5, beta = 0.5;
  const int draws = 1000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(6, 5), sum2 = sum;
  for (int d = 0; d < draws; ++d) {
    const auto h = jl_sparsify(a, alpha, beta, 21, static_cast<std::uint64_t>(d));
    sum += h;
    sum2 += h.cwiseProduct(h);
  }
  const Eigen::MatrixXd mean = sum / draws;
  const Eigen::MatrixXd var = (sum2 / draws - mean.cwiseProduct(mean)) * draws / (draws - 1.0);
  const auto p = jl_keep_probabilities(a, alpha, beta);
  int within = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double se = std::sqrt(var.data()[i] / draws);
    if (p.data()[i] >= 1.0) {
      CHECK(mean.data()[i] == doctest::Approx(a.data()[i]).epsilon(1e-12));
      ++within;
    } else {
      within += std::abs(mean.data()[i] - a.data()[i]) <= 3.0 * se;
    }
  }
  // 3-sigma coverage is 99.73% per entry; allow one outlier among 30 entries.
  CHECK(within >= a.size() - 1);
}

TEST_CASE("sparsifier distortion variance and Chebyshev bound") {
  // E|(A^ - A) x|^2 = sum_ij a_ij^2 x_j^2 (1/p_ij - 1).
  const Eigen::MatrixXd a = gaussian_matrix(10, 50, 12);
  Eigen::VectorXd x = gaussian_matrix(50, 1, 13).col(0);
  x.normalize();
  const double alpha = 0.3, beta = 0.02;
  const auto p = jl_keep_probabilities(a, alpha, beta);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (p(i, j) > 0) expected += a(i, j) * a(i, j) * x[j] * x[j] * (1.0 / p(i, j) - 1.0);
  const int draws = 1000;
  double mean_sq = 0.0;
  int failures = 0;
  double nnz = 0;
  const double threshold = alpha * a.norm() * x.norm();
  for (int d = 0; d < draws; ++d) {
    const auto h = jl_sparsify(a, alpha, beta, 5, static_cast<std::uint64_t>(d));
    const double err = (h * x - a * x).norm();
    mean_sq += err * err / draws;
    failures += err >= threshold;
    nnz += static_cast<double>((h.array() != 0.0).count()) / draws;
  }
  CHECK(mean_sq == doctest::Approx(expected).epsilon(0.1));
  // Chebyshev with the row count: P(err >= threshold) <= rows * beta / 2.
  CHECK(expected <= a.rows() * beta / 2.0 * threshold * threshold);
  CHECK(static_cast<double>(failures) / draws <= a.rows() * beta / 2.0 + 0.02);
  CHECK(nnz == doctest::Approx(p.sum()).epsilon(0.1));
}

TEST_CASE("sparsifier draws are reproducible and independent across streams") {
  const Eigen::MatrixXd a = gaussian_matrix(8, 8, 1);
  CHECK(jl_sparsify(a, 0.4, 0.4, 9, 2) == jl_sparsify(a, 0.4, 0.4, 9, 2));
  CHECK(jl_sparsify(a, 0.4, 0.4, 9, 2) != jl_sparsify(a, 0.4, 0.4, 9, 3));
}

TEST_CASE("capacity sensitivity with zero noise is zero") {
  const auto m = linear_binary({1.0, -0.5, 0.2}, {0.3, 0.4, -0.1}, 0.0, 0.0);
  const Eigen::Vector3d x(0.6, -0.2, 0.3);
  const auto s = capacity_sensitivity(m, 0, x, 0, 0.25, NoiseSpec{0.0, 8}, 2000, 3);
  CHECK(s.s_max == 0.0);
  CHECK(s.s_mean == 0.0);
  CHECK(s.samples_eta == 8);
  CHECK_THROWS(capacity_sensitivity(m, 1, x, 0, 0.25, NoiseSpec{0.1, 8}, 100, 3));
  CHECK_THROWS(capacity_sensitivity(m, 0, x, 0, 0.0, NoiseSpec{0.1, 8}, 100, 3));
  CHECK_THROWS(capacity_sensitivity(m, 0, x, 0, 0.25, NoiseSpec{-0.1, 8}, 100, 3));
}

TEST_CASE("capacity sensitivity of a linear model matches the half-plane oracle") {
  const Eigen::Vector3d w0(1.0, -0.5, 0.2), w1(0.3, 0.4, -0.1);
  const auto m = linear_binary(w0, w1, 0.0, 0.0);
  const Eigen::Vector3d u(0.6, -0.2, 0.3);
  const double t = 0.25, eta0 = 0.3;
  const Eigen::Vector3d dw = w0 - w1;
  const double gap0 = dw.dot(u);
  const double psi0 = psi_logit(gap0, t);
  std::mt19937_64 gen(99);
  double oracle = 0.0;
  const int samples = 200000;
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector3d eta = uniform_ball3(gen, eta0);
    oracle += std::abs(psi_logit(dw.dot(u + u.norm() * eta), t) - psi0) / psi0 / samples;
  }
  const auto est = capacity_sensitivity(m, 0, u, 0, t, NoiseSpec{eta0, 24}, 8000, 17);
  MESSAGE("S estimate " << est.s_max << " +- " << est.std_error << ", oracle " << oracle);
  CHECK(std::abs(est.s_max - oracle) <= 3.0 * est.std_error + 0.01);
}

TEST_CASE("capacity sensitivity grows with the noise radius") {
  const auto m = linear_binary({1.0, -0.5, 0.2}, {0.3, 0.4, -0.1}, 0.0, 0.0);
  const Eigen::Vector3d u(0.6, -0.2, 0.3);
  double prev = -1.0;
  for (double eta0 : {0.05, 0.15, 0.45}) {
    const auto s = capacity_sensitivity(m, 0, u, 0, 0.25, NoiseSpec{eta0, 16}, 2000, 23);
    CHECK(s.s_max > prev);
    prev = s.s_max;
  }
}

TEST_CASE("sensitivity at an intermediate layer") {
  const std::array<int, 4> dims{3, 8, 6, 2};
  const auto m = MlpModel::random(dims, Activation::tanh, 4);
  const Eigen::Vector3d x(0.2, -0.4, 0.9);
  const std::size_t y = predict(m, x);
  for (std::size_t layer = 0; layer < m.num_layers(); ++layer) {
    const auto s0 = capacity_sensitivity(m, layer, x, y, 0.5, NoiseSpec{0.0, 4}, 500, 1);
    CHECK(s0.s_max == 0.0);
    const auto s = capacity_sensitivity(m, layer, x, y, 0.5, NoiseSpec{0.2, 4}, 500, 1);
    CHECK(s.s_max >= 0.0);
    CHECK(s.layer_index == layer);
  }
  CHECK(layer_relative_psi(m, 2, x, y, 0.5, 500, 1) >= 0.0);
}

TEST_CASE("undefined sensitivity when the baseline never hits") {
  const auto m = linear_binary({1.0, 0, 0}, {-1.0, 0, 0}, 0.0, 0.0);
  const Eigen::Vector3d far(50.0, 0, 0);
  CHECK_THROWS_AS(capacity_sensitivity(m, 0, far, 0, 0.01, NoiseSpec{0.1, 4}, 200, 1), UndefinedSensitivityError);
  CHECK_THROWS_AS(capacity_sensitivity_pathwise(m, 0, far, 0, 0.01, 0.1, 2, 10, 0.1, 1, 200),
                  UndefinedSensitivityError);
}

TEST_CASE("pathwise estimator arithmetic") {
  // Baseline psi is small but positive; with 0 noise the estimator is a mean of
  // |X - psi| / psi over indicators X, i.e. h (1 - psi)/psi + (N - h) over N.
  const Eigen::Vector3d w0(1.0, 0, 0), w1(-1.0, 0, 0);
  const auto m = linear_binary(w0, w1, 0.0, 0.0);
  const Eigen::Vector3d x(0.6, 0, 0);
  const double t = 0.09;
  const auto est = capacity_sensitivity_pathwise(m, 0, x, 0, t, 0.0, 5, 10, 0.1, 3, 20000);
  const double psi0 = estimate_hitting_probability(ErrorSetOracle(m, 0, 1), m.forward(x),
                                                   BrownianConfig::for_time(2, t, 3, 20000)).psi;
  REQUIRE(psi0 > 0.0);
  REQUIRE(psi0 < 0.05);
  const double h = (est.s_max - 1.0) * 50.0 / ((1.0 - psi0) / psi0 - 1.0);
  CHECK(std::abs(h - std::round(h)) < 1e-6);
  CHECK(h >= -1e-9);
  if (std::round(h) == 0.0) CHECK(est.s_max == 1.0);
  CHECK(est.hoeffding_bound.value() == doctest::Approx(std::exp(-2.0 * 0.01 * 50)));
  CHECK(est.samples_eta == 5);
  CHECK(est.samples_paths == 10);
}

TEST_CASE("pathwise estimator matches its indicator expectation") {
  // E |X - psi| / psi with X ~ Bernoulli(psi') is (psi' (1 - psi) + (1 - psi') psi) / psi.
  const Eigen::Vector3d w0(1.0, -0.5, 0.2), w1(0.3, 0.4, -0.1);
  const auto m = linear_binary(w0, w1, 0.0, 0.0);
  const Eigen::Vector3d u(0.6, -0.2, 0.3);
  const double t = 0.25, eta0 = 0.3;
  const Eigen::Vector3d dw = w0 - w1;
  const double psi0 = psi_logit(dw.dot(u), t);
  std::mt19937_64 gen(7);
  double oracle = 0.0;
  const int samples = 200000;
  for (int i = 0; i < samples; ++i) {
    const double p = psi_logit(dw.dot(u + u.norm() * uniform_ball3(gen, eta0)), t);
    oracle += (p * (1 - psi0) + (1 - p) * psi0) / psi0 / samples;
  }
  const auto est = capacity_sensitivity_pathwise(m, 0, u, 0, t, eta0, 200, 100, 0.05, 31, 40000);
  MESSAGE("pathwise " << est.s_max << " +- " << est.std_error << ", oracle " << oracle);
  // The baseline psi is itself estimated from 40000 paths.
  const double psi_se = std::sqrt(psi0 * (1 - psi0) / 40000);
  CHECK(std::abs(est.s_max - oracle) <= 3.0 * est.std_error + 4.0 * psi_se / psi0);
  // It is not the capacity sensitivity: with zero noise it is 2 (1 - psi), not 0.
  const auto zero = capacity_sensitivity_pathwise(m, 0, u, 0, t, 0.0, 50, 200, 0.05, 31, 40000);
  CHECK(zero.s_max == doctest::Approx(2.0 * (1.0 - psi0)).epsilon(0.05));
}

TEST_CASE("aggregation") {
  SensitivityEstimate a, b;
  a.layer_index = b.layer_index = 1;
  a.s_point = {0.1, 0.3};
  b.s_point = {0.2};
  a.std_error = 0.01;
  b.std_error = 0.02;
  const auto agg = aggregate_sensitivity({a, b});
  CHECK(agg.s_max == 0.3);
  CHECK(agg.s_mean == doctest::Approx(0.2));
  CHECK(agg.std_error == 0.02);
  CHECK(agg.s_point.size() == 3);
  b.layer_index = 0;
  CHECK_THROWS(aggregate_sensitivity({a, b}));
  CHECK_THROWS(aggregate_sensitivity({}));
}

TEST_CASE("eta compression check") {
  const std::array<int, 3> dims{2, 12, 2};
  const auto f = MlpModel::random(dims, Activation::relu, 3);
  const auto data = generate_circle_dataset(CircleDatasetConfig{1.0, 6, 6, 0.1}, 2);
  const std::vector<double> grid{0.5, 1.0};
  const auto same = eta_compression_check(f, f, data, grid, 500, 1);
  CHECK(same.max_dev == 0.0);
  CHECK(same.is_eta_compression(1e-12));

  // Single-time grid: one entry of the two-time grid.
  const auto g = [&] {
    auto c = f;
    c.layers()[0].weight = jl_sparsify(c.layers()[0].weight, 0.5, 0.5, 7);
    return c;
  }();
  const auto one = eta_compression_check(f, g, data, {0.5}, 500, 1);
  const auto two = eta_compression_check(f, g, data, grid, 500, 1);
  REQUIRE(one.witness);
  CHECK(one.witness->gamma == 0.5);
  CHECK(two.max_dev >= one.max_dev);
  CHECK(two.max_dev == doctest::Approx(std::abs(two.witness->psi_f - two.witness->psi_g)));
  CHECK(eta_compression_check(f, g, data, grid, 500, 1, 3).max_dev == two.max_dev);

  // Smaller alpha keeps more entries and deviates less.
  double prev = -1.0;
  for (double alpha : {0.05, 0.3, 0.9}) {
    auto c = f;
    c.layers()[0].weight = jl_sparsify(c.layers()[0].weight, alpha, 0.5, 7);
    const double dev = eta_compression_check(f, c, data, grid, 2000, 1).max_dev;
    CHECK(dev >= prev);
    prev = dev;
  }
  CHECK_THROWS(eta_compression_check(f, g, data, {}, 10, 1));
  CHECK_THROWS(eta_compression_check(f, g, data, {-1.0}, 10, 1));
}

TEST_CASE("runtime compression check") {
  const auto f = halfspace_model(0.5);
  const auto data = origin_dataset();
  CHECK(eta_runtime_compression_check(f, f, data, {0.5}, 0.0, 4000, 1).holds);
  CHECK(eta_runtime_compression_check(f, f, data, {0.5, 1.0}, 0.1, 4000, 1).holds);
  // g at d' = 1.05 d: psi_f(t) <= psi_g(t + eta) iff d / sqrt t >= d' / sqrt(t + eta), i.e. eta >= 0.1025 t.
  const auto g = halfspace_model(0.525);
  const double t = 0.25;
  CHECK(eta_runtime_compression_check(f, g, data, {0.5}, 0.2 * t, 20000, 1).holds);
  const auto bad = eta_runtime_compression_check(f, g, data, {0.5}, 0.01 * t, 20000, 1);
  CHECK(!bad.holds);
  REQUIRE(bad.witness);
  CHECK(bad.witness->label == 0);
  CHECK(bad.witness->psi_f > bad.witness->psi_g_late);
  CHECK_THROWS(eta_runtime_compression_check(f, f, data, {0.1}, 0.5, 100, 1));
}

TEST_CASE("network compression") {
  const std::array<int, 4> dims{2, 40, 40, 2};
  const auto m = MlpModel::random(dims, Activation::relu, 5);
  const auto data = generate_circle_dataset(CircleDatasetConfig{1.0, 4, 4, 0.1}, 3);
  CompressionParams keep;
  keep.alpha_beta = {{1e-6, 0.5}, {1e-6, 0.5}, {1e-6, 0.5}};
  CompressionOptions opts{300, 0, 100};
  const auto same = compress_network(m, keep, data, 0.25, opts);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(same.compressed.layers()[j].weight == m.layers()[j].weight);
    CHECK(same.compressed.layers()[j].sparse);
    CHECK(same.layers[j].rho == 0.0);
    CHECK(same.layers[j].tau == 0.5);
  }
  CHECK(same.prob_floor == doctest::Approx(0.125));

  CompressionParams cut;
  cut.alpha_beta = {{0.5, 0.3}, {0.3, 0.3}, {0.5, 0.3}};
  cut.seed = 4;
  const auto rep = compress_network(m, cut, data, 0.25, CompressionOptions{300, 4, 200});
  REQUIRE(rep.layers.size() == 3);
  double floor = 1.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& l = rep.layers[j];
    CHECK(l.dense_size == static_cast<std::size_t>(m.layers()[j].weight.size()));
    CHECK(l.tau == doctest::Approx(0.7 - l.s_max));
    floor *= std::max(0.0, l.tau);
  }
  CHECK(rep.prob_floor == doctest::Approx(floor));
  // The 40 x 40 layer keeps about sum p_ij entries.
  CHECK(static_cast<double>(rep.layers[1].nnz) == doctest::Approx(rep.layers[1].expected_nnz).epsilon(0.1));
  CHECK(rep.layers[1].nnz < rep.layers[1].dense_size);

  CompressionParams wrong = cut;
  wrong.alpha_beta.pop_back();
  CHECK_THROWS(compress_network(m, wrong, data, 0.25));
  wrong = cut;
  wrong.gamma_grid = {1.0, 0.5};
  CHECK_THROWS(compress_network(m, wrong, data, 0.25));
}
