#include "capsat/compression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capsat/parallel.hpp"
#include "capsat/rng.hpp"
#include "capsat/sampling.hpp"

namespace capsat {

Eigen::MatrixXd jl_keep_probabilities(const Eigen::MatrixXd& a, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("jl_sparsify: alpha and beta must lie in (0, 1)");
  const double fro2 = a.squaredNorm();
  if (fro2 == 0.0) return Eigen::MatrixXd::Zero(a.rows(), a.cols());
  const double scale = 2.0 / (beta * alpha * alpha * fro2);
  return (scale * a.array().square()).min(1.0).matrix();
}

Eigen::MatrixXd jl_sparsify(const Eigen::MatrixXd& a, double alpha, double beta, std::uint64_t seed,
                            std::uint64_t stream) {
  const Eigen::MatrixXd p = jl_keep_probabilities(a, alpha, beta);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  CounterStream rng(derive_key(seed, domain::sparsify), stream);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double u = rng.uniform();
      if (p(i, j) > 0.0 && u < p(i, j)) out(i, j) = a(i, j) / p(i, j);
    }
  return out;
}

namespace {

double psi_at(const MembershipOracle& oracle, const Point& start, double time, std::size_t paths,
              std::uint64_t seed, double* std_error = nullptr) {
  if (time <= 0.0) {
    if (std_error) *std_error = 0.0;
    return oracle.contains(start) ? 1.0 : 0.0;
  }
  const auto cfg = BrownianConfig::for_time(static_cast<std::size_t>(start.size()), time, seed, paths);
  const HitEstimate est = estimate_hitting_probability(oracle, start, cfg);
  if (std_error) *std_error = est.std_error;
  return est.psi;
}

void check_layer(const MlpModel& model, std::size_t layer) {
  if (layer >= model.num_layers()) throw std::out_of_range("sensitivity: layer index out of range");
}

}  // namespace

double layer_relative_psi(const MlpModel& model, std::size_t layer, const Point& x, std::size_t y,
                          double t, std::size_t paths, std::uint64_t seed) {
  check_layer(model, layer);
  const ErrorSetOracle oracle(model, y, layer + 1);
  const Point z = model.representation(layer + 1, x);
  return psi_at(oracle, z, t, paths, seed);
}

SensitivityEstimate capacity_sensitivity(const MlpModel& model, std::size_t layer, const Point& x,
                                         std::size_t y, double t, const NoiseSpec& noise,
                                         std::size_t path_count, std::uint64_t seed) {
  check_layer(model, layer);
  if (!(noise.eta0 >= 0.0)) throw std::invalid_argument("sensitivity: eta0 must be >= 0");
  if (noise.count == 0) throw std::invalid_argument("sensitivity: need at least one noise sample");
  if (!(t > 0.0)) throw std::invalid_argument("sensitivity: t must be > 0");
  const ErrorSetOracle oracle(model, y, layer + 1);
  const Point u = model.representation(layer, x);
  const Point z0 = model.apply_layer(layer, u);
  const auto cfg = BrownianConfig::for_time(static_cast<std::size_t>(z0.size()), t, seed, path_count);
  const double psi0 = estimate_hitting_probability(oracle, z0, cfg).psi;
  if (psi0 == 0.0) throw UndefinedSensitivityError("capacity sensitivity undefined: baseline psi is 0");
  const PointCloud etas = sample_uniform_ball(Point::Zero(u.size()), noise.eta0, noise.count,
                                              derive_key(seed, domain::noise));
  const double unorm = u.norm();
  std::vector<double> devs(noise.count);
  for (std::size_t j = 0; j < noise.count; ++j) {
    const Point noisy = u + unorm * etas.col(static_cast<Eigen::Index>(j));
    const Point z = model.apply_layer(layer, noisy);
    devs[j] = std::abs(estimate_hitting_probability(oracle, z, cfg).psi - psi0) / psi0;
  }
  SensitivityEstimate est;
  est.layer_index = layer;
  double mean = 0.0;
  for (double d : devs) mean += d;
  mean /= static_cast<double>(devs.size());
  double var = 0.0;
  for (double d : devs) var += (d - mean) * (d - mean);
  est.std_error = devs.size() > 1 ? std::sqrt(var / static_cast<double>(devs.size() - 1) /
                                              static_cast<double>(devs.size()))
                                  : 0.0;
  est.s_point = {mean};
  est.s_max = est.s_mean = mean;
  est.samples_eta = noise.count;
  est.samples_paths = path_count;
  return est;
}

SensitivityEstimate capacity_sensitivity_pathwise(const MlpModel& model, std::size_t layer,
                                                  const Point& x, std::size_t y, double t,
                                                  double eta0, std::size_t m_noise,
                                                  std::size_t k_paths, double tau_deviation,
                                                  std::uint64_t seed, std::size_t baseline_paths) {
  check_layer(model, layer);
  if (!(eta0 >= 0.0)) throw std::invalid_argument("sensitivity: eta0 must be >= 0");
  if (m_noise == 0 || k_paths == 0) throw std::invalid_argument("sensitivity: need m, k > 0");
  if (!(t > 0.0)) throw std::invalid_argument("sensitivity: t must be > 0");
  const ErrorSetOracle oracle(model, y, layer + 1);
  const Point u = model.representation(layer, x);
  const Point z0 = model.apply_layer(layer, u);
  const std::size_t dim = static_cast<std::size_t>(z0.size());
  const double psi0 =
      estimate_hitting_probability(oracle, z0, BrownianConfig::for_time(dim, t, seed, baseline_paths)).psi;
  if (psi0 == 0.0) throw UndefinedSensitivityError("capacity sensitivity undefined: baseline psi is 0");
  const PointCloud etas = sample_uniform_ball(Point::Zero(u.size()), eta0, m_noise,
                                              derive_key(seed, domain::noise));
  const double unorm = u.norm();
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t j = 0; j < m_noise; ++j) {
    const Point z = model.apply_layer(layer, u + unorm * etas.col(static_cast<Eigen::Index>(j)));
    const auto cfg = BrownianConfig::for_time(dim, t, mix64(seed ^ mix64(j + 1)), k_paths);
    for (std::uint8_t hit : hitting_indicators(oracle, z, cfg)) {
      const double xjl = std::abs((hit ? 1.0 : 0.0) - psi0) / psi0;
      sum += xjl;
      sum2 += xjl * xjl;
    }
  }
  const double total = static_cast<double>(m_noise * k_paths);
  SensitivityEstimate est;
  est.layer_index = layer;
  const double mean = sum / total;
  est.std_error = total > 1 ? std::sqrt(std::max(0.0, sum2 / total - mean * mean) / (total - 1)) : 0.0;
  est.s_point = {mean};
  est.s_max = est.s_mean = mean;
  est.samples_eta = m_noise;
  est.samples_paths = k_paths;
  est.hoeffding_bound = std::exp(-2.0 * tau_deviation * tau_deviation * total);
  return est;
}

SensitivityEstimate aggregate_sensitivity(const std::vector<SensitivityEstimate>& points) {
  if (points.empty()) throw std::invalid_argument("aggregate_sensitivity: no estimates");
  SensitivityEstimate out;
  out.layer_index = points.front().layer_index;
  out.samples_eta = points.front().samples_eta;
  out.samples_paths = points.front().samples_paths;
  double sum = 0.0;
  for (const auto& p : points) {
    if (p.layer_index != out.layer_index)
      throw std::invalid_argument("aggregate_sensitivity: mixed layers");
    for (double s : p.s_point) {
      out.s_point.push_back(s);
      out.s_max = std::max(out.s_max, s);
      sum += s;
    }
    out.std_error = std::max(out.std_error, p.std_error);
  }
  out.s_mean = sum / static_cast<double>(out.s_point.size());
  return out;
}

namespace {

void check_compatible(const MlpModel& f, const MlpModel& g, const LabeledDataset& data,
                      const std::vector<double>& gamma_grid) {
  if (f.input_dim() != g.input_dim() || f.num_classes() != g.num_classes())
    throw std::invalid_argument("compression check: models differ in input space or labels");
  if (data.size() > 0 && data.dim() != f.input_dim())
    throw std::invalid_argument("compression check: dataset dimension does not match");
  if (gamma_grid.empty()) throw std::invalid_argument("compression check: empty gamma grid");
  for (double gmm : gamma_grid)
    if (!(gmm > 0.0)) throw std::invalid_argument("compression check: gamma must be > 0");
}

std::uint64_t check_seed(std::uint64_t seed, std::size_t point, std::size_t gamma_index) {
  return mix64(seed ^ mix64((point << 16) + gamma_index + 0x45544143ULL));
}

}  // namespace

EtaCompressionResult eta_compression_check(const MlpModel& f, const MlpModel& g,
                                           const LabeledDataset& data,
                                           const std::vector<double>& gamma_grid,
                                           std::size_t path_count, std::uint64_t seed,
                                           unsigned threads) {
  check_compatible(f, g, data, gamma_grid);
  std::vector<EtaCompressionResult> per_point(data.size());
  parallel_for(data.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Point x = data.points.col(static_cast<Eigen::Index>(i));
      auto& best = per_point[i];
      for (std::size_t y = 0; y < f.num_classes(); ++y) {
        const ErrorSetOracle ef(f, y);
        const ErrorSetOracle eg(g, y);
        for (std::size_t k = 0; k < gamma_grid.size(); ++k) {
          const double gmm = gamma_grid[k];
          const std::uint64_t s = check_seed(seed, i, k);
          const double pf = psi_at(ef, x, gmm * gmm, path_count, s);
          const double pg = psi_at(eg, x, gmm * gmm, path_count, s);
          const double dev = std::abs(pf - pg);
          if (!best.witness || dev > best.max_dev) {
            best.max_dev = dev;
            best.witness = CompressionWitness{i, y, gmm, pf, pg};
          }
        }
      }
    }
  });
  EtaCompressionResult out;
  for (const auto& p : per_point)
    if (p.witness && (!out.witness || p.max_dev > out.max_dev)) out = p;
  return out;
}

RuntimeCompressionResult eta_runtime_compression_check(const MlpModel& f, const MlpModel& g,
                                                       const LabeledDataset& data,
                                                       const std::vector<double>& gamma_grid,
                                                       double eta, std::size_t path_count,
                                                       std::uint64_t seed) {
  check_compatible(f, g, data, gamma_grid);
  if (!(eta >= 0.0)) throw std::invalid_argument("runtime compression: eta must be >= 0");
  for (double gmm : gamma_grid)
    if (gmm * gmm < eta) throw std::invalid_argument("runtime compression: need gamma^2 >= eta");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Point x = data.points.col(static_cast<Eigen::Index>(i));
    for (std::size_t y = 0; y < f.num_classes(); ++y) {
      const ErrorSetOracle ef(f, y);
      const ErrorSetOracle eg(g, y);
      for (std::size_t k = 0; k < gamma_grid.size(); ++k) {
        const double t = gamma_grid[k] * gamma_grid[k];
        const std::uint64_t s = check_seed(seed, i, k);
        double se_lo = 0.0, se_f = 0.0, se_hi = 0.0;
        const double lo = psi_at(eg, x, t - eta, path_count, s, &se_lo);
        const double mid = psi_at(ef, x, t, path_count, s, &se_f);
        const double hi = psi_at(eg, x, t + eta, path_count, s, &se_hi);
        const double tol_lo = 3.0 * std::hypot(se_lo, se_f);
        const double tol_hi = 3.0 * std::hypot(se_f, se_hi);
        if (lo > mid + tol_lo || mid > hi + tol_hi)
          return {false, RuntimeWitness{i, y, gamma_grid[k], lo, mid, hi}};
      }
    }
  }
  return {true, std::nullopt};
}

void CompressionParams::validate(std::size_t layer_count) const {
  if (alpha_beta.size() != layer_count)
    throw std::invalid_argument("compression: need one (alpha, beta) pair per layer");
  for (const auto& [a, b] : alpha_beta)
    if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0))
      throw std::invalid_argument("compression: alpha and beta must lie in (0, 1)");
  if (gamma_grid.empty()) throw std::invalid_argument("compression: empty gamma grid");
  for (std::size_t i = 0; i < gamma_grid.size(); ++i)
    if (!(gamma_grid[i] > 0.0) || (i > 0 && !(gamma_grid[i] > gamma_grid[i - 1])))
      throw std::invalid_argument("compression: gamma grid must be positive and increasing");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("compression: eta must lie in (0, 1)");
}

CompressionReport compress_network(const MlpModel& model, const CompressionParams& params,
                                   const LabeledDataset& data, double t,
                                   const CompressionOptions& options) {
  params.validate(model.num_layers());
  data.validate();
  if (data.size() > 0 && data.dim() != model.input_dim())
    throw std::invalid_argument("compression: dataset dimension does not match the model");
  if (!(t > 0.0)) throw std::invalid_argument("compression: t must be > 0");
  for (std::size_t y : data.labels)
    if (y >= model.num_classes()) throw std::invalid_argument("compression: label out of range");

  CompressionReport report{model, {}, 1.0};
  const std::uint64_t psi_seed = mix64(params.seed ^ 0x434f4d50ULL);
  for (std::size_t j = 0; j < model.num_layers(); ++j) {
    const auto [alpha, beta] = params.alpha_beta[j];
    LayerCompression lc;
    const MlpModel previous = report.compressed;

    // Sensitivity of layer j in the partially compressed network, noise radius alpha_j.
    if (options.sensitivity_noise > 0) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        try {
          const auto s = capacity_sensitivity(previous, j, data.points.col(static_cast<Eigen::Index>(i)),
                                              data.labels[i], t, {alpha, options.sensitivity_noise},
                                              options.sensitivity_paths, mix64(psi_seed + i + (j << 20)));
          lc.s_max = std::max(lc.s_max, s.s_max);
        } catch (const UndefinedSensitivityError&) {
          ++lc.sensitivity_skipped;
        }
      }
    }

    auto& layer = report.compressed.layers()[j];
    const Eigen::MatrixXd p = jl_keep_probabilities(layer.weight, alpha, beta);
    layer.weight = jl_sparsify(layer.weight, alpha, beta, params.seed, j);
    layer.sparse = true;
    lc.expected_nnz = p.sum();
    lc.nnz = static_cast<std::size_t>((layer.weight.array() != 0.0).count());
    lc.dense_size = static_cast<std::size_t>(layer.weight.size());

    for (std::size_t i = 0; i < data.size(); ++i) {
      const Point x = data.points.col(static_cast<Eigen::Index>(i));
      const std::uint64_t s = mix64(psi_seed ^ mix64(i + 1));
      const double before = psi_at(ErrorSetOracle(previous, data.labels[i]), x, t, options.path_count, s);
      const double after =
          psi_at(ErrorSetOracle(report.compressed, data.labels[i]), x, t, options.path_count, s);
      lc.rho = std::max(lc.rho, std::abs(after - before));
    }
    lc.tau = (1.0 - beta) - lc.s_max;
    report.prob_floor *= std::max(0.0, lc.tau);
    report.layers.push_back(lc);
  }
  return report;
}

}  // namespace capsat
