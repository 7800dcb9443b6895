#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "capsat/datasets.hpp"
#include "capsat/mlp.hpp"

namespace capsat {

/// Keep probabilities min(1, 2 a_ij^2 / (beta alpha^2 ||A||_F^2)); all zero for A = 0.
Eigen::MatrixXd jl_keep_probabilities(const Eigen::MatrixXd& a, double alpha, double beta);

/// Bernoulli sparsifier: entry (i, j) is kept with probability p_ij and
/// rescaled to a_ij / p_ij, so the result is entrywise unbiased. Draw
/// `stream` of a seed gives independent sparsifications.
Eigen::MatrixXd jl_sparsify(const Eigen::MatrixXd& a, double alpha, double beta, std::uint64_t seed,
                            std::uint64_t stream = 0);

/// Raised when the baseline hitting probability is zero.
class UndefinedSensitivityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct NoiseSpec {
  /// Noise is uniform in the ball of radius eta0.
  double eta0 = 0.0;
  std::size_t count = 16;
};

struct SensitivityEstimate {
  std::size_t layer_index = 0;
  std::vector<double> s_point;
  /// S^m: maximum over points.
  double s_max = 0.0;
  /// S^e: mean over points.
  double s_mean = 0.0;
  std::size_t samples_eta = 0;
  std::size_t samples_paths = 0;
  /// Monte-Carlo standard error of a single-point estimate.
  double std_error = 0.0;
  /// Pathwise estimator only: e^(-2 tau^2 m k).
  std::optional<double> hoeffding_bound;
};

/// Baseline psi used by the sensitivity estimators: hitting probability of
/// the layer-relative error set {z : tail of the network after layer
/// `layer` does not strictly prefer y}, from the layer output phi(A x + b),
/// Brownian motion running for time t in the layer output space.
double layer_relative_psi(const MlpModel& model, std::size_t layer, const Point& x, std::size_t y,
                          double t, std::size_t paths, std::uint64_t seed);

/// E_eta |psi(phi(A(u + |u| eta))) - psi(phi(A u))| / psi(phi(A u)) with u
/// the layer input, every psi estimated on the same path family.
SensitivityEstimate capacity_sensitivity(const MlpModel& model, std::size_t layer, const Point& x,
                                         std::size_t y, double t, const NoiseSpec& noise,
                                         std::size_t path_count, std::uint64_t seed);

/// Mean of |X_jl - psi| / psi over m_noise noise draws and k_paths Brownian
/// indicators X_jl per draw. `baseline_paths` paths estimate psi itself.
SensitivityEstimate capacity_sensitivity_pathwise(const MlpModel& model, std::size_t layer,
                                                  const Point& x, std::size_t y, double t,
                                                  double eta0, std::size_t m_noise,
                                                  std::size_t k_paths, double tau_deviation,
                                                  std::uint64_t seed,
                                                  std::size_t baseline_paths = 10000);

/// Combines single-point estimates into S^m and S^e.
SensitivityEstimate aggregate_sensitivity(const std::vector<SensitivityEstimate>& points);

struct CompressionWitness {
  std::size_t point_index;
  std::size_t label;
  double gamma;
  double psi_f;
  double psi_g;
};

struct EtaCompressionResult {
  double max_dev = 0.0;
  std::optional<CompressionWitness> witness;
  bool is_eta_compression(double eta) const { return max_dev < eta; }
};

/// max over points, labels and gamma of |psi_{E_g(y)}(x, gamma^2) - psi_{E_f(y)}(x, gamma^2)|
/// with common random numbers for f and g.
EtaCompressionResult eta_compression_check(const MlpModel& f, const MlpModel& g,
                                           const LabeledDataset& data,
                                           const std::vector<double>& gamma_grid,
                                           std::size_t path_count, std::uint64_t seed,
                                           unsigned threads = 1);

struct RuntimeWitness {
  std::size_t point_index;
  std::size_t label;
  double gamma;
  double psi_g_early;
  double psi_f;
  double psi_g_late;
};

struct RuntimeCompressionResult {
  bool holds = true;
  std::optional<RuntimeWitness> witness;
};

/// Checks psi_g(gamma^2 - eta) <= psi_f(gamma^2) <= psi_g(gamma^2 + eta) up to
/// three combined standard errors; returns the first violation.
RuntimeCompressionResult eta_runtime_compression_check(const MlpModel& f, const MlpModel& g,
                                                       const LabeledDataset& data,
                                                       const std::vector<double>& gamma_grid,
                                                       double eta, std::size_t path_count,
                                                       std::uint64_t seed);

struct CompressionParams {
  std::vector<std::pair<double, double>> alpha_beta;
  std::vector<double> gamma_grid{1.0};
  double eta = 0.1;
  std::uint64_t seed = 0;

  void validate(std::size_t layer_count) const;
};

struct CompressionOptions {
  std::size_t path_count = 2000;
  /// Sensitivity estimate per layer (noise radius alpha_j); 0 disables it.
  std::size_t sensitivity_noise = 8;
  std::size_t sensitivity_paths = 1000;
};

struct LayerCompression {
  std::size_t nnz = 0;
  double expected_nnz = 0.0;
  std::size_t dense_size = 0;
  /// Max over the dataset of |psi_{g_j} - psi_{g_{j-1}}| in input space.
  double rho = 0.0;
  double s_max = 0.0;
  std::size_t sensitivity_skipped = 0;
  /// (1 - beta_j) - S^m_j.
  double tau = 0.0;
};

struct CompressionReport {
  MlpModel compressed;
  std::vector<LayerCompression> layers;
  /// prod_j max(0, tau_j).
  double prob_floor = 0.0;
};

/// Sparsifies the layers one after another and measures, after each, the
/// largest change of psi(x, t) over the dataset (labels from the dataset).
CompressionReport compress_network(const MlpModel& model, const CompressionParams& params,
                                   const LabeledDataset& data, double t,
                                   const CompressionOptions& options = {});

}  // namespace capsat
