#include "capsat/datasets.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "capsat/model_io.hpp"
#include "capsat/rng.hpp"

namespace capsat {

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(points.cols()) != labels.size())
    throw std::invalid_argument("dataset: point and label counts differ");
  if (!points.allFinite()) throw std::invalid_argument("dataset: non-finite coordinate");
}

LabeledDataset LabeledDataset::subset(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("dataset subset out of range");
  LabeledDataset out;
  out.points = points.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

LabeledDataset generate_circle_dataset(const CircleDatasetConfig& config, std::uint64_t seed) {
  if (config.count == 0) throw std::invalid_argument("circle dataset: count must be > 0");
  if (config.rays < 2 || config.rays % 2 != 0)
    throw std::invalid_argument("circle dataset: rays must be even and >= 2");
  if (!(config.radius > 0.0)) throw std::invalid_argument("circle dataset: radius must be > 0");
  if (!(config.radial_jitter >= 0.0 && config.radial_jitter < 1.0))
    throw std::invalid_argument("circle dataset: jitter must lie in [0, 1)");
  const std::uint64_t key = derive_key(seed, domain::dataset);
  LabeledDataset data;
  data.points.resize(2, static_cast<Eigen::Index>(config.count));
  data.labels.resize(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    const std::size_t ray = i % config.rays;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(ray) / static_cast<double>(config.rays);
    CounterStream stream(key, i);
    const double rho = config.radius * (1.0 + config.radial_jitter * (2.0 * stream.uniform() - 1.0));
    data.points(0, static_cast<Eigen::Index>(i)) = rho * std::cos(angle);
    data.points(1, static_cast<Eigen::Index>(i)) = rho * std::sin(angle);
    data.labels[i] = ray % 2;
  }
  return data;
}

LabeledDataset generate_blobs(std::size_t dim, std::size_t count, double separation,
                              std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("blobs: dim must be > 0");
  const std::uint64_t key = derive_key(seed, domain::dataset);
  LabeledDataset data;
  data.points.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  data.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterStream stream(key, i, 1);
    const std::size_t label = i % 2;
    auto col = data.points.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 0; j < col.size(); ++j) col[j] = stream.normal();
    col[0] += label == 0 ? -0.5 * separation : 0.5 * separation;
    data.labels[i] = label;
  }
  return data;
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no), "bad number '" + cell + "'");
      }
    }
    if (fields.size() < 2)
      throw ParseError(path.string() + ":" + std::to_string(line_no), "need coordinates and a label");
    const double label = fields.back();
    if (label < 0.0 || label != std::floor(label))
      throw ParseError(path.string() + ":" + std::to_string(line_no), "label must be a nonnegative integer");
    fields.pop_back();
    if (!rows.empty() && fields.size() != rows.front().size())
      throw ParseError(path.string() + ":" + std::to_string(line_no), "inconsistent dimension");
    rows.push_back(std::move(fields));
    labels.push_back(static_cast<std::size_t>(label));
  }
  LabeledDataset data;
  const Eigen::Index dim = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  data.points.resize(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) data.points(j, static_cast<Eigen::Index>(i)) = rows[i][j];
  data.labels = std::move(labels);
  data.validate();
  return data;
}

void save_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.points.rows(); ++j)
      out += format_double(data.points(j, static_cast<Eigen::Index>(i))) + ",";
    out += std::to_string(data.labels[i]) + "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace capsat
