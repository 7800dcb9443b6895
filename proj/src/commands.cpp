#include "capsat/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "capsat/analytic_models.hpp"
#include "capsat/attacks.hpp"
#include "capsat/capacitory_metrics.hpp"
#include "capsat/compression.hpp"
#include "capsat/datasets.hpp"
#include "capsat/generalization.hpp"
#include "capsat/model_io.hpp"
#include "capsat/report.hpp"
#include "capsat/rng.hpp"
#include "capsat/shapes.hpp"
#include "capsat/training.hpp"

namespace capsat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDatasetTag = 0x4453ULL;
constexpr std::uint64_t kTrainTag = 0x5452ULL;
constexpr std::uint64_t kAttackTag = 0x4154ULL;
constexpr std::uint64_t kSweepTag = 0x5357ULL;
constexpr std::uint64_t kCaseTag = 0x4d43ULL;
constexpr std::uint64_t kCompressTag = 0x434dULL;

const std::set<std::string> kTopLevelKeys{"seed", "train", "attack", "sweep", "model_case", "compress", "bound"};

// Typed, schema-checked view of one JSON object.
class Block {
 public:
  Block(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (const auto& [key, value] : j_.items())
      if (!allowed.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw(const char* key) const {
    if (!j_.contains(key)) throw ConfigError(where(key) + ": required");
    return j_.at(key);
  }
  std::string where(const char* key) const { return path_ + "." + key; }

  double number(const char* key, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + ": expected a finite number");
    return d;
  }

  std::size_t count(const char* key, std::optional<std::size_t> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(where(key) + ": expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  std::string text(const char* key, std::optional<std::string> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": required");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::optional<std::vector<double>> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(where(key) + ": required");
    }
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

std::uint64_t effective_seed(const CommandContext& ctx) {
  if (ctx.seed_override) return *ctx.seed_override;
  if (!ctx.config.contains("seed")) return 0;
  const auto& s = ctx.config.at("seed");
  if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
    throw ConfigError("$.seed: expected a nonnegative integer");
  return s.get<std::uint64_t>();
}

json effective_config(const CommandContext& ctx, std::uint64_t seed) {
  json c = ctx.config;
  c["seed"] = seed;
  return c;
}

const json& command_block(const CommandContext& ctx, const char* name) {
  if (!ctx.config.is_object()) throw ConfigError("$: expected an object");
  for (const auto& [key, value] : ctx.config.items())
    if (!kTopLevelKeys.count(key)) throw ConfigError("$: unknown key '" + key + "'");
  if (!ctx.config.contains(name)) throw ConfigError(std::string("$: missing '") + name + "' block");
  return ctx.config.at(name);
}

fs::path resolve(const CommandContext& ctx, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = ctx.base_dir / path;
  return path;
}

fs::path existing_file(const CommandContext& ctx, const Block& b, const char* key) {
  const fs::path p = resolve(ctx, b.text(key));
  if (!fs::is_regular_file(p)) throw ConfigError(b.where(key) + ": file not found: " + p.string());
  return p;
}

MlpModel load_model_checked(const fs::path& path, const std::string& where) {
  try {
    return load_model(path);
  } catch (const ParseError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

struct DatasetSpec {
  std::string kind;
  CircleDatasetConfig circle;
  std::size_t dim = 2, count = 0;
  double separation = 4.0;
  fs::path path;
};

DatasetSpec parse_dataset(const CommandContext& ctx, const json& j, const std::string& where) {
  const Block b(j, where, {"kind", "radius", "count", "rays", "jitter", "dim", "separation", "path"});
  DatasetSpec d;
  d.kind = b.text("kind");
  if (d.kind == "circle") {
    d.circle.radius = b.number("radius", 5.0);
    d.circle.count = b.count("count", 1250);
    d.circle.rays = b.count("rays", 50);
    d.circle.radial_jitter = b.number("jitter", 0.1);
    if (d.circle.rays < 2 || d.circle.rays % 2) throw ConfigError(b.where("rays") + ": must be even and >= 2");
    if (!(d.circle.radius > 0.0)) throw ConfigError(b.where("radius") + ": must be > 0");
    if (!(d.circle.radial_jitter >= 0.0 && d.circle.radial_jitter < 1.0))
      throw ConfigError(b.where("jitter") + ": must lie in [0, 1)");
  } else if (d.kind == "blobs") {
    d.dim = b.count("dim", 2);
    d.count = b.count("count", 200);
    d.separation = b.number("separation", 4.0);
    if (d.dim == 0) throw ConfigError(b.where("dim") + ": must be > 0");
  } else if (d.kind == "csv") {
    d.path = existing_file(ctx, b, "path");
  } else {
    throw ConfigError(b.where("kind") + ": expected circle, blobs or csv");
  }
  return d;
}

LabeledDataset materialise(const DatasetSpec& d, std::uint64_t seed) {
  const std::uint64_t ds = mix64(seed ^ kDatasetTag);
  if (d.kind == "circle") return generate_circle_dataset(d.circle, ds);
  if (d.kind == "blobs") return generate_blobs(d.dim, d.count, d.separation, ds);
  try {
    return load_dataset_csv(d.path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
}

LabeledDataset limited(LabeledDataset data, std::size_t limit) {
  if (limit == 0 || limit >= data.size()) return data;
  return data.subset(0, limit);
}

void check_dataset_model(const LabeledDataset& data, const MlpModel& model, const std::string& where) {
  if (data.size() > 0 && data.dim() != model.input_dim())
    throw ConfigError(where + ": dataset dimension " + std::to_string(data.dim()) +
                      " does not match model input " + std::to_string(model.input_dim()));
  for (std::size_t y : data.labels)
    if (y >= model.num_classes()) throw ConfigError(where + ": dataset label exceeds model classes");
}

void prepare_out(const CommandContext& ctx) {
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string());
}

std::string num_or_empty(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return format_double(*v);
}

}  // namespace

json read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void run_train_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "train"), "$.train",
                {"dataset", "hidden", "activation", "init_model", "lr", "batch_size", "epochs",
                 "weight_decay", "augmentation", "noise_variance", "fgsm_epsilon", "brownian_radius",
                 "brownian_steps"});
  const DatasetSpec ds = parse_dataset(ctx, b.raw("dataset"), "$.train.dataset");
  TrainConfig tc;
  tc.learning_rate = b.number("lr", 1e-5);
  tc.batch_size = b.count("batch_size", 128);
  tc.epochs = b.count("epochs", 10);
  tc.weight_decay = b.number("weight_decay", 0.0);
  tc.noise_variance = b.number("noise_variance", 0.4);
  tc.fgsm_epsilon = b.number("fgsm_epsilon", 0.1);
  tc.brownian_radius = b.number("brownian_radius", 0.5);
  tc.brownian_steps = b.count("brownian_steps", 400);
  tc.seed = mix64(seed ^ kTrainTag);
  try {
    tc.augmentation = augmentation_from_string(b.text("augmentation", "none"));
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.train: ") + e.what());
  }
  std::optional<MlpModel> init;
  std::vector<int> hidden;
  Activation act = Activation::relu;
  if (b.has("init_model")) {
    init = load_model_checked(existing_file(ctx, b, "init_model"), "$.train.init_model");
  } else {
    for (double h : b.numbers("hidden", std::vector<double>{20, 40, 70, 100})) {
      if (!(h >= 1.0) || h != std::floor(h)) throw ConfigError("$.train.hidden: expected positive integers");
      hidden.push_back(static_cast<int>(h));
    }
    try {
      act = activation_from_string(b.text("activation", "relu"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("$.train.activation: ") + e.what());
    }
  }
  prepare_out(ctx);

  const LabeledDataset data = materialise(ds, seed);
  if (data.size() == 0) throw ConfigError("$.train.dataset: empty dataset");
  std::size_t classes = 0;
  for (std::size_t y : data.labels) classes = std::max(classes, y + 1);
  classes = std::max<std::size_t>(classes, 2);
  if (!init) {
    std::vector<int> dims{static_cast<int>(data.dim())};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(static_cast<int>(classes));
    init = MlpModel::random(dims, act, mix64(seed ^ kTrainTag ^ 1));
  }
  check_dataset_model(data, *init, "$.train");
  const TrainResult result = train_adam(*init, data, tc);
  const double acc = accuracy(result.model, data);
  save_model(result.model, ctx.out_dir / "model.json");
  json summary{{"train_accuracy", acc},
               {"loss_trace", result.loss_trace},
               {"samples", data.size()},
               {"parameters", result.model.parameter_count()},
               {"provenance", provenance(effective_config(ctx, seed), seed)}};
  write_file_atomic(ctx.out_dir / "train.json", dump_json(summary));
  log << "trained " << result.model.num_layers() << "-layer model on " << data.size()
      << " points, train accuracy " << acc << "\n";
}

void run_attack_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "attack"), "$.attack",
                {"model", "dataset", "limit", "method", "epsilon", "step_size", "steps", "radius"});
  const fs::path model_path = existing_file(ctx, b, "model");
  const DatasetSpec ds = parse_dataset(ctx, b.raw("dataset"), "$.attack.dataset");
  const std::size_t limit = b.count("limit", 0);
  const std::string method = b.text("method", "pgd");
  if (method != "fgsm" && method != "pgd" && method != "pgd_distance" && method != "brownian")
    throw ConfigError("$.attack.method: expected fgsm, pgd, pgd_distance or brownian");
  AttackConfig ac;
  ac.epsilon = b.number("epsilon", 0.1);
  ac.step_size = b.number("step_size", 0.01);
  ac.steps = b.count("steps", 400);
  ac.seed = mix64(seed ^ kAttackTag);
  const double radius = b.number("radius", 1.0);
  try {
    ac.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.attack: ") + e.what());
  }
  if (!(radius > 0.0)) throw ConfigError("$.attack.radius: must be > 0");
  const MlpModel model = load_model_checked(model_path, "$.attack.model");
  const LabeledDataset data = limited(materialise(ds, seed), limit);
  check_dataset_model(data, model, "$.attack");
  prepare_out(ctx);

  std::string csv = "index,label,success,linf,l2";
  for (std::size_t j = 0; j < model.input_dim(); ++j) csv += ",x" + std::to_string(j + 1);
  csv += '\n';
  std::size_t successes = 0;
  const BrownianConfig bc(model.input_dim(), radius, ac.seed, std::max<std::size_t>(data.size(), 1), ac.steps);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Point x = data.points.col(static_cast<Eigen::Index>(i));
    const std::size_t y = data.labels[i];
    Point adv = x;
    bool success = false;
    if (method == "fgsm") {
      adv = fgsm_attack(model, x, y, ac.epsilon);
      success = in_error_set(model, adv, y);
    } else if (method == "pgd") {
      adv = pgd_attack(model, x, y, ac);
      success = in_error_set(model, adv, y);
    } else if (method == "pgd_distance") {
      const auto d = pgd_distance_to_boundary(model, x, y, ac);
      success = d.found;
      if (d.found) adv = d.point;
    } else {
      if (auto hit = brownian_attack(model, x, y, bc, i)) {
        adv = hit->point;
        success = true;
      }
    }
    if (success) ++successes;
    const Point delta = adv - x;
    csv += std::to_string(i) + ',' + std::to_string(y) + ',' + (success ? "1" : "0") + ',' +
           format_double(delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0) + ',' +
           format_double(delta.norm());
    for (Eigen::Index j = 0; j < adv.size(); ++j) csv += ',' + format_double(adv[j]);
    csv += '\n';
  }
  write_file_atomic(ctx.out_dir / "attack.csv", csv);
  log << method << " attack: " << successes << "/" << data.size() << " points end in the error set\n";
}

namespace {

SweepConfig parse_sweep_config(const Block& b, std::uint64_t seed) {
  SweepConfig sc;
  sc.target_mu = b.number("target_mu", 0.01);
  if (b.has("mu_tolerance")) sc.mu_tolerance = b.number("mu_tolerance");
  sc.num_paths = b.count("num_paths", BrownianConfig::kDefaultPaths);
  sc.num_steps = b.count("num_steps", BrownianConfig::kDefaultSteps);
  sc.volume_samples = b.count("volume_samples", 10000);
  sc.distance_samples = b.count("distance_samples", 1000);
  sc.pgd_steps = b.count("pgd_steps", 400);
  sc.pgd_budget_factor = b.number("pgd_budget_factor", 2.0);
  sc.radius_lo = b.number("radius_lo", 0.01);
  sc.radius_hi = b.number("radius_hi", 10.0);
  sc.seed = mix64(seed ^ kSweepTag);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.sweep: ") + e.what());
  }
  if (sc.distance_samples == 0) throw ConfigError("$.sweep.distance_samples: must be > 0");
  return sc;
}

}  // namespace

void run_sweep_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "sweep"), "$.sweep",
                {"model", "dataset", "limit", "target_mu", "mu_tolerance", "num_paths", "num_steps",
                 "volume_samples", "distance_samples", "pgd_steps", "pgd_budget_factor", "radius_lo",
                 "radius_hi"});
  const fs::path model_path = existing_file(ctx, b, "model");
  const DatasetSpec ds = parse_dataset(ctx, b.raw("dataset"), "$.sweep.dataset");
  const std::size_t limit = b.count("limit", 0);
  const SweepConfig sc = parse_sweep_config(b, seed);
  const MlpModel model = load_model_checked(model_path, "$.sweep.model");
  const LabeledDataset data = limited(materialise(ds, seed), limit);
  check_dataset_model(data, model, "$.sweep");
  prepare_out(ctx);

  const SweepResult result = sweep(model, data, sc, ctx.threads);
  json summary = summarize_records(result.records, result.skipped_misclassified, result.failures.size());
  json failures = json::array();
  for (const auto& f : result.failures) failures.push_back({{"point_index", f.point_index}, {"message", f.message}});
  summary["failures"] = failures;
  summary["provenance"] = provenance(effective_config(ctx, seed), seed);
  write_file_atomic(ctx.out_dir / "records.csv", records_to_csv(result.records));
  write_file_atomic(ctx.out_dir / "summary.json", dump_json(summary));
  log << "sweep: " << result.records.size() << " records, " << result.skipped_misclassified
      << " misclassified points skipped, " << result.failures.size() << " failures\n";
}

namespace {

ModelShape parse_shape(const json& j, int n, const std::string& where) {
  const Block b(j, where, {"type", "d", "bend_radius", "rho", "h", "near", "angle", "sides",
                           "center_distance", "radius"});
  const std::string type = b.text("type");
  ModelShape shape;
  if (type == "halfspace") {
    shape = HalfSpace{b.number("d")};
  } else if (type == "cap") {
    shape = SphericalCapBoundary{b.number("d"), b.has("bend_radius") ? b.number("bend_radius")
                                                                     : std::numeric_limits<double>::infinity()};
  } else if (type == "cylinder") {
    shape = Cylinder{b.number("rho"), b.number("h"), b.number("near", 0.0)};
  } else if (type == "wedge") {
    shape = Wedge{b.number("angle"), b.number("d", 0.0)};
  } else if (type == "cone") {
    shape = Cone{b.number("angle"), b.number("d", 0.0)};
  } else if (type == "cuboid") {
    shape = Cuboid{b.number("d"), b.numbers("sides")};
  } else if (type == "ball") {
    shape = BallObstacle{b.number("center_distance"), b.number("radius")};
  } else {
    throw ConfigError(b.where("type") + ": unknown shape '" + type + "'");
  }
  try {
    validate_shape(shape, n);
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return shape;
}

}  // namespace

void run_model_case_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "model_case"), "$.model_case",
                {"shape", "dim", "radius", "parameter", "values", "num_paths", "num_steps",
                 "volume_samples", "cuboid_variant"});
  const std::size_t dim = b.count("dim");
  if (dim == 0) throw ConfigError("$.model_case.dim: must be > 0");
  const double radius = b.number("radius", 1.0);
  if (!(radius > 0.0)) throw ConfigError("$.model_case.radius: must be > 0");
  const std::string parameter = b.text("parameter");
  const std::vector<double> values = b.numbers("values");
  const std::size_t paths = b.count("num_paths", BrownianConfig::kDefaultPaths);
  const std::size_t steps = b.count("num_steps", BrownianConfig::kDefaultSteps);
  const std::size_t volume_samples = b.count("volume_samples", 10000);
  if (paths == 0 || volume_samples == 0) throw ConfigError("$.model_case: sample counts must be > 0");
  const std::string variant_name = b.text("cuboid_variant", "as_printed");
  if (variant_name != "as_printed" && variant_name != "role_swapped")
    throw ConfigError("$.model_case.cuboid_variant: expected as_printed or role_swapped");
  const CuboidVariant variant =
      variant_name == "as_printed" ? CuboidVariant::as_printed : CuboidVariant::role_swapped;
  const json& shape_json = b.raw("shape");
  if (!shape_json.is_object() || !shape_json.contains(parameter) || parameter == "type")
    throw ConfigError("$.model_case.parameter: '" + parameter + "' is not a scalar field of the shape");
  std::vector<ModelShape> shapes;
  for (double v : values) {
    json sj = shape_json;
    sj[parameter] = v;
    shapes.push_back(parse_shape(sj, static_cast<int>(dim), "$.model_case.shape"));
  }
  prepare_out(ctx);

  const int n = static_cast<int>(dim);
  const double t = radius * radius / static_cast<double>(dim);
  std::string csv =
      "value,psi_analytic,psi_mc,psi_stderr,mu_analytic,mu_mc,mu_stderr,tau_analytic,tau_mc,tau_mc_mu_analytic,"
      "raw_ratio_mc\n";
  const Point origin = Point::Zero(static_cast<Eigen::Index>(dim));
  const std::uint64_t base = mix64(seed ^ kCaseTag);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const ShapeOracle oracle(shapes[i], n);
    const std::uint64_t s = mix64(base + i);
    const HitEstimate psi = estimate_hitting_probability(
        oracle, origin, BrownianConfig(dim, radius, s, paths, steps), ctx.threads);
    const HitEstimate mu = estimate_relative_volume(oracle, origin, radius, volume_samples, s, ctx.threads);
    std::optional<double> psi_a = analytic_hitting_probability(shapes[i], n, t);
    if (const auto* c = std::get_if<Cuboid>(&shapes[i]))
      psi_a = cuboid_hitting_probability(c->d, c->sides, t, variant);
    const std::optional<double> mu_a = analytic_relative_volume(shapes[i], n, radius);
    std::optional<double> tau_a, tau_mc, tau_mixed, raw;
    if (n >= 3 && psi_a && mu_a && *mu_a > 0.0) tau_a = tau(std::min(1.0, *psi_a), *mu_a, n);
    if (n >= 3 && mu.psi > 0.0) tau_mc = tau(psi.psi, mu.psi, n);
    if (n >= 3 && mu_a && *mu_a > 0.0) tau_mixed = tau(psi.psi, *mu_a, n);
    if (mu.psi > 0.0) raw = psi.psi / mu.psi;
    csv += format_double(values[i]) + ',' + num_or_empty(psi_a) + ',' + format_double(psi.psi) + ',' +
           format_double(psi.std_error) + ',' + num_or_empty(mu_a) + ',' + format_double(mu.psi) + ',' +
           format_double(mu.std_error) + ',' + num_or_empty(tau_a) + ',' + num_or_empty(tau_mc) + ',' +
           num_or_empty(tau_mixed) + ',' + num_or_empty(raw) + '\n';
  }
  write_file_atomic(ctx.out_dir / "model_case.csv", csv);
  log << "model-case: " << shapes.size() << " grid points written\n";
}

void run_compress_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "compress"), "$.compress",
                {"model", "dataset", "limit", "alpha_beta", "gamma_grid", "eta", "t", "path_count",
                 "sensitivity_noise", "sensitivity_paths"});
  const fs::path model_path = existing_file(ctx, b, "model");
  const DatasetSpec ds = parse_dataset(ctx, b.raw("dataset"), "$.compress.dataset");
  const std::size_t limit = b.count("limit", 0);
  CompressionParams params;
  const json& ab = b.raw("alpha_beta");
  if (!ab.is_array()) throw ConfigError("$.compress.alpha_beta: expected an array of [alpha, beta] pairs");
  for (const auto& pair : ab) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
      throw ConfigError("$.compress.alpha_beta: expected an array of [alpha, beta] pairs");
    params.alpha_beta.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  params.gamma_grid = b.numbers("gamma_grid", std::vector<double>{1.0});
  params.eta = b.number("eta", 0.1);
  params.seed = mix64(seed ^ kCompressTag);
  const double t = b.number("t", 1.0);
  CompressionOptions opts;
  opts.path_count = b.count("path_count", 2000);
  opts.sensitivity_noise = b.count("sensitivity_noise", 8);
  opts.sensitivity_paths = b.count("sensitivity_paths", 1000);
  if (!(t > 0.0)) throw ConfigError("$.compress.t: must be > 0");
  if (opts.path_count == 0 || opts.sensitivity_paths == 0)
    throw ConfigError("$.compress: path counts must be > 0");
  const MlpModel model = load_model_checked(model_path, "$.compress.model");
  try {
    params.validate(model.num_layers());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.compress: ") + e.what());
  }
  const LabeledDataset data = limited(materialise(ds, seed), limit);
  check_dataset_model(data, model, "$.compress");
  prepare_out(ctx);

  const CompressionReport report = compress_network(model, params, data, t, opts);
  const EtaCompressionResult check =
      eta_compression_check(model, report.compressed, data, params.gamma_grid, opts.path_count,
                            mix64(params.seed + 1), ctx.threads);
  json layers = json::array();
  double rho_sum = 0.0, beta_sum = 0.0;
  for (std::size_t j = 0; j < report.layers.size(); ++j) {
    const auto& l = report.layers[j];
    rho_sum += l.rho;
    beta_sum += params.alpha_beta[j].second;
    layers.push_back({{"alpha", params.alpha_beta[j].first},
                      {"beta", params.alpha_beta[j].second},
                      {"nnz", l.nnz},
                      {"expected_nnz", l.expected_nnz},
                      {"dense_size", l.dense_size},
                      {"rho", l.rho},
                      {"s_max", l.s_max},
                      {"sensitivity_skipped", l.sensitivity_skipped},
                      {"tau", l.tau}});
  }
  json out{{"layers", layers},
           {"prob_floor", report.prob_floor},
           {"rho_sum", rho_sum},
           {"beta_sum", beta_sum},
           {"eta_check",
            {{"max_dev", check.max_dev}, {"eta", params.eta}, {"is_eta_compression", check.is_eta_compression(params.eta)}}},
           {"provenance", provenance(effective_config(ctx, seed), seed)}};
  save_model(report.compressed, ctx.out_dir / "compressed_model.json");
  write_file_atomic(ctx.out_dir / "compression.json", dump_json(out));
  log << "compress: probability floor " << report.prob_floor << ", max psi deviation " << check.max_dev << "\n";
}

void run_bound_command(const CommandContext& ctx, std::ostream& log) {
  const std::uint64_t seed = effective_seed(ctx);
  const Block b(command_block(ctx, "bound"), "$.bound",
                {"empirical_hit_prob", "eta", "q", "r_levels", "m", "slack_constant", "hoeffding"});
  GenBoundInputs in;
  in.empirical_hit_prob = b.number("empirical_hit_prob");
  in.eta = b.number("eta");
  in.q = b.number("q");
  in.r_levels = b.number("r_levels");
  in.m = b.number("m");
  in.slack_constant = b.number("slack_constant", 1.0);
  try {
    in.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("$.bound: ") + e.what());
  }
  std::optional<std::pair<double, double>> hoeffding;
  if (b.has("hoeffding")) {
    const Block h(b.raw("hoeffding"), "$.bound.hoeffding", {"deviation", "delta"});
    hoeffding.emplace(h.number("deviation"), h.number("delta"));
    if (!(hoeffding->first > 0.0 && hoeffding->first < 1.0) || !(hoeffding->second > 0.0 && hoeffding->second < 1.0))
      throw ConfigError("$.bound.hoeffding: deviation and delta must lie in (0, 1)");
  }
  prepare_out(ctx);
  const GenBound g = generalization_bound(in);
  json out{{"bound", g.value}, {"confidence", g.confidence}};
  if (hoeffding) {
    const auto m = hoeffding_sample_size(hoeffding->first, hoeffding->second);
    out["hoeffding"] = {{"deviation", hoeffding->first},
                        {"delta", hoeffding->second},
                        {"sample_size", m},
                        {"tail_at_m", hoeffding_tail(hoeffding->first, m)}};
  }
  out["provenance"] = provenance(effective_config(ctx, seed), seed);
  write_file_atomic(ctx.out_dir / "bound.json", dump_json(out));
  log << "bound: " << format_double(g.value) << " with confidence " << g.confidence << "\n";
}

int run_command(const std::string& name, const CommandContext& ctx, std::ostream& log, std::ostream& err) {
  try {
    if (name == "train") {
      run_train_command(ctx, log);
    } else if (name == "attack") {
      run_attack_command(ctx, log);
    } else if (name == "sweep") {
      run_sweep_command(ctx, log);
    } else if (name == "model-case") {
      run_model_case_command(ctx, log);
    } else if (name == "compress") {
      run_compress_command(ctx, log);
    } else if (name == "bound") {
      run_bound_command(ctx, log);
    } else {
      err << "unknown command '" << name << "'\n";
      return kExitConfig;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace capsat
