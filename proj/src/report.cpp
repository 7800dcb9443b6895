#include "capsat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "capsat/model_io.hpp"

namespace capsat {

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols{
      "point_index", "label",     "r",      "t",          "mu",
      "mu_stderr",   "psi",       "psi_stderr", "tau",    "raw_ratio",
      "d_median",    "iso_rhs",   "iso_perimetric_saturation", "flat_tau_reference",
      "pgd_failures", "flagged"};
  return cols;
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

double parse_num(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_num(s);
}

}  // namespace

std::string records_to_csv(const std::vector<SaturationRecord>& records) {
  std::string out;
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.point_index) + ',' + std::to_string(r.label) + ',' + num(r.r) + ',' +
           num(r.t) + ',' + num(r.mu) + ',' + num(r.mu_stderr) + ',' + num(r.psi) + ',' +
           num(r.psi_stderr) + ',' + opt(r.tau) + ',' + opt(r.raw_ratio) + ',' + num(r.d_median) +
           ',' + num(r.iso_rhs) + ',' + opt(r.iso_perimetric_saturation) + ',' +
           opt(r.flat_tau_reference) + ',' + std::to_string(r.pgd_failures) + ',' +
           (r.flagged ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<SaturationRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("records.csv:1", "missing header");
  std::string expected;
  for (const auto& c : record_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw ParseError("records.csv:1", "unexpected header");
  std::vector<SaturationRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const std::string where = "records.csv:" + std::to_string(line_no);
    if (f.size() != record_columns().size()) throw ParseError(where, "wrong field count");
    try {
      SaturationRecord r;
      r.point_index = std::stoull(f[0]);
      r.label = std::stoull(f[1]);
      r.r = parse_num(f[2]);
      r.t = parse_num(f[3]);
      r.mu = parse_num(f[4]);
      r.mu_stderr = parse_num(f[5]);
      r.psi = parse_num(f[6]);
      r.psi_stderr = parse_num(f[7]);
      r.tau = parse_opt(f[8]);
      r.raw_ratio = parse_opt(f[9]);
      r.d_median = parse_num(f[10]);
      r.iso_rhs = parse_num(f[11]);
      r.iso_perimetric_saturation = parse_opt(f[12]);
      r.flat_tau_reference = parse_opt(f[13]);
      r.pgd_failures = std::stoull(f[14]);
      r.flagged = f[15] == "1";
      out.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw ParseError(where, e.what());
    } catch (const std::out_of_range& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  if (lo == hi || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Quartiles summarize(std::vector<double> values) {
  Quartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  q.mean = sum / static_cast<double>(values.size());
  q.min = values.front();
  q.max = values.back();
  q.q1 = quantile_sorted(values, 0.25);
  q.median = quantile_sorted(values, 0.5);
  q.q3 = quantile_sorted(values, 0.75);
  return q;
}

namespace {

nlohmann::json quartile_json(const Quartiles& q) {
  nlohmann::json j{{"count", q.count}};
  if (q.count == 0) return j;
  // Non-finite values are not representable in JSON; report them as null.
  auto val = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j["mean"] = val(q.mean);
  j["min"] = val(q.min);
  j["q1"] = val(q.q1);
  j["median"] = val(q.median);
  j["q3"] = val(q.q3);
  j["max"] = val(q.max);
  return j;
}

}  // namespace

nlohmann::json summarize_records(const std::vector<SaturationRecord>& records,
                                 std::size_t skipped_misclassified, std::size_t failures) {
  std::vector<double> r, mu, psi, tau_v, raw, dmed, iso;
  std::size_t tau_gt_10 = 0;
  for (const auto& rec : records) {
    r.push_back(rec.r);
    mu.push_back(rec.mu);
    psi.push_back(rec.psi);
    if (rec.tau) {
      tau_v.push_back(*rec.tau);
      if (*rec.tau > 10.0) ++tau_gt_10;
    }
    if (rec.raw_ratio) raw.push_back(*rec.raw_ratio);
    dmed.push_back(rec.d_median);
    if (rec.iso_perimetric_saturation) iso.push_back(*rec.iso_perimetric_saturation);
  }
  nlohmann::json s;
  s["counts"] = {{"records", records.size()},
                 {"skipped_misclassified", skipped_misclassified},
                 {"failures", failures}};
  s["metrics"] = {{"r", quartile_json(summarize(r))},
                  {"mu", quartile_json(summarize(mu))},
                  {"psi", quartile_json(summarize(psi))},
                  {"tau", quartile_json(summarize(tau_v))},
                  {"raw_ratio", quartile_json(summarize(raw))},
                  {"d_median", quartile_json(summarize(dmed))},
                  {"iso_perimetric_saturation", quartile_json(summarize(iso))}};
  s["tau_gt_10_fraction"] =
      tau_v.empty() ? 0.0 : static_cast<double>(tau_gt_10) / static_cast<double>(tau_v.size());
  return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json provenance(const nlohmann::json& config, std::uint64_t seed) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return {{"config_hash", hash},
          {"seed", seed},
          {"tool_version", kToolVersion},
          {"records_format", kRecordsFormatVersion}};
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace capsat
