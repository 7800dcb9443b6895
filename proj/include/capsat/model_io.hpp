#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "capsat/mlp.hpp"

namespace capsat {

/// Malformed weight file. `where()` names the byte offset or JSON path.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

inline constexpr int kWeightFormatVersion = 1;

// Weight file layout:
//   {"format_version": 1, "activation": "relu"|"tanh", "dims": [n, h1, ..., k],
//    "layers": [{"w": [row-major out x in], "b": [...]}
//               | {"w_coo": [{"i": row, "j": col, "value": v}, ...], "b": [...]}]}
// Numbers are written with 17 significant digits, so a round trip is lossless.

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

/// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double v);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace capsat
