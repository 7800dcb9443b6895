#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace capsat {

/// Invalid or unresolvable configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandContext {
  nlohmann::json config = nlohmann::json::object();
  /// Relative paths in the config resolve against this directory.
  std::filesystem::path base_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

// Each command validates its configuration before doing any work, writes its
// artifacts into out_dir and prints a short human summary to `log`.
void run_train_command(const CommandContext& ctx, std::ostream& log);
void run_attack_command(const CommandContext& ctx, std::ostream& log);
void run_sweep_command(const CommandContext& ctx, std::ostream& log);
void run_model_case_command(const CommandContext& ctx, std::ostream& log);
void run_compress_command(const CommandContext& ctx, std::ostream& log);
void run_bound_command(const CommandContext& ctx, std::ostream& log);

/// Dispatches by subcommand name and maps exceptions to exit codes.
int run_command(const std::string& name, const CommandContext& ctx, std::ostream& log,
                std::ostream& err);

/// Reads a JSON config file; throws ConfigError on I/O or syntax errors.
nlohmann::json read_config_file(const std::filesystem::path& path);

}  // namespace capsat
