#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "capsat/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decision-boundary geometry via Brownian hitting probabilities"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 1;
  app.add_option("--config", config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Global seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));

  for (const char* name : {"train", "attack", "sweep", "model-case", "compress", "bound"})
    app.add_subcommand(name, std::string("Run the ") + name + " command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : capsat::kExitConfig;
  }

  capsat::CommandContext ctx;
  try {
    ctx.config = capsat::read_config_file(config_path);
  } catch (const capsat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return capsat::kExitConfig;
  }
  ctx.base_dir = std::filesystem::path(config_path).parent_path();
  if (ctx.base_dir.empty()) ctx.base_dir = ".";
  ctx.seed_override = seed;
  ctx.out_dir = out_dir;
  ctx.threads = threads;
  return capsat::run_command(app.get_subcommands().front()->get_name(), ctx, std::cout, std::cerr);
}
