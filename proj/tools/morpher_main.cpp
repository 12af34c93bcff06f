#include "morpher/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void configure_logging() {
  spdlog::set_level(spdlog::level::info);
  const char* env = std::getenv("MORPHER_LOG");
  if (!env) return;
  const std::string level = env;
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("ignoring MORPHER_LOG='{}' (expected error, info or debug)", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Graph and text prompt tuning against frozen encoders"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool deterministic = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "train prompts and projector (or a task-head baseline)"},
      {"eval", "evaluate a saved prompt state"},
      {"zeroshot", "novel-class protocol on a synthetic dataset"},
      {"gradcheck", "finite-difference check of every parameter block"},
      {"gen", "write a synthetic dataset"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "TOML config or JSON manifest")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", deterministic, "single-threaded, fixed reduction order");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = morpher::load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (deterministic) {
      config.deterministic = true;
      config.threads = 1;
    }
    config.train.seed = morpher::consumer_seed(config, "train");
    config.train.threads = config.threads;

    const auto name = app.get_subcommands().front()->get_name();
    if (name == "train") return morpher::cmd_train(config);
    if (name == "eval") return morpher::cmd_eval(config);
    if (name == "zeroshot") return morpher::cmd_zeroshot(config);
    if (name == "gradcheck") return morpher::cmd_gradcheck(config);
    return morpher::cmd_gen(config);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
