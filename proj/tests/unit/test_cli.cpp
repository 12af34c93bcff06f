#include "helpers.hpp"

#include "morpher/commands.hpp"
#include "morpher/state_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>

using namespace morpher;
using morpher::testing::read_file;
using morpher::testing::TempDir;
using morpher::testing::write_file;

namespace {

std::string train_toml(const std::filesystem::path& out) {
  return "seed = 3\n"
         "output_dir = \"" + out.string() + "\"\n"
         "[data]\npath = \"data.jsonl\"\nshots = 6\n"
         "[gnn]\nhidden = 16\nout = 8\n"
         "[text]\npseudo_dim = 12\n"
         "[train]\nepochs = 8\nbatch_size = 2\n"
         "[prompt]\nnum_graph_tokens = 4\nnum_text_tokens = 2\n"
         "[gen]\nkind = \"separable\"\nout = \"data.jsonl\"\nn_graphs = 16\nnodes_per_graph = 5\nd = 3\n";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MORPHER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK_NOTHROW(parse_run_config("seed = 1\n"));
  CHECK_THROWS_AS(parse_run_config("seed = 1\nsede = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[train]\nepoch = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[train]\nepochs = -3\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[train]\nmode = \"nope\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[train]\ntau = 0.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n[eval]\nsplit = \"holdout\"\n"), ConfigError);
}

TEST_CASE("config values and relative paths") {
  const auto c = parse_run_config(
      "seed = 5\nthreads = 2\n[data]\npath = \"d/x.jsonl\"\n[train]\nmode = \"aio_head\"\nepochs = 7\n"
      "[prompt]\ndelta_cross = 0.25\ninit = \"normal\"\n[options]\ncenter_labels = false\n"
      "[text]\nmidpoints = [{label = \"m\", left = \"a\", right = \"b\"}]\n",
      "/base");
  CHECK(c.seed == 5);
  CHECK(c.threads == 2);
  CHECK(c.train.threads == 2);
  CHECK(*c.data.path == std::filesystem::path("/base/d/x.jsonl"));
  CHECK(c.train.mode == Mode::aio_head);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.delta_cross() == 0.25);
  CHECK(c.train.prompt.init == PromptInit::normal);
  CHECK(!c.train.options.center_labels);
  REQUIRE(c.text.midpoints.size() == 1);
  CHECK(c.text.midpoints[0].right == "b");
  CHECK(c.train.seed == consumer_seed(c, "train"));
}

TEST_CASE("the manifest reloads to the same configuration") {
  const auto c = parse_run_config(
      "seed = 8\n[train]\nepochs = 9\nlearning_rate = 0.003\n[prompt]\ntext_seed_phrase = \"a graph\"\n"
      "[zeroshot]\nlabels = [\"x\", \"y\", \"z\"]\n",
      "/tmp");
  const auto manifest = manifest_json(c, "train");
  const auto back = parse_run_config(manifest);
  CHECK(manifest_json(back, "train") == manifest);
  CHECK(back.train.adam.learning_rate == 0.003);
  CHECK(*back.train.prompt.text_seed_phrase == "a graph");
  CHECK(back.zeroshot.labels == std::vector<std::string>{"x", "y", "z"});
  CHECK(nlohmann::json::parse(manifest)["command"] == "train");
}

TEST_CASE("cmd_gradcheck passes on a small run") {
  auto c = parse_run_config("seed = 1\n[gradcheck]\ninstances = 3\n");
  TempDir dir("gc");
  c.output_dir = dir.path();
  CHECK(cmd_gradcheck(c) == 0);
  CHECK(std::filesystem::exists(dir / "manifest_gradcheck.json"));
}

TEST_CASE("gen, train and eval through the library") {
  TempDir dir("cli_lib");
  write_file(dir / "run.toml", train_toml(dir.path()));
  const auto c = load_run_config(dir / "run.toml");
  REQUIRE(cmd_gen(c) == 0);
  REQUIRE(cmd_train(c) == 0);
  const auto first = read_file(dir / "state.mpst");
  REQUIRE(cmd_train(c) == 0);
  CHECK(read_file(dir / "state.mpst") == first);
  CHECK(std::filesystem::exists(dir / "history.csv"));
  CHECK(std::filesystem::exists(dir / "manifest_train.json"));
  const auto report = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(report["trainable_parameters"] == 4 * 3 + 2 * 12 + 12 * 8 + 12);

  REQUIRE(cmd_eval(c) == 0);
  CHECK(std::filesystem::exists(dir / "eval_report.json"));

  // The reloaded manifest trains to the same bytes.
  const auto again = load_run_config(dir / "manifest_train.json");
  REQUIRE(cmd_train(again) == 0);
  CHECK(read_file(dir / "state.mpst") == first);
}

TEST_CASE("the CLI binary reports errors through its exit code") {
  TempDir dir("cli_bin");
  write_file(dir / "run.toml", train_toml(dir.path()));
  const auto cfg = (dir / "run.toml").string();
  REQUIRE(run_cli("gen --config " + cfg) == 0);
  REQUIRE(run_cli("train --config " + cfg + " --deterministic") == 0);
  const auto first = read_file(dir / "state.mpst");
  REQUIRE(run_cli("train --config " + cfg + " --threads 3") == 0);
  CHECK(read_file(dir / "state.mpst") == first);
  CHECK(run_cli("eval --config " + cfg) == 0);

  // Evaluating the saved state against a wider text space fails.
  auto text = train_toml(dir.path());
  text.replace(text.find("pseudo_dim = 12"), 15, "pseudo_dim = 13");
  write_file(dir / "wide.toml", text);
  CHECK(run_cli("eval --config " + (dir / "wide.toml").string()) != 0);

  CHECK(run_cli("train --config " + (dir / "missing.toml").string()) != 0);
  CHECK(run_cli("frobnicate") != 0);
  write_file(dir / "typo.toml", "seed = 1\n[train]\nepoch = 2\n");
  CHECK(run_cli("gradcheck --config " + (dir / "typo.toml").string()) != 0);
}
