#pragma once

#include "morpher/dataset_io.hpp"
#include "morpher/text.hpp"
#include "morpher/train.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace morpher {

namespace fs = std::filesystem;

struct DataConfig {
  std::optional<fs::path> path;
  std::optional<fs::path> labels;
  std::optional<std::size_t> pad_to;
  TaskLevel task_level = TaskLevel::graph;
  /// Re-split the loaded bundle with the few-shot sampler.
  std::optional<std::size_t> shots;
};

/// Frozen encoder: a weights file, or seeded random init (input width taken from the data).
struct GnnConfig {
  std::optional<fs::path> weights;
  std::optional<std::size_t> input_dim;
  std::size_t hidden = 64;
  std::size_t out = 32;
};

/// Label embeddings: an MTEB file, or the pseudo-encoder.
struct TextConfig {
  std::optional<fs::path> embeddings;
  std::size_t pseudo_dim = 64;
  std::vector<MidpointLabel> midpoints;
};

struct EvalConfig {
  std::optional<fs::path> state;
  std::string split = "test";
  bool silhouette = true;
};

struct ZeroShotConfig {
  std::optional<fs::path> base_edges;
  std::size_t base_nodes = 500;
  double avg_degree = 4.0;
  std::size_t num_samples = 120;
  std::size_t hops = 2;
  std::size_t train_per_class = 10;
  std::size_t num_test = 100;
  std::vector<std::string> labels = {"biology", "informatics", "bioinformatics"};
  /// Pseudo-encoder only: make the unseen label the midpoint of the two seen ones.
  bool midpoint = true;
};

struct GradcheckConfig {
  std::size_t instances = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::size_t nodes = 6;
  std::size_t batch = 3;
  std::size_t feature_dim = 5;
  std::size_t hidden = 8;
  std::size_t out = 6;
  std::size_t text_dim = 7;
  std::size_t num_classes = 3;
};

struct GenConfig {
  std::string kind = "separable";  // separable | one_hot | zero
  std::optional<fs::path> out;
  std::size_t n_graphs = 40;
  std::size_t nodes_per_graph = 8;
  std::size_t d = 4;
  std::size_t num_classes = 2;
  double noise = 0.1;
  double class_bias = 0.0;
  std::vector<std::string> labels;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool deterministic = false;
  fs::path output_dir = "out";
  DataConfig data;
  GnnConfig gnn;
  TextConfig text;
  TrainConfig train;
  EvalConfig eval;
  ZeroShotConfig zeroshot;
  GradcheckConfig gradcheck;
  GenConfig gen;
};

/// Parses a TOML config (or a JSON manifest when the text starts with '{').
/// Relative paths resolve against `base_dir`. Unknown keys throw ConfigError.
RunConfig parse_run_config(std::string_view text, const fs::path& base_dir = {});

/// Reads and parses a config file; paths resolve against its directory.
RunConfig load_run_config(const fs::path& path);

/// The fully resolved config as JSON, loadable again through load_run_config.
std::string manifest_json(const RunConfig& config, std::string_view command = {});

/// Derived per-consumer seeds, so every random stream has its own name.
std::uint64_t consumer_seed(const RunConfig& config, std::string_view consumer);

}  // namespace morpher
