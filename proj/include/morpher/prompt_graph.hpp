#pragma once

#include "morpher/graph.hpp"

namespace morpher {

/// How cross-connections between input nodes and prompt tokens are decided.
enum class PromptStyle {
  /// Dense: sigmoid(x·p) > delta_cross for every node/token pair.
  aio,
  /// Balanced: per node, keep at most max(1, floor(n_e / n)) tokens ranked by
  /// cosine similarity, each above delta_cross.
  improved,
};

std::string to_string(PromptStyle style);
PromptStyle prompt_style_from_string(std::string_view name);

/// Learnable prompt tokens, each one an extra node with a d-dimensional feature.
struct GraphPrompt {
  Matrix tokens;  // n_g x d
  double delta_inner = 0.5;
  double delta_cross = 0.1;
  double init_std_multiplier = 1.0;

  std::size_t num_tokens() const noexcept { return static_cast<std::size_t>(tokens.rows()); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(tokens.cols()); }
  void validate() const;
};

/// Kaiming-uniform tokens in [-m·sqrt(6/d), m·sqrt(6/d)] with m = std_multiplier.
GraphPrompt init_graph_prompt(std::size_t num_tokens, std::size_t d, std::uint64_t seed,
                              double std_multiplier = 1.0);

/// Gaussian tokens with the given standard deviation (the "near zero" AIO init).
GraphPrompt init_graph_prompt_normal(std::size_t num_tokens, std::size_t d, std::uint64_t seed,
                                     double stddev);

/// Input graph merged with the prompt graph. Node layout: the n_g prompt tokens
/// first, then the n input nodes, so features are [P; X].
struct PromptedGraph {
  std::size_t num_tokens = 0;
  std::size_t num_input_nodes = 0;
  /// Edges in merged indexing, u < v, sorted.
  std::vector<Edge> edges;
  std::size_t inner_edge_count = 0;
  std::size_t cross_edge_count = 0;
  Matrix features;

  std::size_t num_nodes() const noexcept { return num_tokens + num_input_nodes; }
  /// Symmetric 0/1 adjacency without self-loops.
  SparseMatrix adjacency() const;
  /// Replaces the prompt rows of the features; the structure stays as built.
  void set_prompt_features(const Matrix& tokens);
};

PromptedGraph build_aio(const Graph& graph, const GraphPrompt& prompt);
PromptedGraph build_improved(const Graph& graph, const GraphPrompt& prompt);
PromptedGraph build_prompted(const Graph& graph, const GraphPrompt& prompt, PromptStyle style);

}  // namespace morpher
