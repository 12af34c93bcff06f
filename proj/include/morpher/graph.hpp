#pragma once

#include "morpher/common.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace morpher {

/// Undirected edge, always stored with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Sparse undirected graph with dense per-node features.
///
/// Edges are symmetrized and deduplicated on construction; a self-loop or an
/// out-of-range endpoint is rejected. Feature rows must be finite.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::vector<Edge> edges, Matrix features);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& features() const noexcept { return features_; }

  /// Index of each node in the graph it was induced from (empty for source graphs).
  const std::vector<std::size_t>& source_ids() const noexcept { return source_ids_; }
  /// Local indices of ego-graph centers (empty for source graphs).
  const std::vector<std::size_t>& centers() const noexcept { return centers_; }
  void set_origin(std::vector<std::size_t> source_ids, std::vector<std::size_t> centers);

  /// Sorted adjacency lists.
  std::vector<std::vector<std::size_t>> adjacency_lists() const;

  /// Returns a copy whose features are zero-padded on the right to `dim` columns.
  Graph padded_to(std::size_t dim) const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<std::size_t> source_ids_;
  std::vector<std::size_t> centers_;
};

enum class TaskLevel { graph, node, edge };

std::string to_string(TaskLevel level);
TaskLevel task_level_from_string(std::string_view name);

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Labeled graphs plus the ordered label-text vocabulary (index = class id).
struct DatasetBundle {
  std::vector<Graph> graphs;
  std::vector<std::size_t> labels;
  std::vector<std::string> label_texts;
  Splits splits;
  TaskLevel task_level = TaskLevel::graph;

  std::size_t num_classes() const noexcept { return label_texts.size(); }
  std::size_t feature_dim() const;

  /// Throws LabelError / DimensionError / GraphError on a broken invariant.
  void validate() const;

  std::vector<const Graph*> select(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> select_labels(std::span<const std::size_t> indices) const;
};

}  // namespace morpher
