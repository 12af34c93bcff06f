#pragma once

#include "morpher/graph.hpp"

#include <optional>

namespace morpher {

/// Synthetic novel-class dataset built on a real (or random) network.
struct ZeroShotSpec {
  std::vector<Edge> base_edges;
  /// Node count of the base network; defaults to max endpoint + 1.
  std::optional<std::size_t> base_num_nodes;
  std::size_t num_samples = 120;
  std::size_t hops = 2;
  std::size_t train_per_class = 10;
  std::size_t num_test = 100;
  /// Two seen classes followed by the unseen one.
  std::vector<std::string> label_texts = {"biology", "informatics", "bioinformatics"};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Samples `num_samples` distinct centers, induces their ego-graphs and replaces
/// the features: the first `train_per_class` graphs get [1,0] everywhere (class 0),
/// the next `train_per_class` get [0,1] (class 1), the rest get a uniformly random
/// one-hot row per node (class 2). Splits: train = the 2·train_per_class seen
/// graphs, val = empty, test = the rest.
DatasetBundle generate_zero_dataset(const ZeroShotSpec& spec);

/// Graphs whose class-c node features are e_c plus Gaussian noise of scale `noise`.
/// Structure is a random spanning tree plus a few random chords. All graphs go to test.
DatasetBundle generate_separable_dataset(std::size_t n_graphs, std::size_t nodes_per_graph,
                                         std::size_t d, std::size_t num_classes,
                                         std::uint64_t seed, double noise = 0.1);

/// Graphs whose node features are one-hot rows (L1 norm 1). With probability
/// `class_bias` a class-c node takes category c, otherwise a uniform category.
/// class_bias = 0 gives label-independent random features. All graphs go to test.
DatasetBundle generate_one_hot_dataset(std::size_t n_graphs, std::size_t nodes_per_graph,
                                       std::size_t d, std::size_t num_classes,
                                       std::uint64_t seed, double class_bias = 0.0);

/// Erdős–Rényi-style network with round(n·avg_degree/2) distinct random edges.
std::vector<Edge> generate_random_network(std::size_t num_nodes, double avg_degree,
                                          std::uint64_t seed);

}  // namespace morpher
