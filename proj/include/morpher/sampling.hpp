#pragma once

#include "morpher/graph.hpp"

#include <limits>
#include <span>

namespace morpher {

inline constexpr std::size_t kUnboundedHops = std::numeric_limits<std::size_t>::max();

/// Induces the subgraph on the union of the `hops`-hop neighborhoods of `centers`.
///
/// One center reformulates a node task, two centers an edge task. Nodes keep
/// their source order; the result records source ids and the centers' local
/// indices. Features are copied unmodified.
Graph induce_ego_graph(const Graph& source, std::span<const std::size_t> centers,
                       std::size_t hops);

/// Node-level task -> graph-level bundle: one ego-graph per labeled node.
DatasetBundle node_task_bundle(const Graph& source, std::span<const std::size_t> nodes,
                               std::span<const std::size_t> labels,
                               std::vector<std::string> label_texts, std::size_t hops = 2);

/// Edge-level task -> graph-level bundle: one ego-graph per labeled node pair.
DatasetBundle edge_task_bundle(const Graph& source, std::span<const Edge> pairs,
                               std::span<const std::size_t> labels,
                               std::vector<std::string> label_texts, std::size_t hops = 2);

inline constexpr std::size_t kMaxShotsPerClass = 10;

/// Few-shot protocol: per class pick `shots_per_class` graphs, split them
/// train:val as ceil(s/2):floor(s/2); everything else becomes test.
DatasetBundle few_shot_split(const DatasetBundle& bundle, std::size_t shots_per_class,
                             std::uint64_t seed);

}  // namespace morpher
