#include "morpher/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace morpher {

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, Matrix features)
    : num_nodes_(num_nodes), features_(std::move(features)) {
  if (static_cast<std::size_t>(features_.rows()) != num_nodes_) {
    throw DimensionError("graph has " + std::to_string(num_nodes_) + " nodes but " +
                         std::to_string(features_.rows()) + " feature rows");
  }
  if (!features_.allFinite()) {
    throw GraphError("graph features contain non-finite entries");
  }
  for (auto& e : edges) {
    if (e.u == e.v) {
      throw GraphError("self-loop on node " + std::to_string(e.u));
    }
    if (e.u >= num_nodes_ || e.v >= num_nodes_) {
      throw GraphError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                       ") out of range for " + std::to_string(num_nodes_) + " nodes");
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
}

void Graph::set_origin(std::vector<std::size_t> source_ids, std::vector<std::size_t> centers) {
  if (!source_ids.empty() && source_ids.size() != num_nodes_) {
    throw DimensionError("node-id map size does not match node count");
  }
  for (auto c : centers) {
    if (c >= num_nodes_) throw GraphError("center index out of range");
  }
  source_ids_ = std::move(source_ids);
  centers_ = std::move(centers);
}

std::vector<std::vector<std::size_t>> Graph::adjacency_lists() const {
  std::vector<std::vector<std::size_t>> adj(num_nodes_);
  for (const auto& e : edges_) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

Graph Graph::padded_to(std::size_t dim) const {
  if (dim < feature_dim()) {
    throw DimensionError("cannot pad " + std::to_string(feature_dim()) + " features down to " +
                         std::to_string(dim));
  }
  Matrix x = Matrix::Zero(features_.rows(), static_cast<Eigen::Index>(dim));
  x.leftCols(features_.cols()) = features_;
  Graph out(num_nodes_, edges_, std::move(x));
  out.source_ids_ = source_ids_;
  out.centers_ = centers_;
  return out;
}

std::string to_string(TaskLevel level) {
  switch (level) {
    case TaskLevel::graph: return "graph";
    case TaskLevel::node: return "node";
    case TaskLevel::edge: return "edge";
  }
  return "graph";
}

TaskLevel task_level_from_string(std::string_view name) {
  if (name == "graph") return TaskLevel::graph;
  if (name == "node") return TaskLevel::node;
  if (name == "edge") return TaskLevel::edge;
  throw ConfigError("unknown task level '" + std::string(name) + "'");
}

std::size_t DatasetBundle::feature_dim() const {
  return graphs.empty() ? 0 : graphs.front().feature_dim();
}

void DatasetBundle::validate() const {
  if (labels.size() != graphs.size()) {
    throw LabelError("label count " + std::to_string(labels.size()) + " != graph count " +
                     std::to_string(graphs.size()));
  }
  const auto c = num_classes();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= c) {
      throw LabelError("graph " + std::to_string(i) + " has class " + std::to_string(labels[i]) +
                       " but only " + std::to_string(c) + " label texts");
    }
  }
  const auto d = feature_dim();
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].feature_dim() != d) {
      throw DimensionError("graph " + std::to_string(i) + " has feature dim " +
                           std::to_string(graphs[i].feature_dim()) + ", expected " +
                           std::to_string(d));
    }
  }
  std::set<std::size_t> seen;
  for (const auto* split : {&splits.train, &splits.val, &splits.test}) {
    for (auto idx : *split) {
      if (idx >= graphs.size()) throw LabelError("split index out of range");
      if (!seen.insert(idx).second) {
        throw LabelError("graph " + std::to_string(idx) + " appears in more than one split");
      }
    }
  }
}

std::vector<const Graph*> DatasetBundle::select(std::span<const std::size_t> indices) const {
  std::vector<const Graph*> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(&graphs.at(i));
  return out;
}

std::vector<std::size_t> DatasetBundle::select_labels(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels.at(i));
  return out;
}

}  // namespace morpher
