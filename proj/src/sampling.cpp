#include "morpher/sampling.hpp"

#include "morpher/rng.hpp"

#include <algorithm>
#include <deque>

namespace morpher {

Graph induce_ego_graph(const Graph& source, std::span<const std::size_t> centers,
                       std::size_t hops) {
  if (centers.empty()) throw GraphError("ego-graph needs at least one center");
  const auto n = source.num_nodes();
  for (auto c : centers) {
    if (c >= n) throw GraphError("center " + std::to_string(c) + " out of range");
  }

  const auto adj = source.adjacency_lists();
  constexpr auto kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, kUnseen);
  std::deque<std::size_t> frontier;
  for (auto c : centers) {
    if (dist[c] == kUnseen) {
      dist[c] = 0;
      frontier.push_back(c);
    }
  }
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    if (dist[u] == hops) continue;
    for (auto v : adj[u]) {
      if (dist[v] == kUnseen) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }

  std::vector<std::size_t> local(n, kUnseen);
  std::vector<std::size_t> kept;
  for (std::size_t v = 0; v < n; ++v) {
    if (dist[v] != kUnseen) {
      local[v] = kept.size();
      kept.push_back(v);
    }
  }

  std::vector<Edge> edges;
  for (const auto& e : source.edges()) {
    if (local[e.u] != kUnseen && local[e.v] != kUnseen) edges.push_back({local[e.u], local[e.v]});
  }
  Matrix x(static_cast<Eigen::Index>(kept.size()), source.features().cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = source.features().row(static_cast<Eigen::Index>(kept[i]));
  }

  std::vector<std::size_t> center_locals;
  for (auto c : centers) {
    if (std::find(center_locals.begin(), center_locals.end(), local[c]) == center_locals.end()) {
      center_locals.push_back(local[c]);
    }
  }
  Graph out(kept.size(), std::move(edges), std::move(x));
  out.set_origin(std::move(kept), std::move(center_locals));
  return out;
}

DatasetBundle node_task_bundle(const Graph& source, std::span<const std::size_t> nodes,
                               std::span<const std::size_t> labels,
                               std::vector<std::string> label_texts, std::size_t hops) {
  if (nodes.size() != labels.size()) throw LabelError("one label per node required");
  DatasetBundle bundle;
  bundle.task_level = TaskLevel::node;
  bundle.label_texts = std::move(label_texts);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t center[] = {nodes[i]};
    bundle.graphs.push_back(induce_ego_graph(source, center, hops));
    bundle.labels.push_back(labels[i]);
  }
  bundle.validate();
  return bundle;
}

DatasetBundle edge_task_bundle(const Graph& source, std::span<const Edge> pairs,
                               std::span<const std::size_t> labels,
                               std::vector<std::string> label_texts, std::size_t hops) {
  if (pairs.size() != labels.size()) throw LabelError("one label per edge required");
  DatasetBundle bundle;
  bundle.task_level = TaskLevel::edge;
  bundle.label_texts = std::move(label_texts);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::size_t centers[] = {pairs[i].u, pairs[i].v};
    bundle.graphs.push_back(induce_ego_graph(source, centers, hops));
    bundle.labels.push_back(labels[i]);
  }
  bundle.validate();
  return bundle;
}

DatasetBundle few_shot_split(const DatasetBundle& bundle, std::size_t shots_per_class,
                             std::uint64_t seed) {
  if (shots_per_class == 0 || shots_per_class > kMaxShotsPerClass) {
    throw LabelError("shots per class must be in [1, " + std::to_string(kMaxShotsPerClass) + "]");
  }
  bundle.validate();
  const auto c = bundle.num_classes();
  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < bundle.labels.size(); ++i) by_class[bundle.labels[i]].push_back(i);

  Rng rng(seed);
  DatasetBundle out = bundle;
  out.splits = {};
  std::vector<bool> picked(bundle.graphs.size(), false);
  const std::size_t n_train = (shots_per_class + 1) / 2;
  for (std::size_t k = 0; k < c; ++k) {
    auto& members = by_class[k];
    if (members.size() < shots_per_class) {
      throw LabelError("class " + std::to_string(k) + " ('" + bundle.label_texts[k] + "') has " +
                       std::to_string(members.size()) + " samples, need " +
                       std::to_string(shots_per_class));
    }
    rng.shuffle(members);
    for (std::size_t s = 0; s < shots_per_class; ++s) {
      (s < n_train ? out.splits.train : out.splits.val).push_back(members[s]);
      picked[members[s]] = true;
    }
  }
  for (std::size_t i = 0; i < bundle.graphs.size(); ++i) {
    if (!picked[i]) out.splits.test.push_back(i);
  }
  std::sort(out.splits.train.begin(), out.splits.train.end());
  std::sort(out.splits.val.begin(), out.splits.val.end());
  return out;
}

}  // namespace morpher
