#include "morpher/generators.hpp"

#include "morpher/rng.hpp"
#include "morpher/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace morpher {

namespace {

std::size_t base_node_count(const ZeroShotSpec& spec) {
  if (spec.base_num_nodes) return *spec.base_num_nodes;
  std::size_t n = 0;
  for (const auto& e : spec.base_edges) n = std::max({n, e.u + 1, e.v + 1});
  return n;
}

std::vector<Edge> random_tree_with_chords(std::size_t n, std::size_t chords, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) edges.push_back({rng.below(v), v});
  for (std::size_t k = 0; k < chords && n > 2; ++k) {
    const auto u = rng.below(n);
    const auto v = rng.below(n);
    if (u != v) edges.push_back({std::min(u, v), std::max(u, v)});
  }
  return edges;
}

}  // namespace

void ZeroShotSpec::validate() const {
  if (label_texts.size() != 3) throw ConfigError("zero-shot spec needs exactly 3 label texts");
  if (train_per_class == 0) throw ConfigError("train_per_class must be positive");
  if (num_samples != 2 * train_per_class + num_test) {
    throw ConfigError("num_samples must equal 2 * train_per_class + num_test");
  }
}

DatasetBundle generate_zero_dataset(const ZeroShotSpec& spec) {
  spec.validate();
  const auto n = base_node_count(spec);
  if (n < spec.num_samples) {
    throw GraphError("base network has " + std::to_string(n) + " nodes, need at least " +
                     std::to_string(spec.num_samples));
  }
  // Base features are irrelevant: every ego-graph gets its features replaced.
  const Graph base(n, spec.base_edges, Matrix::Zero(static_cast<Eigen::Index>(n), 2));

  Rng rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  DatasetBundle bundle;
  bundle.task_level = TaskLevel::node;
  bundle.label_texts = spec.label_texts;
  for (std::size_t s = 0; s < spec.num_samples; ++s) {
    const std::size_t center[] = {order[s]};
    Graph ego = induce_ego_graph(base, center, spec.hops);
    const auto rows = static_cast<Eigen::Index>(ego.num_nodes());
    Matrix x = Matrix::Zero(rows, 2);
    std::size_t label = 2;
    if (s < spec.train_per_class) {
      x.col(0).setOnes();
      label = 0;
    } else if (s < 2 * spec.train_per_class) {
      x.col(1).setOnes();
      label = 1;
    } else {
      for (Eigen::Index r = 0; r < rows; ++r) x(r, static_cast<Eigen::Index>(rng.below(2))) = 1.0;
    }
    Graph g(ego.num_nodes(), ego.edges(), std::move(x));
    g.set_origin(ego.source_ids(), ego.centers());
    (label == 2 ? bundle.splits.test : bundle.splits.train).push_back(bundle.graphs.size());
    bundle.graphs.push_back(std::move(g));
    bundle.labels.push_back(label);
  }
  bundle.validate();
  return bundle;
}

DatasetBundle generate_separable_dataset(std::size_t n_graphs, std::size_t nodes_per_graph,
                                         std::size_t d, std::size_t num_classes,
                                         std::uint64_t seed, double noise) {
  if (num_classes == 0 || num_classes > d) {
    throw DimensionError("separable dataset needs 1 <= C <= d (C=" + std::to_string(num_classes) +
                         ", d=" + std::to_string(d) + ")");
  }
  if (nodes_per_graph == 0) throw GraphError("graphs need at least one node");
  Rng rng(seed);
  DatasetBundle bundle;
  for (std::size_t c = 0; c < num_classes; ++c) bundle.label_texts.push_back("class " + std::to_string(c));
  for (std::size_t i = 0; i < n_graphs; ++i) {
    const auto label = i % num_classes;
    const auto rows = static_cast<Eigen::Index>(nodes_per_graph);
    Matrix x(rows, static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = noise * rng.normal();
      x(r, static_cast<Eigen::Index>(label)) += 1.0;
    }
    auto edges = random_tree_with_chords(nodes_per_graph, nodes_per_graph / 4, rng);
    bundle.graphs.emplace_back(nodes_per_graph, std::move(edges), std::move(x));
    bundle.labels.push_back(label);
    bundle.splits.test.push_back(i);
  }
  bundle.validate();
  return bundle;
}

DatasetBundle generate_one_hot_dataset(std::size_t n_graphs, std::size_t nodes_per_graph,
                                       std::size_t d, std::size_t num_classes,
                                       std::uint64_t seed, double class_bias) {
  if (num_classes == 0 || (class_bias > 0.0 && num_classes > d)) {
    throw DimensionError("one-hot dataset with class bias needs 1 <= C <= d");
  }
  if (nodes_per_graph == 0) throw GraphError("graphs need at least one node");
  Rng rng(seed);
  DatasetBundle bundle;
  for (std::size_t c = 0; c < num_classes; ++c) bundle.label_texts.push_back("class " + std::to_string(c));
  for (std::size_t i = 0; i < n_graphs; ++i) {
    const auto label = i % num_classes;
    const auto rows = static_cast<Eigen::Index>(nodes_per_graph);
    Matrix x = Matrix::Zero(rows, static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto category = rng.uniform() < class_bias ? label : rng.below(d);
      x(r, static_cast<Eigen::Index>(category)) = 1.0;
    }
    auto edges = random_tree_with_chords(nodes_per_graph, nodes_per_graph / 4, rng);
    bundle.graphs.emplace_back(nodes_per_graph, std::move(edges), std::move(x));
    bundle.labels.push_back(label);
    bundle.splits.test.push_back(i);
  }
  bundle.validate();
  return bundle;
}

std::vector<Edge> generate_random_network(std::size_t num_nodes, double avg_degree,
                                          std::uint64_t seed) {
  if (num_nodes < 2) return {};
  const auto max_edges = num_nodes * (num_nodes - 1) / 2;
  const auto target = std::min<std::size_t>(
      max_edges, static_cast<std::size_t>(std::llround(num_nodes * avg_degree / 2.0)));
  Rng rng(seed);
  std::set<Edge> edges;
  while (edges.size() < target) {
    const auto u = rng.below(num_nodes);
    const auto v = rng.below(num_nodes);
    if (u != v) edges.insert({std::min(u, v), std::max(u, v)});
  }
  return {edges.begin(), edges.end()};
}

}  // namespace morpher
