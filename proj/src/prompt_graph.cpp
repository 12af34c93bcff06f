#include "morpher/prompt_graph.hpp"

#include "morpher/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morpher {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_dims(const Graph& graph, const GraphPrompt& prompt) {
  prompt.validate();
  if (graph.feature_dim() != prompt.feature_dim()) {
    throw DimensionError("graph feature dim " + std::to_string(graph.feature_dim()) +
                         " != prompt token dim " + std::to_string(prompt.feature_dim()));
  }
}

/// Inner edges, the original edges shifted past the tokens, and the stacked features.
PromptedGraph merge_base(const Graph& graph, const GraphPrompt& prompt) {
  PromptedGraph out;
  const auto ng = prompt.num_tokens();
  out.num_tokens = ng;
  out.num_input_nodes = graph.num_nodes();
  for (std::size_t i = 0; i < ng; ++i) {
    for (std::size_t j = i + 1; j < ng; ++j) {
      const double s = prompt.tokens.row(static_cast<Eigen::Index>(i))
                           .dot(prompt.tokens.row(static_cast<Eigen::Index>(j)));
      if (sigmoid(s) > prompt.delta_inner) out.edges.push_back({i, j});
    }
  }
  out.inner_edge_count = out.edges.size();
  for (const auto& e : graph.edges()) out.edges.push_back({e.u + ng, e.v + ng});

  out.features.resize(static_cast<Eigen::Index>(out.num_nodes()), graph.features().cols());
  out.features.topRows(static_cast<Eigen::Index>(ng)) = prompt.tokens;
  out.features.bottomRows(graph.features().rows()) = graph.features();
  return out;
}

void finish(PromptedGraph& out, std::vector<Edge> cross) {
  out.cross_edge_count = cross.size();
  out.edges.insert(out.edges.end(), cross.begin(), cross.end());
  std::sort(out.edges.begin(), out.edges.end());
}

}  // namespace

std::string to_string(PromptStyle style) {
  return style == PromptStyle::aio ? "aio" : "improved";
}

PromptStyle prompt_style_from_string(std::string_view name) {
  if (name == "aio") return PromptStyle::aio;
  if (name == "improved") return PromptStyle::improved;
  throw ConfigError("unknown prompt style '" + std::string(name) + "'");
}

void GraphPrompt::validate() const {
  if (tokens.rows() < 1 || tokens.cols() < 1) throw DimensionError("graph prompt needs n_g, d >= 1");
  if (!(delta_inner > 0.0 && delta_inner < 1.0)) {
    throw ConfigError("delta_inner must lie in (0, 1)");
  }
  if (!tokens.allFinite()) throw DimensionError("graph prompt has non-finite entries");
}

GraphPrompt init_graph_prompt(std::size_t num_tokens, std::size_t d, std::uint64_t seed,
                              double std_multiplier) {
  if (num_tokens < 1 || d < 1) throw DimensionError("graph prompt needs n_g, d >= 1");
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(d));
  GraphPrompt p;
  p.init_std_multiplier = std_multiplier;
  p.tokens.resize(static_cast<Eigen::Index>(num_tokens), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.tokens.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.tokens.cols(); ++j) {
      p.tokens(i, j) = rng.uniform(-bound, bound) * std_multiplier;
    }
  }
  return p;
}

GraphPrompt init_graph_prompt_normal(std::size_t num_tokens, std::size_t d, std::uint64_t seed,
                                     double stddev) {
  if (num_tokens < 1 || d < 1) throw DimensionError("graph prompt needs n_g, d >= 1");
  Rng rng(seed);
  GraphPrompt p;
  p.tokens.resize(static_cast<Eigen::Index>(num_tokens), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.tokens.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.tokens.cols(); ++j) p.tokens(i, j) = rng.normal(0.0, stddev);
  }
  return p;
}

SparseMatrix PromptedGraph::adjacency() const {
  const auto n = static_cast<Eigen::Index>(num_nodes());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    triplets.emplace_back(static_cast<Eigen::Index>(e.u), static_cast<Eigen::Index>(e.v), 1.0);
    triplets.emplace_back(static_cast<Eigen::Index>(e.v), static_cast<Eigen::Index>(e.u), 1.0);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

void PromptedGraph::set_prompt_features(const Matrix& tokens) {
  if (static_cast<std::size_t>(tokens.rows()) != num_tokens || tokens.cols() != features.cols()) {
    throw DimensionError("prompt feature block has the wrong shape");
  }
  features.topRows(tokens.rows()) = tokens;
}

PromptedGraph build_aio(const Graph& graph, const GraphPrompt& prompt) {
  check_dims(graph, prompt);
  auto out = merge_base(graph, prompt);
  const auto ng = prompt.num_tokens();
  const Matrix scores = graph.features() * prompt.tokens.transpose();
  std::vector<Edge> cross;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (sigmoid(scores(i, j)) > prompt.delta_cross) {
        cross.push_back({static_cast<std::size_t>(j), static_cast<std::size_t>(i) + ng});
      }
    }
  }
  finish(out, std::move(cross));
  return out;
}

PromptedGraph build_improved(const Graph& graph, const GraphPrompt& prompt) {
  check_dims(graph, prompt);
  auto out = merge_base(graph, prompt);
  const auto n = graph.num_nodes();
  const auto ng = prompt.num_tokens();
  std::vector<Edge> cross;
  if (n == 0) {
    finish(out, std::move(cross));
    return out;
  }
  const std::size_t cap = std::max<std::size_t>(1, graph.num_edges() / n);

  const Vector token_norms = prompt.tokens.rowwise().norm();
  const Matrix dots = graph.features() * prompt.tokens.transpose();
  std::vector<std::size_t> order(ng);
  std::vector<double> cosine(ng);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double x_norm = graph.features().row(row).norm();
    for (std::size_t j = 0; j < ng; ++j) {
      const double denom = x_norm * token_norms(static_cast<Eigen::Index>(j));
      cosine[j] = denom > 0.0 ? dots(row, static_cast<Eigen::Index>(j)) / denom : 0.0;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cosine[a] > cosine[b]; });
    std::size_t kept = 0;
    for (auto j : order) {
      if (kept == cap || !(cosine[j] > prompt.delta_cross)) break;
      cross.push_back({j, i + ng});
      ++kept;
    }
  }
  finish(out, std::move(cross));
  return out;
}

PromptedGraph build_prompted(const Graph& graph, const GraphPrompt& prompt, PromptStyle style) {
  return style == PromptStyle::aio ? build_aio(graph, prompt) : build_improved(graph, prompt);
}

}  // namespace morpher
