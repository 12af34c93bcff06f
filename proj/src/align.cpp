#include "morpher/align.hpp"

#include "morpher/parallel.hpp"

#include <cmath>

namespace morpher {

namespace {

void check_structures(const Batch& batch, std::span<const PromptedGraph> structures) {
  if (batch.graphs.size() != batch.labels.size()) {
    throw DimensionError("batch has " + std::to_string(batch.graphs.size()) + " graphs but " +
                         std::to_string(batch.labels.size()) + " labels");
  }
  if (batch.graphs.empty()) throw DimensionError("empty batch");
  if (!structures.empty() && structures.size() != batch.graphs.size()) {
    throw DimensionError("structure count does not match batch size");
  }
}

const PromptedGraph* structure_at(std::span<const PromptedGraph> structures, std::size_t i) {
  return structures.empty() ? nullptr : &structures[i];
}

std::vector<Vector> pick_text(const TextBranch& text, const std::vector<std::size_t>& labels) {
  std::vector<Vector> out;
  out.reserve(labels.size());
  for (auto y : labels) {
    if (y >= text.z().size()) throw LabelError("class index outside the candidate labels");
    out.push_back(text.z()[y]);
  }
  return out;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::morpher: return "morpher";
    case Mode::improved_aio_head: return "improved_aio_head";
    case Mode::aio_head: return "aio_head";
  }
  return "morpher";
}

Mode mode_from_string(std::string_view name) {
  if (name == "morpher") return Mode::morpher;
  if (name == "improved_aio_head") return Mode::improved_aio_head;
  if (name == "aio_head") return Mode::aio_head;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void PromptState::validate(const FrozenGnn& gnn, const TextEmbeddingStore* store) const {
  graph_prompt.validate();
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (graph_prompt.feature_dim() != gnn.input_dim()) {
    throw DimensionError("graph prompt width " + std::to_string(graph_prompt.feature_dim()) +
                         " != GCN input dim " + std::to_string(gnn.input_dim()));
  }
  if (mode == Mode::morpher) {
    const auto dt = text_prompt.embedding_dim();
    if (text_prompt.num_tokens() < 1) throw DimensionError("text prompt needs n_t >= 1");
    if (static_cast<std::size_t>(proj_weight.rows()) != dt ||
        static_cast<std::size_t>(proj_weight.cols()) != gnn.output_dim() ||
        static_cast<std::size_t>(proj_bias.size()) != dt) {
      throw DimensionError("projector must be d_t x d_g = " + std::to_string(dt) + " x " +
                           std::to_string(gnn.output_dim()));
    }
    if (store && store->embedding_dim() != dt) {
      throw DimensionError("state d_t " + std::to_string(dt) + " != embedding store d_t " +
                           std::to_string(store->embedding_dim()));
    }
  } else {
    if (!head) throw ConfigError("baseline mode needs a task head");
    if (static_cast<std::size_t>(head->weight.cols()) != gnn.output_dim() ||
        head->bias.size() != head->weight.rows()) {
      throw DimensionError("task head must be C x d_g");
    }
  }
}

Vector project(const Vector& v, const Matrix& weight, const Vector& bias) {
  if (weight.cols() != v.size() || weight.rows() != bias.size()) {
    throw DimensionError("projector shape mismatch");
  }
  return (weight * v + bias).array().tanh().matrix();
}

GraphEncoding encode_graph(const Graph& graph, const GraphPrompt& prompt, PromptStyle style,
                           const FrozenGnn& gnn, const PromptedGraph* structure) {
  GraphEncoding enc;
  if (structure) {
    enc.prompted = *structure;
    enc.prompted.set_prompt_features(prompt.tokens);
  } else {
    enc.prompted = build_prompted(graph, prompt, style);
  }
  enc.tape = gcn_forward(normalize_adjacency(enc.prompted.adjacency()), enc.prompted.features, gnn);
  enc.readout = readout_mean(enc.tape.h2);
  return enc;
}

Matrix encode_graph_backward(const GraphEncoding& enc, const FrozenGnn& gnn, const Vector& d_readout) {
  const auto rows = enc.tape.h2.rows();
  const Matrix d_h2 = Vector::Ones(rows) * (d_readout.transpose() / static_cast<double>(rows));
  const Matrix d_x = gcn_backward_features(enc.tape, gnn, d_h2);
  return d_x.topRows(static_cast<Eigen::Index>(enc.prompted.num_tokens));
}

GraphBranch graph_branch(const Graph& graph, const PromptState& state, const FrozenGnn& gnn,
                         const PromptedGraph* structure) {
  GraphBranch out;
  out.encoding = encode_graph(graph, state.graph_prompt, state.style, gnn, structure);
  out.readout_norm = out.encoding.readout.norm();
  if (!(out.readout_norm > kNormEpsilon)) {
    throw DegenerateError("graph readout has (near) zero norm");
  }
  out.normalized = out.encoding.readout / out.readout_norm;
  out.projected = project(out.normalized, state.proj_weight, state.proj_bias);
  if (state.options.renormalize_graph_output) {
    const double n = out.projected.norm();
    if (!(n > kNormEpsilon)) throw DegenerateError("projected graph embedding has zero norm");
    out.z = out.projected / n;
  } else {
    out.z = out.projected;
  }
  return out;
}

GraphBranchGradients graph_branch_backward(const GraphBranch& branch, const PromptState& state,
                                           const FrozenGnn& gnn, const Vector& d_z) {
  Vector d_projected = d_z;
  if (state.options.renormalize_graph_output) {
    const double n = branch.projected.norm();
    d_projected = (d_z - branch.z * branch.z.dot(d_z)) / n;
  }
  const Vector d_pre =
      d_projected.cwiseProduct((1.0 - branch.projected.array().square()).matrix());
  GraphBranchGradients g;
  g.proj_weight = d_pre * branch.normalized.transpose();
  g.proj_bias = d_pre;
  const Vector d_normalized = state.proj_weight.transpose() * d_pre;
  const Vector d_readout =
      (d_normalized - branch.normalized * branch.normalized.dot(d_normalized)) / branch.readout_norm;
  g.graph_prompt = encode_graph_backward(branch.encoding, gnn, d_readout);
  return g;
}

TextBranch text_branch(std::span<const std::string> labels, const PromptState& state,
                       const TextEmbeddingStore& store) {
  TextBranch out;
  out.labels.assign(labels.begin(), labels.end());
  for (const auto& label : labels) {
    out.h.push_back(prompted_text_embedding(label, state.text_prompt, store));
  }
  out.centered = center_normalize_labels(out.h, state.options.center_labels);
  return out;
}

Matrix text_branch_backward(const TextBranch& branch, const PromptState& state,
                            const TextEmbeddingStore& store, std::span<const Vector> d_z) {
  const auto d_h = center_normalize_backward(branch.centered, d_z);
  const auto nt = state.text_prompt.tokens.rows();
  Vector row = Vector::Zero(state.text_prompt.tokens.cols());
  for (std::size_t c = 0; c < d_h.size(); ++c) {
    const auto k = store.tokens(branch.labels[c]).rows();
    row += d_h[c] / static_cast<double>(nt + k);
  }
  return Vector::Ones(nt) * row.transpose();
}

ContrastiveGradients contrastive_loss_with_grad(std::span<const Vector> z_graph,
                                                std::span<const Vector> z_text, double tau) {
  const auto b = z_graph.size();
  if (b == 0 || z_text.size() != b) throw DimensionError("contrastive loss needs B >= 1 matching pairs");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperature must be positive and finite");
  for (std::size_t i = 0; i < b; ++i) {
    if (z_graph[i].size() != z_text[i].size() || z_graph[i].size() != z_graph[0].size()) {
      throw DimensionError("embedding widths differ within the batch");
    }
    if (!z_graph[i].allFinite() || !z_text[i].allFinite()) {
      throw DimensionError("non-finite embedding in contrastive loss");
    }
  }
  ContrastiveGradients out;
  out.d_graph.assign(b, Vector::Zero(z_graph[0].size()));
  out.d_text.assign(b, Vector::Zero(z_graph[0].size()));
  const double inv_b = 1.0 / static_cast<double>(b);
  Vector logits(static_cast<Eigen::Index>(b));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      logits(static_cast<Eigen::Index>(j)) = z_graph[i].dot(z_text[j]) / tau;
    }
    const double m = logits.maxCoeff();
    const Vector e = (logits.array() - m).exp().matrix();
    const double sum = e.sum();
    out.loss += (m + std::log(sum) - logits(static_cast<Eigen::Index>(i))) * inv_b;
    for (std::size_t j = 0; j < b; ++j) {
      double d_logit = e(static_cast<Eigen::Index>(j)) / sum - (i == j ? 1.0 : 0.0);
      d_logit *= inv_b / tau;
      out.d_graph[i] += d_logit * z_text[j];
      out.d_text[j] += d_logit * z_graph[i];
    }
  }
  return out;
}

double contrastive_loss(std::span<const Vector> z_graph, std::span<const Vector> z_text, double tau) {
  return contrastive_loss_with_grad(z_graph, z_text, tau).loss;
}

std::vector<PromptedGraph> batch_structures(const Batch& batch, const PromptState& state) {
  std::vector<PromptedGraph> out;
  out.reserve(batch.graphs.size());
  for (const auto* g : batch.graphs) out.push_back(build_prompted(*g, state.graph_prompt, state.style));
  return out;
}

Gradients backward_all(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                       const TextEmbeddingStore& store, std::span<const std::string> candidates,
                       std::span<const PromptedGraph> structures, std::size_t threads) {
  check_structures(batch, structures);
  const auto b = batch.graphs.size();
  const auto text = text_branch(candidates, state, store);
  const auto z_text = pick_text(text, batch.labels);

  std::vector<GraphBranch> branches(b);
  parallel_for(b, threads, [&](std::size_t i) {
    branches[i] = graph_branch(*batch.graphs[i], state, gnn, structure_at(structures, i));
  });
  std::vector<Vector> z_graph;
  z_graph.reserve(b);
  for (const auto& br : branches) z_graph.push_back(br.z);

  const auto contrast = contrastive_loss_with_grad(z_graph, z_text, state.tau);

  Gradients g;
  g.loss = contrast.loss;
  g.graph_prompt = Matrix::Zero(state.graph_prompt.tokens.rows(), state.graph_prompt.tokens.cols());
  g.proj_weight = Matrix::Zero(state.proj_weight.rows(), state.proj_weight.cols());
  g.proj_bias = Vector::Zero(state.proj_bias.size());

  std::vector<GraphBranchGradients> per_sample(b);
  parallel_for(b, threads, [&](std::size_t i) {
    per_sample[i] = graph_branch_backward(branches[i], state, gnn, contrast.d_graph[i]);
  });
  for (const auto& s : per_sample) {
    g.graph_prompt += s.graph_prompt;
    g.proj_weight += s.proj_weight;
    g.proj_bias += s.proj_bias;
  }

  std::vector<Vector> d_label(candidates.size(), Vector::Zero(store.embedding_dim()));
  for (std::size_t i = 0; i < b; ++i) d_label[batch.labels[i]] += contrast.d_text[i];
  g.text_prompt = text_branch_backward(text, state, store, d_label);

  if (state.options.freeze_graph_prompt) g.graph_prompt.setZero();
  if (state.options.freeze_text_prompt) g.text_prompt.setZero();
  if (state.options.freeze_projector) {
    g.proj_weight.setZero();
    g.proj_bias.setZero();
  }
  return g;
}

double morpher_loss(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                    const TextEmbeddingStore& store, std::span<const std::string> candidates,
                    std::span<const PromptedGraph> structures, std::size_t threads) {
  check_structures(batch, structures);
  const auto text = text_branch(candidates, state, store);
  const auto z_text = pick_text(text, batch.labels);
  std::vector<Vector> z_graph(batch.graphs.size());
  parallel_for(batch.graphs.size(), threads, [&](std::size_t i) {
    z_graph[i] = graph_branch(*batch.graphs[i], state, gnn, structure_at(structures, i)).z;
  });
  return contrastive_loss(z_graph, z_text, state.tau);
}

namespace {

struct HeadSample {
  GraphEncoding encoding;
  Vector probs;
  double loss = 0.0;
};

HeadSample head_forward(const Graph& graph, std::size_t label, const PromptState& state,
                        const FrozenGnn& gnn, const PromptedGraph* structure) {
  HeadSample s;
  s.encoding = encode_graph(graph, state.graph_prompt, state.style, gnn, structure);
  const Vector logits = state.head->weight * s.encoding.readout + state.head->bias;
  if (label >= static_cast<std::size_t>(logits.size())) throw LabelError("class index outside head");
  const double m = logits.maxCoeff();
  const Vector e = (logits.array() - m).exp().matrix();
  s.probs = e / e.sum();
  s.loss = m + std::log(e.sum()) - logits(static_cast<Eigen::Index>(label));
  return s;
}

}  // namespace

Gradients baseline_backward(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                            std::span<const PromptedGraph> structures, std::size_t threads) {
  check_structures(batch, structures);
  if (!state.head) throw ConfigError("baseline needs a task head");
  const auto b = batch.graphs.size();
  const double inv_b = 1.0 / static_cast<double>(b);
  const auto& head = *state.head;

  struct PerSample {
    double loss = 0.0;
    Matrix d_prompt;
    Matrix d_weight;
    Vector d_bias;
  };
  std::vector<PerSample> per_sample(b);
  parallel_for(b, threads, [&](std::size_t i) {
    auto s = head_forward(*batch.graphs[i], batch.labels[i], state, gnn, structure_at(structures, i));
    Vector d_logits = s.probs;
    d_logits(static_cast<Eigen::Index>(batch.labels[i])) -= 1.0;
    d_logits *= inv_b;
    per_sample[i].loss = s.loss * inv_b;
    per_sample[i].d_weight = d_logits * s.encoding.readout.transpose();
    per_sample[i].d_bias = d_logits;
    per_sample[i].d_prompt = encode_graph_backward(s.encoding, gnn, head.weight.transpose() * d_logits);
  });

  Gradients g;
  g.graph_prompt = Matrix::Zero(state.graph_prompt.tokens.rows(), state.graph_prompt.tokens.cols());
  g.head_weight = Matrix::Zero(head.weight.rows(), head.weight.cols());
  g.head_bias = Vector::Zero(head.bias.size());
  for (const auto& s : per_sample) {
    g.loss += s.loss;
    g.graph_prompt += s.d_prompt;
    g.head_weight += s.d_weight;
    g.head_bias += s.d_bias;
  }
  if (state.options.freeze_graph_prompt) g.graph_prompt.setZero();
  return g;
}

double baseline_loss(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                     std::span<const PromptedGraph> structures, std::size_t threads) {
  check_structures(batch, structures);
  if (!state.head) throw ConfigError("baseline needs a task head");
  std::vector<double> losses(batch.graphs.size());
  parallel_for(batch.graphs.size(), threads, [&](std::size_t i) {
    losses[i] =
        head_forward(*batch.graphs[i], batch.labels[i], state, gnn, structure_at(structures, i)).loss;
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

Vector baseline_logits(const Graph& graph, const PromptState& state, const FrozenGnn& gnn) {
  if (!state.head) throw ConfigError("baseline needs a task head");
  const auto enc = encode_graph(graph, state.graph_prompt, state.style, gnn);
  return state.head->weight * enc.readout + state.head->bias;
}

}  // namespace morpher
