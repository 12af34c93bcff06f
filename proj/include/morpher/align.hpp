#pragma once

#include "morpher/gnn.hpp"
#include "morpher/graph.hpp"
#include "morpher/prompt_graph.hpp"
#include "morpher/text.hpp"

#include <optional>
#include <span>

namespace morpher {

enum class Mode {
  /// Graph prompt + text prompt + projector, contrastive alignment.
  morpher,
  /// Single-modal baselines: graph prompt + linear task head, cross-entropy.
  improved_aio_head,
  aio_head,
};

std::string to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct TaskHead {
  Matrix weight;  // C x d_g
  Vector bias;    // C
};

/// Ablation and sensitivity switches.
struct AlignOptions {
  bool center_labels = true;
  /// Re-normalize z^G after the projector (off: the projector output is used as is).
  bool renormalize_graph_output = false;
  bool freeze_graph_prompt = false;
  bool freeze_text_prompt = false;
  bool freeze_projector = false;
};

/// Every trainable parameter. The GCN and the text encoder stay frozen.
struct PromptState {
  Mode mode = Mode::morpher;
  PromptStyle style = PromptStyle::improved;
  GraphPrompt graph_prompt;
  TextPrompt text_prompt;   // n_t x d_t (empty in baseline modes)
  Matrix proj_weight;       // d_t x d_g (empty in baseline modes)
  Vector proj_bias;         // d_t
  double tau = 0.07;
  AlignOptions options;
  std::optional<TaskHead> head;

  /// Throws DimensionError/ConfigError if shapes disagree with the encoders.
  void validate(const FrozenGnn& gnn, const TextEmbeddingStore* store = nullptr) const;
};

/// tanh(W v + b).
Vector project(const Vector& v, const Matrix& weight, const Vector& bias);

/// Forward pass of the graph branch up to the mean readout.
struct GraphEncoding {
  PromptedGraph prompted;
  ForwardTape tape;
  Vector readout;  // h^G, length d_g
};

/// Builds the prompted graph (or reuses `structure`, refreshing its prompt rows
/// from the current tokens) and runs the frozen GCN.
GraphEncoding encode_graph(const Graph& graph, const GraphPrompt& prompt, PromptStyle style,
                           const FrozenGnn& gnn, const PromptedGraph* structure = nullptr);

/// Gradient w.r.t. the prompt tokens given the gradient w.r.t. the readout.
Matrix encode_graph_backward(const GraphEncoding& enc, const FrozenGnn& gnn, const Vector& d_readout);

/// Full graph branch: readout, L2-normalize, project.
struct GraphBranch {
  GraphEncoding encoding;
  double readout_norm = 0.0;
  Vector normalized;  // h / ||h||
  Vector projected;   // tanh(W n + b)
  Vector z;           // projected, or its normalization when renormalize_graph_output
};

/// Throws DegenerateError when ||h^G|| <= 1e-12.
GraphBranch graph_branch(const Graph& graph, const PromptState& state, const FrozenGnn& gnn,
                         const PromptedGraph* structure = nullptr);

struct GraphBranchGradients {
  Matrix graph_prompt;
  Matrix proj_weight;
  Vector proj_bias;
};

GraphBranchGradients graph_branch_backward(const GraphBranch& branch, const PromptState& state,
                                           const FrozenGnn& gnn, const Vector& d_z);

/// Prompted, centered and normalized embeddings of the candidate labels.
struct TextBranch {
  std::vector<std::string> labels;
  std::vector<Vector> h;
  CenteredLabels centered;

  const std::vector<Vector>& z() const noexcept { return centered.z; }
};

TextBranch text_branch(std::span<const std::string> labels, const PromptState& state,
                       const TextEmbeddingStore& store);

/// Gradient w.r.t. the text prompt given gradients w.r.t. each label's z.
Matrix text_branch_backward(const TextBranch& branch, const PromptState& state,
                            const TextEmbeddingStore& store, std::span<const Vector> d_z);

/// In-batch contrastive loss, graph -> text:
/// L = -(1/B) Σ_i log softmax_j(zG_i · zT_j / τ)[i].
double contrastive_loss(std::span<const Vector> z_graph, std::span<const Vector> z_text, double tau);

struct ContrastiveGradients {
  double loss = 0.0;
  std::vector<Vector> d_graph;
  std::vector<Vector> d_text;
};

ContrastiveGradients contrastive_loss_with_grad(std::span<const Vector> z_graph,
                                                std::span<const Vector> z_text, double tau);

/// A batch of graphs with their class indices into the candidate label list.
struct Batch {
  std::vector<const Graph*> graphs;
  std::vector<std::size_t> labels;
};

/// Gradients for every parameter block plus the loss they belong to. Frozen
/// blocks come back as zeros of the right shape.
struct Gradients {
  double loss = 0.0;
  Matrix graph_prompt;
  Matrix text_prompt;
  Matrix proj_weight;
  Vector proj_bias;
  Matrix head_weight;
  Vector head_bias;
};

/// Prompted-graph structures for a batch at the current prompt; passing them
/// back in keeps the edges fixed while the prompt features move.
std::vector<PromptedGraph> batch_structures(const Batch& batch, const PromptState& state);

/// Contrastive loss of the Morpher pipeline and its exact reverse-mode gradients.
/// The text side of sample i is the embedding of candidate label labels[i].
Gradients backward_all(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                       const TextEmbeddingStore& store, std::span<const std::string> candidates,
                       std::span<const PromptedGraph> structures = {}, std::size_t threads = 1);

/// Loss only; same arguments as backward_all.
double morpher_loss(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                    const TextEmbeddingStore& store, std::span<const std::string> candidates,
                    std::span<const PromptedGraph> structures = {}, std::size_t threads = 1);

/// Cross-entropy of the task-head baseline and its gradients (graph prompt + head).
Gradients baseline_backward(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                            std::span<const PromptedGraph> structures = {}, std::size_t threads = 1);

double baseline_loss(const Batch& batch, const PromptState& state, const FrozenGnn& gnn,
                     std::span<const PromptedGraph> structures = {}, std::size_t threads = 1);

/// Head logits W h + b for one graph.
Vector baseline_logits(const Graph& graph, const PromptState& state, const FrozenGnn& gnn);

}  // namespace morpher
