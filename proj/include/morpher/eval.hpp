#pragma once

#include "morpher/align.hpp"

#include <filesystem>
#include <optional>

namespace morpher {

/// argmax_c z^G · z^t_c over the candidate labels; ties go to the lower index.
std::size_t predict(const Graph& graph, const PromptState& state, const FrozenGnn& gnn,
                    const TextEmbeddingStore& store, std::span<const std::string> label_texts);

/// Same rule for many graphs, sharing one pass over the text branch.
/// Baseline states ignore `store` (may be null) and use the task head.
std::vector<std::size_t> predict_all(std::span<const Graph* const> graphs, const PromptState& state,
                                     const FrozenGnn& gnn, const TextEmbeddingStore* store,
                                     std::span<const std::string> label_texts,
                                     std::size_t threads = 1);

/// Graph-side embeddings used for cluster-quality scores: z^G for Morpher states,
/// the normalized readout for task-head baselines.
std::vector<Vector> graph_embeddings(std::span<const Graph* const> graphs, const PromptState& state,
                                     const FrozenGnn& gnn, std::size_t threads = 1);

/// Index of the largest score, lowest index on ties.
std::size_t argmax(const Vector& scores);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  /// confusion[gold][pred]
  std::vector<std::vector<std::size_t>> confusion;
  std::optional<double> silhouette;
  std::size_t trainable_parameters = 0;
  double runtime_seconds = 0.0;
  std::size_t num_samples = 0;
};

/// Accuracy, per-class precision/recall/F1 and macro-F1 (unweighted mean; a
/// class with a zero denominator scores 0).
EvalReport metrics(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                   std::size_t num_classes);

/// Mean silhouette coefficient with Euclidean distance; points in singleton
/// clusters score 0. Needs at least two non-empty clusters.
double silhouette(std::span<const Vector> embeddings, std::span<const std::size_t> labels);

/// n_g·d + n_t·d_t + d_t·d_g + d_t, plus C·d_g + C for a task head.
std::size_t count_trainable(const PromptState& state);

std::string to_json(const EvalReport& report, const std::vector<std::string>& label_texts = {});
void write_report(const EvalReport& report, const std::vector<std::string>& label_texts,
                  const std::filesystem::path& path);

}  // namespace morpher
