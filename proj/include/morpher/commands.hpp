#pragma once

#include "morpher/config.hpp"
#include "morpher/eval.hpp"
#include "morpher/gnn.hpp"
#include "morpher/zero_shot.hpp"

namespace morpher {

/// Dataset per the [data] section, few-shot re-split applied when `shots` is set.
DatasetBundle load_run_dataset(const RunConfig& config);

/// Weights file, or seeded random init with input width `input_dim`.
FrozenGnn load_run_gnn(const RunConfig& config, std::size_t input_dim);

/// MTEB file, or the pseudo-encoder over `labels` (plus configured midpoints).
TextEmbeddingStore load_run_store(const RunConfig& config, const std::vector<std::string>& labels);

/// Encodes seed phrases the same way the store was built.
PhraseEncoder run_phrase_encoder(const RunConfig& config, const TextEmbeddingStore& store);

/// Metrics of `state` on the given split indices, with silhouette when possible.
EvalReport evaluate(const DatasetBundle& bundle, std::span<const std::size_t> indices,
                    const PromptState& state, const FrozenGnn& gnn, const TextEmbeddingStore* store,
                    bool with_silhouette, std::size_t threads = 1);

/// Novel-class protocol per the [zeroshot] section (midpoint label added for the
/// pseudo-encoder when enabled). No files are written.
ZeroShotResult run_zero_shot(const RunConfig& config);

/// Subcommands. Each returns the process exit code and writes
/// manifest_<command>.json into the output directory.
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_zeroshot(const RunConfig& config);
int cmd_gradcheck(const RunConfig& config);
int cmd_gen(const RunConfig& config);

}  // namespace morpher
