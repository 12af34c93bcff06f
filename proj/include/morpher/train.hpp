#pragma once

#include "morpher/align.hpp"

#include <functional>
#include <optional>

namespace morpher {

struct AdamHyper {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// L2 penalty added to the gradient.
  double weight_decay = 0.0;
};

struct AdamMoments {
  std::vector<double> first;
  std::vector<double> second;
};

/// One bias-corrected Adam update at step t >= 1. Moments are sized lazily.
void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               std::size_t t, const AdamHyper& hyper);

enum class PromptInit { kaiming, normal };

struct PromptConfig {
  std::size_t num_graph_tokens = 10;
  std::size_t num_text_tokens = 4;
  double delta_inner = 0.5;
  /// Defaults to 0.1 for the improved style and 0.3 for AIO.
  std::optional<double> delta_cross;
  PromptInit init = PromptInit::kaiming;
  double init_std_multiplier = 1.0;
  /// Standard deviation for PromptInit::normal.
  double init_std = 0.01;
  std::optional<std::string> text_seed_phrase;
  /// Defaults to AIO for Mode::aio_head, improved otherwise.
  std::optional<PromptStyle> style;
};

struct TrainConfig {
  Mode mode = Mode::morpher;
  std::size_t epochs = 200;
  AdamHyper adam;
  /// 0 = the whole train split in one batch.
  std::size_t batch_size = 0;
  double tau = 0.07;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  PromptConfig prompt;
  AlignOptions options;

  PromptStyle style() const;
  double delta_cross() const;
  void validate() const;
};

/// `loss` is the mean batch loss the epoch's updates were computed from;
/// the accuracies are measured after those updates.
struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_accuracy;
};

/// Per-epoch curves of the novel-class protocol.
struct ZeroShotPoint {
  std::size_t epoch = 0;
  double acc_train2 = 0.0;     // train graphs, seen labels as candidates
  double acc_train3 = 0.0;     // train graphs, all labels as candidates
  double acc_test_zero = 0.0;  // test graphs, all labels as candidates
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<ZeroShotPoint> zero_shot;
  /// Epoch whose state was selected (best val accuracy, earliest on ties).
  std::optional<std::size_t> best_epoch;
};

struct TrainResult {
  PromptState state;
  TrainHistory history;
  /// Filled only when there is no val split: the state each epoch started from.
  std::vector<PromptState> epoch_states;
};

/// Called at the start of every epoch with the state the epoch's loss is computed on.
using EpochObserver = std::function<void(std::size_t epoch, const PromptState& state)>;

/// Fresh trainable parameters for `config`. `store` supplies d_t and the seed
/// phrase embeddings (Morpher only); `num_classes` sizes the task head (baselines only).
PromptState init_prompt_state(const TrainConfig& config, const FrozenGnn& gnn,
                              const TextEmbeddingStore* store, std::size_t num_classes,
                              const PhraseEncoder& phrase_encoder = {});

/// Contrastive training of graph prompt, text prompt and projector on the train
/// split. Every epoch takes the gradient step(s), then evaluates the updated
/// state. With a val split the returned state is the best by val accuracy;
/// without one it is the final state and `epoch_states` holds the state each
/// epoch started from.
TrainResult train_morpher(const DatasetBundle& bundle, const FrozenGnn& gnn,
                          const TextEmbeddingStore& store, const TrainConfig& config,
                          const EpochObserver& observer = {}, const PhraseEncoder& phrase_encoder = {});

/// Single-modal baseline: graph prompt + linear head with softmax cross-entropy.
TrainResult train_baseline(const DatasetBundle& bundle, const FrozenGnn& gnn,
                           const TrainConfig& config, const EpochObserver& observer = {});

}  // namespace morpher
