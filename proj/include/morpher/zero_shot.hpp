#pragma once

#include "morpher/generators.hpp"
#include "morpher/train.hpp"

#include <filesystem>

namespace morpher {

struct ZeroShotResult {
  DatasetBundle bundle;
  TrainResult training;
};

/// Trains Morpher on the seen classes of `bundle` (only the first two label
/// texts are ever candidates during training) and records per epoch, for the
/// state that epoch starts from: train accuracy with the 2 seen labels, train
/// accuracy with all 3, and test accuracy with all 3.
TrainHistory zero_shot_curves(const DatasetBundle& bundle, const FrozenGnn& gnn,
                              const TextEmbeddingStore& store, const TrainConfig& config,
                              TrainResult* training = nullptr,
                              const PhraseEncoder& phrase_encoder = {});

/// generate_zero_dataset followed by zero_shot_curves.
ZeroShotResult zero_shot_protocol(const ZeroShotSpec& spec, const FrozenGnn& gnn,
                                  const TextEmbeddingStore& store, const TrainConfig& config,
                                  const PhraseEncoder& phrase_encoder = {});

/// Header "epoch,acc_train2,acc_train3,acc_test_zero", one row per epoch.
void write_zero_shot_csv(const std::vector<ZeroShotPoint>& curves, const std::filesystem::path& path);

/// Header "epoch,loss,train_accuracy,val_accuracy" (val empty when absent).
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace morpher
