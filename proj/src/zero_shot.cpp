#include "morpher/zero_shot.hpp"

#include "morpher/eval.hpp"

#include <fmt/format.h>

#include <fstream>

namespace morpher {

namespace {

double accuracy(std::span<const Graph* const> graphs, std::span<const std::size_t> golds,
                const PromptState& state, const FrozenGnn& gnn, const TextEmbeddingStore& store,
                std::span<const std::string> candidates, std::size_t threads) {
  if (graphs.empty()) return 0.0;
  const auto preds = predict_all(graphs, state, gnn, &store, candidates, threads);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace

TrainHistory zero_shot_curves(const DatasetBundle& bundle, const FrozenGnn& gnn,
                              const TextEmbeddingStore& store, const TrainConfig& config,
                              TrainResult* training, const PhraseEncoder& phrase_encoder) {
  bundle.validate();
  if (bundle.num_classes() != 3) throw LabelError("zero-shot protocol needs exactly 3 labels");
  if (bundle.splits.train.empty()) throw LabelError("empty train split");
  if (bundle.splits.test.empty()) throw LabelError("empty test split");
  for (auto y : bundle.select_labels(bundle.splits.train)) {
    if (y == 2) throw LabelError("the unseen class appears in the train split");
  }

  DatasetBundle seen;
  seen.task_level = bundle.task_level;
  seen.label_texts = {bundle.label_texts[0], bundle.label_texts[1]};
  for (auto i : bundle.splits.train) {
    seen.splits.train.push_back(seen.graphs.size());
    seen.graphs.push_back(bundle.graphs[i]);
    seen.labels.push_back(bundle.labels[i]);
  }

  const auto train_graphs = bundle.select(bundle.splits.train);
  const auto train_labels = bundle.select_labels(bundle.splits.train);
  const auto test_graphs = bundle.select(bundle.splits.test);
  const auto test_labels = bundle.select_labels(bundle.splits.test);

  std::vector<ZeroShotPoint> curves;
  auto observer = [&](std::size_t epoch, const PromptState& state) {
    ZeroShotPoint p;
    p.epoch = epoch;
    p.acc_train2 = accuracy(train_graphs, train_labels, state, gnn, store, seen.label_texts,
                            config.threads);
    p.acc_train3 = accuracy(train_graphs, train_labels, state, gnn, store, bundle.label_texts,
                            config.threads);
    p.acc_test_zero = accuracy(test_graphs, test_labels, state, gnn, store, bundle.label_texts,
                               config.threads);
    curves.push_back(p);
  };
  auto result = train_morpher(seen, gnn, store, config, observer, phrase_encoder);
  result.history.zero_shot = std::move(curves);
  auto history = result.history;
  if (training) *training = std::move(result);
  return history;
}

ZeroShotResult zero_shot_protocol(const ZeroShotSpec& spec, const FrozenGnn& gnn,
                                  const TextEmbeddingStore& store, const TrainConfig& config,
                                  const PhraseEncoder& phrase_encoder) {
  spec.validate();
  ZeroShotResult out;
  out.bundle = generate_zero_dataset(spec);
  zero_shot_curves(out.bundle, gnn, store, config, &out.training, phrase_encoder);
  return out;
}

void write_zero_shot_csv(const std::vector<ZeroShotPoint>& curves, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,acc_train2,acc_train3,acc_test_zero\n";
  for (const auto& p : curves) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", p.epoch, p.acc_train2, p.acc_train3,
                       p.acc_test_zero);
  }
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss,train_accuracy,val_accuracy\n";
  for (const auto& r : history.epochs) {
    out << fmt::format("{},{:.17g},{:.6f},{}\n", r.epoch, r.loss, r.train_accuracy,
                       r.val_accuracy ? fmt::format("{:.6f}", *r.val_accuracy) : "");
  }
}

}  // namespace morpher
