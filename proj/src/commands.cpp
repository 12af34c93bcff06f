#include "morpher/commands.hpp"

#include "morpher/dataset_io.hpp"
#include "morpher/generators.hpp"
#include "morpher/gradcheck.hpp"
#include "morpher/sampling.hpp"
#include "morpher/state_io.hpp"
#include "morpher/zero_shot.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <set>

namespace morpher {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void prepare_output(const RunConfig& config, std::string_view command) {
  fs::create_directories(config.output_dir);
  const auto path = config.output_dir / fmt::format("manifest_{}.json", command);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << manifest_json(config, command) << '\n';
}

void require_file(const std::optional<fs::path>& path, std::string_view what) {
  if (!path) throw ConfigError(std::string(what) + " is not set");
  if (!fs::exists(*path)) throw ConfigError(std::string(what) + " not found: " + path->string());
}

std::vector<std::size_t> split_indices(const DatasetBundle& bundle, const std::string& split) {
  if (split == "train") return bundle.splits.train;
  if (split == "val") return bundle.splits.val;
  if (split == "test") return bundle.splits.test;
  std::vector<std::size_t> all(bundle.graphs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

/// The configured split, or the first non-empty one of test, val, train.
std::vector<std::size_t> report_indices(const DatasetBundle& bundle, const std::string& split) {
  auto idx = split_indices(bundle, split);
  if (!idx.empty()) return idx;
  for (const auto* s : {&bundle.splits.test, &bundle.splits.val, &bundle.splits.train}) {
    if (!s->empty()) {
      spdlog::warn("split '{}' is empty; reporting on another split", split);
      return *s;
    }
  }
  throw LabelError("dataset has no samples in any split");
}

void check_gnn_input(const FrozenGnn& gnn, std::size_t d) {
  if (gnn.input_dim() != d) {
    throw DimensionError("GCN input dim " + std::to_string(gnn.input_dim()) +
                         " != dataset feature dim " + std::to_string(d));
  }
}

ZeroShotSpec zero_spec(const RunConfig& config) {
  const auto& z = config.zeroshot;
  ZeroShotSpec spec;
  if (z.base_edges) {
    require_file(z.base_edges, "zeroshot.base_edges");
    spec.base_edges = load_edge_list(*z.base_edges);
  } else {
    spec.base_edges = generate_random_network(z.base_nodes, z.avg_degree, consumer_seed(config, "network"));
    spec.base_num_nodes = z.base_nodes;
  }
  spec.num_samples = z.num_samples;
  spec.hops = z.hops;
  spec.train_per_class = z.train_per_class;
  spec.num_test = z.num_test;
  spec.label_texts = z.labels;
  spec.seed = consumer_seed(config, "zero");
  spec.validate();
  return spec;
}

}  // namespace

DatasetBundle load_run_dataset(const RunConfig& config) {
  require_file(config.data.path, "data.path");
  LoadOptions opts;
  opts.pad_to = config.data.pad_to;
  opts.labels_path = config.data.labels;
  opts.task_level = config.data.task_level;
  auto bundle = load_dataset(*config.data.path, opts);
  if (config.data.shots) {
    bundle = few_shot_split(bundle, *config.data.shots, consumer_seed(config, "split"));
  }
  return bundle;
}

FrozenGnn load_run_gnn(const RunConfig& config, std::size_t input_dim) {
  if (config.gnn.weights) {
    require_file(config.gnn.weights, "gnn.weights");
    return load_gnn_weights(*config.gnn.weights);
  }
  const auto d = config.gnn.input_dim.value_or(input_dim);
  return init_gnn_random(d, config.gnn.hidden, config.gnn.out, consumer_seed(config, "gnn"));
}

TextEmbeddingStore load_run_store(const RunConfig& config, const std::vector<std::string>& labels) {
  if (config.text.embeddings) {
    require_file(config.text.embeddings, "text.embeddings");
    return load_token_embeddings(*config.text.embeddings);
  }
  return build_pseudo_store(labels, config.text.pseudo_dim, consumer_seed(config, "text"),
                            config.text.midpoints);
}

PhraseEncoder run_phrase_encoder(const RunConfig& config, const TextEmbeddingStore& store) {
  if (config.text.embeddings) {
    return [&store](const std::string& phrase) -> std::optional<Matrix> {
      if (store.contains(phrase)) return store.tokens(phrase);
      return std::nullopt;
    };
  }
  const auto dim = config.text.pseudo_dim;
  const auto seed = consumer_seed(config, "text");
  return [dim, seed](const std::string& phrase) -> std::optional<Matrix> {
    return pseudo_encode(phrase, dim, pseudo_token_count(phrase), seed);
  };
}

EvalReport evaluate(const DatasetBundle& bundle, std::span<const std::size_t> indices,
                    const PromptState& state, const FrozenGnn& gnn, const TextEmbeddingStore* store,
                    bool with_silhouette, std::size_t threads) {
  const auto start = Clock::now();
  const auto graphs = bundle.select(indices);
  const auto golds = bundle.select_labels(indices);
  const auto preds = predict_all(graphs, state, gnn, store, bundle.label_texts, threads);
  auto report = metrics(preds, golds, bundle.num_classes());
  if (with_silhouette && std::set<std::size_t>(golds.begin(), golds.end()).size() >= 2) {
    report.silhouette = silhouette(graph_embeddings(graphs, state, gnn, threads), golds);
  }
  report.trainable_parameters = count_trainable(state);
  report.runtime_seconds = seconds_since(start);
  return report;
}

int cmd_train(const RunConfig& config) {
  const auto start = Clock::now();
  prepare_output(config, "train");
  const auto bundle = load_run_dataset(config);
  const auto gnn = load_run_gnn(config, bundle.feature_dim());
  check_gnn_input(gnn, bundle.feature_dim());

  TrainResult result;
  std::optional<TextEmbeddingStore> store;
  if (config.train.mode == Mode::morpher) {
    store = load_run_store(config, bundle.label_texts);
    result = train_morpher(bundle, gnn, *store, config.train, {}, run_phrase_encoder(config, *store));
  } else {
    result = train_baseline(bundle, gnn, config.train);
  }
  save_prompt_state(result.state, config.output_dir / "state.mpst");
  write_history_csv(result.history, config.output_dir / "history.csv");

  const auto idx = report_indices(bundle, config.eval.split);
  auto report = evaluate(bundle, idx, result.state, gnn, store ? &*store : nullptr,
                         config.eval.silhouette, config.threads);
  report.runtime_seconds = seconds_since(start);
  write_report(report, bundle.label_texts, config.output_dir / "report.json");
  spdlog::info("trained {} for {} epochs: accuracy {:.4f}, macro-F1 {:.4f} on {} samples",
               to_string(config.train.mode), config.train.epochs, report.accuracy, report.macro_f1,
               report.num_samples);
  return 0;
}

int cmd_eval(const RunConfig& config) {
  prepare_output(config, "eval");
  const auto state_path = config.eval.state.value_or(config.output_dir / "state.mpst");
  if (!fs::exists(state_path)) throw ConfigError("prompt state not found: " + state_path.string());
  const auto state = load_prompt_state(state_path);
  const auto bundle = load_run_dataset(config);
  const auto gnn = load_run_gnn(config, bundle.feature_dim());
  check_gnn_input(gnn, bundle.feature_dim());
  std::optional<TextEmbeddingStore> store;
  if (state.mode == Mode::morpher) store = load_run_store(config, bundle.label_texts);
  state.validate(gnn, store ? &*store : nullptr);
  if (state.head && static_cast<std::size_t>(state.head->weight.rows()) != bundle.num_classes()) {
    throw DimensionError("task head has " + std::to_string(state.head->weight.rows()) +
                         " classes, dataset has " + std::to_string(bundle.num_classes()));
  }
  const auto idx = report_indices(bundle, config.eval.split);
  const auto report = evaluate(bundle, idx, state, gnn, store ? &*store : nullptr,
                               config.eval.silhouette, config.threads);
  write_report(report, bundle.label_texts, config.output_dir / "eval_report.json");
  fmt::print("accuracy {:.4f} macro_f1 {:.4f} samples {}\n", report.accuracy, report.macro_f1,
             report.num_samples);
  return 0;
}

ZeroShotResult run_zero_shot(const RunConfig& config) {
  const auto& z = config.zeroshot;
  const auto spec = zero_spec(config);
  const auto gnn = load_run_gnn(config, 2);
  check_gnn_input(gnn, 2);
  RunConfig text_cfg = config;
  if (!config.text.embeddings && z.midpoint) {
    text_cfg.text.midpoints.push_back({z.labels[2], z.labels[0], z.labels[1]});
  }
  const auto store = load_run_store(text_cfg, z.labels);
  return zero_shot_protocol(spec, gnn, store, config.train, run_phrase_encoder(config, store));
}

int cmd_zeroshot(const RunConfig& config) {
  prepare_output(config, "zeroshot");
  const auto result = run_zero_shot(config);

  const auto& curves = result.training.history.zero_shot;
  write_zero_shot_csv(curves, config.output_dir / "zero_shot_curves.csv");
  write_history_csv(result.training.history, config.output_dir / "history.csv");
  save_prompt_state(result.training.state, config.output_dir / "state.mpst");
  double best_test = 0.0, best_train2 = 0.0;
  for (const auto& p : curves) {
    best_test = std::max(best_test, p.acc_test_zero);
    best_train2 = std::max(best_train2, p.acc_train2);
  }
  fmt::print("epochs {} max acc_train2 {:.4f} max acc_test_zero {:.4f}\n", curves.size(),
             best_train2, best_test);
  return 0;
}

int cmd_gradcheck(const RunConfig& config) {
  prepare_output(config, "gradcheck");
  const auto start = Clock::now();
  const auto report = run_gradcheck(config.gradcheck, consumer_seed(config, "gradcheck"));
  for (const auto& [block, err] : report.worst) fmt::print("{:<18} {:.3e}\n", block, err);
  fmt::print("worst {:.3e} over {} instances (tolerance {:.1e}) in {:.2f} s: {}\n", report.overall(),
             report.instances, report.tolerance, seconds_since(start),
             report.passed() ? "PASS" : "FAIL");
  return report.passed() ? 0 : 1;
}

int cmd_gen(const RunConfig& config) {
  prepare_output(config, "gen");
  const auto& g = config.gen;
  const auto seed = consumer_seed(config, "gen");
  DatasetBundle bundle;
  if (g.kind == "separable") {
    bundle = generate_separable_dataset(g.n_graphs, g.nodes_per_graph, g.d, g.num_classes, seed, g.noise);
  } else if (g.kind == "one_hot") {
    bundle = generate_one_hot_dataset(g.n_graphs, g.nodes_per_graph, g.d, g.num_classes, seed,
                                      g.class_bias);
  } else {
    const auto spec = zero_spec(config);
    bundle = generate_zero_dataset(spec);
  }
  if (!g.labels.empty()) {
    if (g.labels.size() != bundle.num_classes()) {
      throw ConfigError("gen.labels has " + std::to_string(g.labels.size()) + " entries, need " +
                        std::to_string(bundle.num_classes()));
    }
    bundle.label_texts = g.labels;
  }
  const auto out = g.out.value_or(config.output_dir / "dataset.jsonl");
  save_dataset(bundle, out);
  fmt::print("wrote {} graphs ({} classes, d = {}) to {}\n", bundle.graphs.size(),
             bundle.num_classes(), bundle.feature_dim(), out.string());
  return 0;
}

}  // namespace morpher
