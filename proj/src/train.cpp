#include "morpher/train.hpp"

#include "morpher/eval.hpp"
#include "morpher/rng.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace morpher {

void adam_step(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
               std::size_t t, const AdamHyper& hyper) {
  if (t < 1) throw ConfigError("Adam step index starts at 1");
  if (params.size() != grads.size()) throw DimensionError("parameter/gradient size mismatch");
  moments.first.resize(params.size(), 0.0);
  moments.second.resize(params.size(), 0.0);
  const double t_d = static_cast<double>(t);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t_d);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t_d);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + hyper.weight_decay * params[i];
    moments.first[i] = hyper.beta1 * moments.first[i] + (1.0 - hyper.beta1) * g;
    moments.second[i] = hyper.beta2 * moments.second[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = moments.first[i] / correction1;
    const double v_hat = moments.second[i] / correction2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

PromptStyle TrainConfig::style() const {
  if (prompt.style) return *prompt.style;
  return mode == Mode::aio_head ? PromptStyle::aio : PromptStyle::improved;
}

double TrainConfig::delta_cross() const {
  if (prompt.delta_cross) return *prompt.delta_cross;
  return style() == PromptStyle::aio ? 0.3 : 0.1;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
  if (prompt.num_graph_tokens < 1) throw ConfigError("n_g must be >= 1");
  if (mode == Mode::morpher && prompt.num_text_tokens < 1) throw ConfigError("n_t must be >= 1");
  if (!(prompt.delta_inner > 0.0 && prompt.delta_inner < 1.0)) {
    throw ConfigError("delta_inner must lie in (0, 1)");
  }
  if (prompt.init_std_multiplier < 1.0) throw ConfigError("init multiplier must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

namespace {

Matrix kaiming_uniform(std::size_t rows, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(fan_in));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

std::span<double> flat(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> flat(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> flat(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> flat(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct Optimizer {
  AdamHyper hyper;
  std::size_t step = 0;
  AdamMoments graph_prompt, text_prompt, proj_weight, proj_bias, head_weight, head_bias;

  void apply(PromptState& state, const Gradients& g) {
    ++step;
    if (!state.options.freeze_graph_prompt) {
      adam_step(flat(state.graph_prompt.tokens), flat(g.graph_prompt), graph_prompt, step, hyper);
    }
    if (state.mode == Mode::morpher) {
      if (!state.options.freeze_text_prompt) {
        adam_step(flat(state.text_prompt.tokens), flat(g.text_prompt), text_prompt, step, hyper);
      }
      if (!state.options.freeze_projector) {
        adam_step(flat(state.proj_weight), flat(g.proj_weight), proj_weight, step, hyper);
        adam_step(flat(state.proj_bias), flat(g.proj_bias), proj_bias, step, hyper);
      }
    } else {
      adam_step(flat(state.head->weight), flat(g.head_weight), head_weight, step, hyper);
      adam_step(flat(state.head->bias), flat(g.head_bias), head_bias, step, hyper);
    }
  }
};

double accuracy_of(std::span<const std::size_t> preds, std::span<const std::size_t> golds) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return preds.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(preds.size());
}

using GradientFn = std::function<Gradients(const Batch&, const PromptState&)>;

TrainResult run_training(const DatasetBundle& bundle, const FrozenGnn& gnn,
                         const TextEmbeddingStore* store, const TrainConfig& config,
                         PromptState state, const GradientFn& gradient_fn,
                         const EpochObserver& observer) {
  const auto& train = bundle.splits.train;
  const auto& val = bundle.splits.val;
  const auto train_graphs = bundle.select(train);
  const auto train_labels = bundle.select_labels(train);
  const auto val_graphs = bundle.select(val);
  const auto val_labels = bundle.select_labels(val);

  TrainResult result;
  Optimizer opt;
  opt.hyper = config.adam;
  Rng batch_rng(derive_seed(config.seed, "batches"));
  std::optional<PromptState> best;
  double best_val = -1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (observer) observer(epoch, state);
    if (val.empty()) result.epoch_states.push_back(state);

    EpochRecord record;
    record.epoch = epoch;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch =
        config.batch_size == 0 ? order.size() : std::min(config.batch_size, order.size());
    if (batch < order.size()) batch_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      Batch b;
      for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k) {
        b.graphs.push_back(train_graphs[order[k]]);
        b.labels.push_back(train_labels[order[k]]);
      }
      const auto grads = gradient_fn(b, state);
      if (!std::isfinite(grads.loss)) throw DegenerateError("training loss became non-finite");
      loss_sum += grads.loss;
      ++batches;
      opt.apply(state, grads);
    }
    record.loss = loss_sum / static_cast<double>(batches);

    const auto train_preds =
        predict_all(train_graphs, state, gnn, store, bundle.label_texts, config.threads);
    record.train_accuracy = accuracy_of(train_preds, train_labels);
    if (!val.empty()) {
      const auto val_preds =
          predict_all(val_graphs, state, gnn, store, bundle.label_texts, config.threads);
      record.val_accuracy = accuracy_of(val_preds, val_labels);
      if (*record.val_accuracy > best_val) {
        best_val = *record.val_accuracy;
        best = state;
        result.history.best_epoch = epoch;
      }
    }
    spdlog::debug("epoch {} loss {:.6f} train_acc {:.4f} val_acc {}", epoch, record.loss,
                  record.train_accuracy,
                  record.val_accuracy ? std::to_string(*record.val_accuracy) : "-");
    result.history.epochs.push_back(record);
  }
  result.state = best ? std::move(*best) : std::move(state);
  return result;
}

}  // namespace

PromptState init_prompt_state(const TrainConfig& config, const FrozenGnn& gnn,
                              const TextEmbeddingStore* store, std::size_t num_classes,
                              const PhraseEncoder& phrase_encoder) {
  config.validate();
  PromptState state;
  state.mode = config.mode;
  state.style = config.style();
  state.tau = config.tau;
  state.options = config.options;

  const auto& pc = config.prompt;
  const auto d = gnn.input_dim();
  const auto graph_seed = derive_seed(config.seed, "graph_prompt");
  state.graph_prompt = pc.init == PromptInit::normal
                           ? init_graph_prompt_normal(pc.num_graph_tokens, d, graph_seed,
                                                      pc.init_std * pc.init_std_multiplier)
                           : init_graph_prompt(pc.num_graph_tokens, d, graph_seed,
                                               pc.init_std_multiplier);
  state.graph_prompt.init_std_multiplier = pc.init_std_multiplier;
  state.graph_prompt.delta_inner = pc.delta_inner;
  state.graph_prompt.delta_cross = config.delta_cross();

  const auto dg = gnn.output_dim();
  if (config.mode == Mode::morpher) {
    if (!store) throw ConfigError("Morpher needs a text embedding store");
    const auto dt = store->embedding_dim();
    PhraseEncoder encoder = phrase_encoder;
    if (!encoder) {
      encoder = [store](const std::string& phrase) -> std::optional<Matrix> {
        if (store->contains(phrase)) return store->tokens(phrase);
        return std::nullopt;
      };
    }
    state.text_prompt = init_text_prompt(pc.text_seed_phrase, pc.num_text_tokens, dt, encoder,
                                         derive_seed(config.seed, "text_prompt"));
    Rng rng(derive_seed(config.seed, "projector"));
    state.proj_weight = kaiming_uniform(dt, dg, rng);
    state.proj_bias = Vector::Zero(static_cast<Eigen::Index>(dt));
  } else {
    if (num_classes < 1) throw ConfigError("task head needs at least one class");
    Rng rng(derive_seed(config.seed, "head"));
    state.head = TaskHead{kaiming_uniform(num_classes, dg, rng),
                          Vector::Zero(static_cast<Eigen::Index>(num_classes))};
    state.text_prompt.tokens.resize(0, 0);
    state.proj_weight.resize(0, static_cast<Eigen::Index>(dg));
    state.proj_bias.resize(0);
  }
  state.validate(gnn, config.mode == Mode::morpher ? store : nullptr);
  return state;
}

TrainResult train_morpher(const DatasetBundle& bundle, const FrozenGnn& gnn,
                          const TextEmbeddingStore& store, const TrainConfig& config,
                          const EpochObserver& observer, const PhraseEncoder& phrase_encoder) {
  if (config.mode != Mode::morpher) throw ConfigError("train_morpher needs mode = morpher");
  bundle.validate();
  if (bundle.splits.train.empty()) throw LabelError("empty train split");
  for (const auto& label : bundle.label_texts) {
    if (!store.contains(label)) throw LabelError("label '" + label + "' missing from embedding store");
  }
  auto state = init_prompt_state(config, gnn, &store, bundle.num_classes(), phrase_encoder);
  const std::vector<std::string>& candidates = bundle.label_texts;
  auto grad = [&](const Batch& b, const PromptState& s) {
    return backward_all(b, s, gnn, store, candidates, {}, config.threads);
  };
  return run_training(bundle, gnn, &store, config, std::move(state), grad, observer);
}

TrainResult train_baseline(const DatasetBundle& bundle, const FrozenGnn& gnn,
                           const TrainConfig& config, const EpochObserver& observer) {
  if (config.mode == Mode::morpher) throw ConfigError("train_baseline needs a task-head mode");
  bundle.validate();
  if (bundle.splits.train.empty()) throw LabelError("empty train split");
  auto state = init_prompt_state(config, gnn, nullptr, bundle.num_classes());
  auto grad = [&](const Batch& b, const PromptState& s) {
    return baseline_backward(b, s, gnn, {}, config.threads);
  };
  return run_training(bundle, gnn, nullptr, config, std::move(state), grad, observer);
}

}  // namespace morpher
