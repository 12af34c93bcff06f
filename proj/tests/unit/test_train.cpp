#include "helpers.hpp"

#include "morpher/eval.hpp"
#include "morpher/generators.hpp"
#include "morpher/sampling.hpp"
#include "morpher/train.hpp"

#include <doctest.h>

#include <cmath>

using namespace morpher;
using morpher::testing::central_differences;
using morpher::testing::random_matrix;
using morpher::testing::rel_err;

namespace {

struct FewShot {
  DatasetBundle bundle;
  FrozenGnn gnn;
  TextEmbeddingStore store;

  explicit FewShot(std::uint64_t seed)
      : bundle(few_shot_split(generate_separable_dataset(40, 8, 4, 2, seed), 10, seed)),
        gnn(init_gnn_random(4, 64, 32, seed + 100)),
        store(build_pseudo_store(bundle.label_texts, 64, seed + 5)) {}

  double test_accuracy(const PromptState& state) const {
    const auto graphs = bundle.select(bundle.splits.test);
    const auto golds = bundle.select_labels(bundle.splits.test);
    const auto preds = predict_all(graphs, state, gnn, &store, bundle.label_texts);
    return metrics(preds, golds, bundle.num_classes()).accuracy;
  }
};

}  // namespace

TEST_CASE("adam first step moves each coordinate by about lr against the gradient sign") {
  std::vector<double> p = {1.0, -2.0, 0.5};
  const std::vector<double> g = {3.0, -0.01, 0.0};
  AdamMoments m;
  AdamHyper hyper;
  hyper.learning_rate = 0.1;
  adam_step(p, g, m, 1, hyper);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-8));
  CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(p[2] == 0.5);

  std::vector<double> q = {1.0, -2.0, 0.5};
  AdamMoments m2;
  adam_step(q, g, m2, 1, hyper);
  CHECK(q == p);

  hyper.weight_decay = 0.5;
  std::vector<double> r = {2.0};
  const std::vector<double> zero = {0.0};
  AdamMoments m3;
  adam_step(r, zero, m3, 1, hyper);
  CHECK(r[0] == doctest::Approx(1.9).epsilon(1e-8));

  CHECK_THROWS_AS(adam_step(p, g, m, 0, hyper), ConfigError);
  const std::vector<double> short_g = {1.0};
  CHECK_THROWS_AS(adam_step(p, short_g, m, 2, hyper), DimensionError);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.style() == PromptStyle::improved);
  CHECK(c.delta_cross() == 0.1);
  c.mode = Mode::aio_head;
  CHECK(c.style() == PromptStyle::aio);
  CHECK(c.delta_cross() == 0.3);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.prompt.num_text_tokens = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("history has one record per epoch and the first loss obeys its bound") {
  FewShot f(0);
  TrainConfig config;
  config.epochs = 15;
  std::vector<PromptState> seen;
  const auto r = train_morpher(f.bundle, f.gnn, f.store, config,
                               [&](std::size_t, const PromptState& s) { seen.push_back(s); });
  REQUIRE(r.history.epochs.size() == 15);
  CHECK(seen.size() == 15);
  for (std::size_t e = 0; e < 15; ++e) CHECK(r.history.epochs[e].epoch == e);

  // Every logit is bounded by ||zG|| / tau since text embeddings are unit vectors.
  const auto init = init_prompt_state(config, f.gnn, &f.store, 2);
  double max_norm = 0.0;
  for (std::size_t i : f.bundle.splits.train) {
    max_norm = std::max(max_norm, graph_branch(f.bundle.graphs[i], init, f.gnn).z.norm());
  }
  const double b = static_cast<double>(f.bundle.splits.train.size());
  const double loss0 = r.history.epochs[0].loss;
  CHECK(loss0 >= 0.0);
  CHECK(loss0 <= std::log(b) + 2.0 * max_norm / config.tau);
  CHECK(seen[0].graph_prompt.tokens == init.graph_prompt.tokens);
}

TEST_CASE("Morpher fits a separable few-shot task") {
  FewShot f(1);
  TrainConfig config;
  config.seed = 1;
  const auto r = train_morpher(f.bundle, f.gnn, f.store, config);
  REQUIRE(r.history.best_epoch);
  CHECK(*r.history.epochs[*r.history.best_epoch].val_accuracy == 1.0);
  CHECK(f.test_accuracy(r.state) >= 0.9);
  CHECK(r.history.epochs.back().loss < r.history.epochs.front().loss);
}

TEST_CASE("the task-head baseline fits a separable few-shot task") {
  FewShot f(2);
  TrainConfig config;
  config.seed = 2;
  config.mode = Mode::improved_aio_head;
  const auto r = train_baseline(f.bundle, f.gnn, config);
  REQUIRE(r.state.head);
  CHECK(r.state.text_prompt.tokens.size() == 0);
  CHECK(f.test_accuracy(r.state) >= 0.9);
}

TEST_CASE("training is bitwise reproducible across thread counts") {
  FewShot f(3);
  TrainConfig config;
  config.epochs = 20;
  config.batch_size = 4;
  config.seed = 9;
  const auto a = train_morpher(f.bundle, f.gnn, f.store, config);
  config.threads = 4;
  const auto b = train_morpher(f.bundle, f.gnn, f.store, config);
  CHECK(a.state.graph_prompt.tokens == b.state.graph_prompt.tokens);
  CHECK(a.state.text_prompt.tokens == b.state.text_prompt.tokens);
  CHECK(a.state.proj_weight == b.state.proj_weight);
  CHECK(a.state.proj_bias == b.state.proj_bias);
  for (std::size_t e = 0; e < 20; ++e) CHECK(a.history.epochs[e].loss == b.history.epochs[e].loss);
}

TEST_CASE("freezing keeps blocks at their initial values") {
  FewShot f(4);
  TrainConfig config;
  config.epochs = 5;
  config.options.freeze_graph_prompt = true;
  config.options.freeze_projector = true;
  // Two equal-length labels: centering cancels the shared text prompt, so skip it.
  config.options.center_labels = false;
  const auto init = init_prompt_state(config, f.gnn, &f.store, 2);
  const auto r = train_morpher(f.bundle, f.gnn, f.store, config);
  CHECK(r.state.graph_prompt.tokens == init.graph_prompt.tokens);
  CHECK(r.state.proj_weight == init.proj_weight);
  CHECK(r.state.proj_bias == init.proj_bias);
  CHECK(r.state.text_prompt.tokens != init.text_prompt.tokens);
}

TEST_CASE("initial state shapes and seeds") {
  FewShot f(5);
  TrainConfig config;
  const auto s = init_prompt_state(config, f.gnn, &f.store, 2);
  CHECK(s.graph_prompt.tokens.rows() == 10);
  CHECK(s.graph_prompt.tokens.cols() == 4);
  CHECK(s.text_prompt.tokens.rows() == 4);
  CHECK(s.text_prompt.tokens.cols() == 64);
  CHECK(s.proj_weight.rows() == 64);
  CHECK(s.proj_weight.cols() == 32);
  CHECK(s.proj_bias.isZero());
  CHECK(s.proj_weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 32.0));
  CHECK(init_prompt_state(config, f.gnn, &f.store, 2).graph_prompt.tokens == s.graph_prompt.tokens);
  config.seed = 1;
  CHECK(init_prompt_state(config, f.gnn, &f.store, 2).graph_prompt.tokens != s.graph_prompt.tokens);

  config.mode = Mode::aio_head;
  const auto h = init_prompt_state(config, f.gnn, nullptr, 3);
  CHECK(h.style == PromptStyle::aio);
  REQUIRE(h.head);
  CHECK(h.head->weight.rows() == 3);
  CHECK(h.head->weight.cols() == 32);
}

TEST_CASE("baseline head gradients match finite differences at the initial state") {
  FewShot f(6);
  TrainConfig config;
  config.mode = Mode::aio_head;
  auto state = init_prompt_state(config, f.gnn, nullptr, 2);
  Batch batch;
  for (std::size_t i : f.bundle.splits.train) {
    batch.graphs.push_back(&f.bundle.graphs[i]);
    batch.labels.push_back(f.bundle.labels[i]);
  }
  const auto structures = batch_structures(batch, state);
  const auto grads = baseline_backward(batch, state, f.gnn, structures);
  auto loss = [&] { return baseline_loss(batch, state, f.gnn, structures); };
  CHECK(rel_err(grads.head_weight, central_differences(loss, state.head->weight)) < 1e-6);
  CHECK(rel_err(grads.graph_prompt, central_differences(loss, state.graph_prompt.tokens)) < 1e-5);
}
