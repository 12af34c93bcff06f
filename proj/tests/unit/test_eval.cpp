#include "helpers.hpp"

#include "morpher/eval.hpp"
#include "morpher/generators.hpp"
#include "morpher/zero_shot.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <limits>

using namespace morpher;
using morpher::testing::random_graph;
using morpher::testing::random_matrix;
using morpher::testing::TempDir;

namespace {

PromptState random_state(Rng& rng, std::size_t d, std::size_t d_t, std::size_t d_g) {
  PromptState s;
  s.graph_prompt.tokens = random_matrix(3, static_cast<Eigen::Index>(d), rng);
  s.graph_prompt.delta_inner = 0.5;
  s.graph_prompt.delta_cross = 0.1;
  s.text_prompt.tokens = random_matrix(2, static_cast<Eigen::Index>(d_t), rng, 0.3);
  s.proj_weight = random_matrix(static_cast<Eigen::Index>(d_t), static_cast<Eigen::Index>(d_g), rng);
  s.proj_bias = random_matrix(static_cast<Eigen::Index>(d_t), 1, rng, 0.1);
  return s;
}

// Direct O(n^2) reference, written independently of the library routine.
double reference_silhouette(const std::vector<Vector>& x, const std::vector<std::size_t>& y) {
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::size_t, std::pair<double, std::size_t>> per;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& [sum, count] = per[y[j]];
      sum += std::sqrt((x[i] - x[j]).squaredNorm());
      ++count;
    }
    if (!per.contains(y[i])) continue;  // singleton
    const double a = per[y[i]].first / static_cast<double>(per[y[i]].second);
    double b = std::numeric_limits<double>::max();
    for (const auto& [c, v] : per) {
      if (c != y[i]) b = std::min(b, v.first / static_cast<double>(v.second));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("argmax ties go to the lowest index") {
  Vector s(4);
  s << 1.0, 3.0, 3.0, -1.0;
  CHECK(argmax(s) == 1);
  CHECK(argmax(Vector::Zero(3)) == 0);
  CHECK_THROWS_AS(argmax(Vector()), DimensionError);
}

TEST_CASE("predict agrees with a brute-force similarity table on 100 random cases") {
  Rng rng(1);
  const std::vector<std::string> labels = {"red", "green light", "blue sky today", "violet"};
  const auto gnn = init_gnn_random(3, 8, 5, 3);
  const auto store = build_pseudo_store(labels, 6, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto state = random_state(rng, 3, 6, 5);
    const auto g = random_graph(2 + rng.below(6), 3, rng, 3);
    const auto zg = graph_branch(g, state, gnn).z;
    const auto zt = text_branch(labels, state, store).z();
    std::size_t best = 0;
    for (std::size_t c = 1; c < labels.size(); ++c) {
      if (zt[c].dot(zg) > zt[best].dot(zg)) best = c;
    }
    CHECK(predict(g, state, gnn, store, labels) == best);

    // Scaling every candidate by the same positive factor keeps the argmax.
    Vector scores(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t c = 0; c < labels.size(); ++c) scores(static_cast<Eigen::Index>(c)) = zt[c].dot(zg);
    CHECK(argmax(scores * (0.1 + rng.uniform() * 10.0)) == best);
  }
}

TEST_CASE("antipodal labels flip with the sign of the graph embedding") {
  Vector e(2);
  e << 0.6, 0.8;
  const TextEmbeddingStore store({{"up", Matrix(e.transpose())}, {"down", Matrix(-e.transpose())}});
  const std::vector<std::string> labels = {"up", "down"};
  PromptState s;
  s.graph_prompt.tokens = Matrix::Zero(1, 1);
  s.graph_prompt.delta_cross = 0.1;
  s.text_prompt.tokens = Matrix::Zero(1, 2);
  s.proj_weight = Matrix::Zero(2, 1);
  s.proj_bias = Vector::Zero(2);
  const FrozenGnn gnn(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  const Graph g(1, {}, Matrix::Ones(1, 1));
  s.proj_weight.col(0) = e;
  CHECK(predict(g, s, gnn, store, labels) == 0);
  s.proj_weight.col(0) = -e;
  CHECK(predict(g, s, gnn, store, labels) == 1);
}

TEST_CASE("predict_all matches predict and is thread independent") {
  Rng rng(2);
  const std::vector<std::string> labels = {"a", "b", "c"};
  const auto gnn = init_gnn_random(3, 8, 5, 5);
  const auto store = build_pseudo_store(labels, 6, 6);
  const auto state = random_state(rng, 3, 6, 5);
  std::vector<Graph> graphs;
  for (int i = 0; i < 12; ++i) graphs.push_back(random_graph(4, 3, rng, 2));
  std::vector<const Graph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  const auto one = predict_all(ptrs, state, gnn, &store, labels, 1);
  CHECK(one == predict_all(ptrs, state, gnn, &store, labels, 3));
  for (std::size_t i = 0; i < graphs.size(); ++i) CHECK(one[i] == predict(graphs[i], state, gnn, store, labels));
  CHECK_THROWS_AS(predict_all(ptrs, state, gnn, nullptr, labels), ConfigError);
}

TEST_CASE("metrics examples") {
  const std::vector<std::size_t> golds = {0, 0, 1, 1};
  const auto perfect = metrics(golds, golds, 2);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);

  const std::vector<std::size_t> zeros = {0, 0, 0, 0};
  const auto r = metrics(zeros, golds, 2);
  CHECK(r.accuracy == 0.5);
  CHECK(r.per_class[0].precision == 0.5);
  CHECK(r.per_class[0].recall == 1.0);
  CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.confusion == std::vector<std::vector<std::size_t>>{{2, 0}, {2, 0}});

  const std::vector<std::size_t> one = {1};
  CHECK(metrics(one, one, 2).accuracy == 1.0);

  CHECK_THROWS_AS(metrics(std::vector<std::size_t>{}, std::vector<std::size_t>{}, 2), DimensionError);
  CHECK_THROWS_AS(metrics(one, zeros, 2), DimensionError);
  CHECK_THROWS_AS(metrics(std::vector<std::size_t>{2}, one, 2), LabelError);
}

TEST_CASE("confusion matrix totals and marginals") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 2 + rng.below(4), n = 1 + rng.below(40);
    std::vector<std::size_t> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.below(c);
      g[i] = rng.below(c);
    }
    const auto r = metrics(p, g, c);
    std::size_t total = 0, diag = 0;
    for (std::size_t a = 0; a < c; ++a) {
      std::size_t row = 0;
      for (std::size_t b = 0; b < c; ++b) {
        total += r.confusion[a][b];
        row += r.confusion[a][b];
      }
      diag += r.confusion[a][a];
      CHECK(row == r.per_class[a].support);
    }
    CHECK(total == n);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(diag) / static_cast<double>(n)));
    CHECK(r.num_samples == n);
  }
}

TEST_CASE("silhouette of far-apart tight clusters approaches 1") {
  std::vector<Vector> x;
  std::vector<std::size_t> y;
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    x.push_back(random_matrix(3, 1, rng, 0.01));
    y.push_back(0);
    x.push_back(Vector(random_matrix(3, 1, rng, 0.01)) + Vector::Constant(3, 1e3));
    y.push_back(1);
  }
  CHECK(silhouette(x, y) > 0.999);
  CHECK_THROWS_AS(silhouette(std::vector<Vector>(x.begin(), x.begin() + 1), std::vector<std::size_t>{0}), LabelError);
}

TEST_CASE("random labels on one isotropic blob score near 0") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    std::vector<Vector> x;
    std::vector<std::size_t> y;
    for (int i = 0; i < 400; ++i) {
      x.push_back(random_matrix(4, 1, rng));
      y.push_back(rng.below(3));
    }
    CHECK(std::abs(silhouette(x, y)) < 0.1);
  }
}

TEST_CASE("silhouette matches an O(n^2) reference") {
  std::vector<Vector> x(6, Vector(2));
  x[0] << 0, 0;
  x[1] << 1, 0;
  x[2] << 0, 2;
  x[3] << 5, 5;
  x[4] << 6, 4;
  x[5] << 9, 9;
  const std::vector<std::size_t> y = {0, 0, 1, 1, 1, 2};
  CHECK(silhouette(x, y) == doctest::Approx(reference_silhouette(x, y)).epsilon(1e-14));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> z;
    std::vector<std::size_t> l;
    for (int i = 0; i < 15; ++i) {
      z.push_back(random_matrix(3, 1, rng));
      l.push_back(i < 2 ? static_cast<std::size_t>(i) : rng.below(4));
    }
    CHECK(silhouette(z, l) == doctest::Approx(reference_silhouette(z, l)).epsilon(1e-12));
  }
}

TEST_CASE("merging two separated clusters lowers the silhouette") {
  Rng rng(6);
  std::vector<Vector> x;
  std::vector<std::size_t> y, merged;
  for (std::size_t c = 0; c < 3; ++c) {
    for (int i = 0; i < 8; ++i) {
      x.push_back(Vector(random_matrix(2, 1, rng, 0.2)) + Vector::Constant(2, 10.0 * static_cast<double>(c)));
      y.push_back(c);
      merged.push_back(c == 2 ? 1 : c);
    }
  }
  CHECK(silhouette(x, y) > silhouette(x, merged));
}

TEST_CASE("count_trainable examples") {
  PromptState s;
  s.graph_prompt.tokens = Matrix::Zero(10, 7);
  s.text_prompt.tokens = Matrix::Zero(4, 16);
  s.proj_weight = Matrix::Zero(16, 8);
  s.proj_bias = Vector::Zero(16);
  CHECK(count_trainable(s) == 278);

  PromptState proj_only = s;
  proj_only.graph_prompt.tokens = Matrix::Zero(0, 7);
  proj_only.text_prompt.tokens = Matrix::Zero(0, 16);
  CHECK(count_trainable(proj_only) == 16 * 8 + 16);

  PromptState head;
  head.mode = Mode::aio_head;
  head.graph_prompt.tokens = Matrix::Zero(10, 7);
  head.head = TaskHead{Matrix::Zero(3, 8), Vector::Zero(3)};
  CHECK(count_trainable(head) == 70 + 3 * 8 + 3);
}

TEST_CASE("report JSON carries every field") {
  const std::vector<std::size_t> golds = {0, 1, 1};
  const std::vector<std::size_t> preds = {0, 1, 0};
  auto r = metrics(preds, golds, 2);
  r.silhouette = 0.25;
  r.trainable_parameters = 278;
  const auto j = nlohmann::json::parse(to_json(r, {"cat", "dog"}));
  CHECK(j["accuracy"].get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(j["per_class"][1]["label"] == "dog");
  CHECK(j["per_class"][1]["support"] == 2);
  CHECK(j["confusion"][1][0] == 1);
  CHECK(j["silhouette"] == 0.25);
  CHECK(j["trainable_parameters"] == 278);
  r.silhouette.reset();
  CHECK(nlohmann::json::parse(to_json(r))["silhouette"].is_null());
}

TEST_CASE("zero-shot curves have one point per epoch and a fixed CSV header") {
  ZeroShotSpec spec;
  spec.base_edges = generate_random_network(120, 4.0, 1);
  spec.num_samples = 30;
  spec.train_per_class = 5;
  spec.num_test = 20;
  spec.seed = 2;
  const auto gnn = init_gnn_random(2, 16, 8, 3);
  const std::vector<MidpointLabel> mid = {{spec.label_texts[2], spec.label_texts[0], spec.label_texts[1]}};
  const auto store = build_pseudo_store(spec.label_texts, 16, 4, mid);
  TrainConfig config;
  config.epochs = 6;
  const auto r = zero_shot_protocol(spec, gnn, store, config);
  const auto& curves = r.training.history.zero_shot;
  REQUIRE(curves.size() == 6);
  for (std::size_t e = 0; e < 6; ++e) {
    CHECK(curves[e].epoch == e);
    CHECK(curves[e].acc_test_zero >= 0.0);
    CHECK(curves[e].acc_test_zero <= 1.0);
  }
  // Training never sees the unseen class.
  for (std::size_t i : r.bundle.splits.train) CHECK(r.bundle.labels[i] < 2);

  TempDir dir("zs");
  write_zero_shot_csv(curves, dir / "c.csv");
  const auto text = morpher::testing::read_file(dir / "c.csv");
  CHECK(text.substr(0, text.find('\n')) == "epoch,acc_train2,acc_train3,acc_test_zero");
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}
