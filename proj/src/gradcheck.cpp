#include "morpher/gradcheck.hpp"

#include "morpher/generators.hpp"
#include "morpher/rng.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace morpher {

namespace {

Graph random_graph(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) edges.push_back({rng.below(v), v});
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto u = rng.below(n), v = rng.below(n);
    if (u != v) edges.push_back({std::min(u, v), std::max(u, v)});
  }
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
  return Graph(n, std::move(edges), std::move(x));
}

Matrix as_matrix(const Vector& v) { return v; }

void record(GradcheckReport& report, const std::string& block, double err) {
  auto& slot = report.worst[block];
  slot = std::max(slot, err);
  spdlog::debug("gradcheck {}: {:.3e}", block, err);
}

}  // namespace

double GradcheckReport::overall() const {
  double w = 0.0;
  for (const auto& [k, v] : worst) w = std::max(w, v);
  return w;
}

Matrix numeric_gradient(const std::function<double()>& loss, Matrix& params, double step) {
  Matrix g(params.rows(), params.cols());
  for (Eigen::Index i = 0; i < params.rows(); ++i) {
    for (Eigen::Index j = 0; j < params.cols(); ++j) {
      const double keep = params(i, j);
      params(i, j) = keep + step;
      const double up = loss();
      params(i, j) = keep - step;
      const double down = loss();
      params(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), kNormEpsilon});
  return (analytic - numeric).norm() / scale;
}

GradcheckReport run_gradcheck(const GradcheckConfig& config, std::uint64_t seed) {
  if (config.instances == 0 || config.batch == 0 || config.nodes == 0) {
    throw ConfigError("gradcheck needs instances, batch and nodes >= 1");
  }
  if (config.num_classes < 2) throw ConfigError("gradcheck needs at least 2 classes");
  GradcheckReport report;
  report.tolerance = config.tolerance;
  report.instances = config.instances;

  std::vector<std::string> labels;
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon"};
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    std::string text = "label";
    for (std::size_t w = 0; w <= c % words.size(); ++w) text += " " + words[(c + w) % words.size()];
    labels.push_back(text + " " + std::to_string(c));
  }

  for (std::size_t inst = 0; inst < config.instances; ++inst) {
    const auto inst_seed = derive_seed(seed, "gradcheck/" + std::to_string(inst));
    Rng rng(inst_seed);
    const auto gnn =
        init_gnn_random(config.feature_dim, config.hidden, config.out, derive_seed(inst_seed, "gnn"));
    const auto store = build_pseudo_store(labels, config.text_dim, derive_seed(inst_seed, "text"));

    std::vector<Graph> graphs;
    Batch batch;
    for (std::size_t b = 0; b < config.batch; ++b) {
      graphs.push_back(random_graph(config.nodes + rng.below(3), config.feature_dim, rng));
    }
    for (std::size_t b = 0; b < config.batch; ++b) {
      batch.graphs.push_back(&graphs[b]);
      batch.labels.push_back(b < config.num_classes ? b : rng.below(config.num_classes));
    }

    TrainConfig tc;
    tc.seed = derive_seed(inst_seed, "state");
    tc.prompt.num_graph_tokens = 3;
    tc.prompt.num_text_tokens = 2;
    tc.options.renormalize_graph_output = inst % 2 == 1;
    PromptState state = init_prompt_state(tc, gnn, &store, config.num_classes);
    const auto structures = batch_structures(batch, state);
    const auto analytic = backward_all(batch, state, gnn, store, labels, structures);
    auto loss = [&] { return morpher_loss(batch, state, gnn, store, labels, structures); };
    const double h = config.step;
    record(report, "graph_prompt",
           relative_error(analytic.graph_prompt, numeric_gradient(loss, state.graph_prompt.tokens, h)));
    record(report, "text_prompt",
           relative_error(analytic.text_prompt, numeric_gradient(loss, state.text_prompt.tokens, h)));
    record(report, "proj_weight",
           relative_error(analytic.proj_weight, numeric_gradient(loss, state.proj_weight, h)));
    {
      Matrix b = state.proj_bias;
      auto loss_b = [&] {
        state.proj_bias = b.col(0);
        return loss();
      };
      const Matrix num = numeric_gradient(loss_b, b, h);
      state.proj_bias = b.col(0);
      record(report, "proj_bias", relative_error(as_matrix(analytic.proj_bias), num));
    }

    TrainConfig hc = tc;
    hc.mode = Mode::improved_aio_head;
    PromptState head_state = init_prompt_state(hc, gnn, nullptr, config.num_classes);
    const auto head_structures = batch_structures(batch, head_state);
    const auto head_grad = baseline_backward(batch, head_state, gnn, head_structures);
    auto head_loss = [&] { return baseline_loss(batch, head_state, gnn, head_structures); };
    record(report, "head_graph_prompt",
           relative_error(head_grad.graph_prompt,
                          numeric_gradient(head_loss, head_state.graph_prompt.tokens, h)));
    record(report, "head_weight",
           relative_error(head_grad.head_weight,
                          numeric_gradient(head_loss, head_state.head->weight, h)));
    {
      Matrix b = head_state.head->bias;
      auto loss_b = [&] {
        head_state.head->bias = b.col(0);
        return head_loss();
      };
      const Matrix num = numeric_gradient(loss_b, b, h);
      head_state.head->bias = b.col(0);
      record(report, "head_bias", relative_error(as_matrix(head_grad.head_bias), num));
    }
  }
  return report;
}

}  // namespace morpher
