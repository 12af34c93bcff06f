#include "morpher/eval.hpp"

#include "morpher/parallel.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>

namespace morpher {

std::size_t argmax(const Vector& scores) {
  if (scores.size() == 0) throw DimensionError("argmax of an empty vector");
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::size_t predict(const Graph& graph, const PromptState& state, const FrozenGnn& gnn,
                    const TextEmbeddingStore& store, std::span<const std::string> label_texts) {
  const Graph* g = &graph;
  return predict_all(std::span<const Graph* const>(&g, 1), state, gnn, &store, label_texts)[0];
}

std::vector<std::size_t> predict_all(std::span<const Graph* const> graphs, const PromptState& state,
                                     const FrozenGnn& gnn, const TextEmbeddingStore* store,
                                     std::span<const std::string> label_texts,
                                     std::size_t threads) {
  std::vector<std::size_t> out(graphs.size());
  if (state.mode != Mode::morpher) {
    parallel_for(graphs.size(), threads, [&](std::size_t i) {
      out[i] = argmax(baseline_logits(*graphs[i], state, gnn));
    });
    return out;
  }
  if (!store) throw ConfigError("Morpher prediction needs a text embedding store");
  if (label_texts.empty()) throw LabelError("no candidate labels");
  const auto text = text_branch(label_texts, state, *store);
  Matrix zt(static_cast<Eigen::Index>(text.z().size()), static_cast<Eigen::Index>(store->embedding_dim()));
  for (std::size_t c = 0; c < text.z().size(); ++c) zt.row(static_cast<Eigen::Index>(c)) = text.z()[c];
  parallel_for(graphs.size(), threads, [&](std::size_t i) {
    const auto branch = graph_branch(*graphs[i], state, gnn);
    out[i] = argmax(zt * branch.z);
  });
  return out;
}

std::vector<Vector> graph_embeddings(std::span<const Graph* const> graphs, const PromptState& state,
                                     const FrozenGnn& gnn, std::size_t threads) {
  std::vector<Vector> out(graphs.size());
  parallel_for(graphs.size(), threads, [&](std::size_t i) {
    if (state.mode == Mode::morpher) {
      out[i] = graph_branch(*graphs[i], state, gnn).z;
    } else {
      const auto enc = encode_graph(*graphs[i], state.graph_prompt, state.style, gnn);
      const double n = enc.readout.norm();
      if (!(n > kNormEpsilon)) throw DegenerateError("graph readout has (near) zero norm");
      out[i] = enc.readout / n;
    }
  });
  return out;
}

EvalReport metrics(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                   std::size_t num_classes) {
  if (preds.empty()) throw DimensionError("metrics of an empty prediction list");
  if (preds.size() != golds.size()) throw DimensionError("prediction/gold length mismatch");
  if (num_classes == 0) throw LabelError("zero classes");
  EvalReport r;
  r.num_samples = preds.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= num_classes || golds[i] >= num_classes) {
      throw LabelError("class index " + std::to_string(std::max(preds[i], golds[i])) +
                       " >= C = " + std::to_string(num_classes));
    }
    ++r.confusion[golds[i]][preds[i]];
    hits += preds[i] == golds[i] ? 1 : 0;
  }
  r.accuracy = static_cast<double>(hits) / static_cast<double>(preds.size());
  r.per_class.resize(num_classes);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = r.confusion[c][c], gold = 0, predicted = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      gold += r.confusion[c][k];
      predicted += r.confusion[k][c];
    }
    auto& m = r.per_class[c];
    m.support = gold;
    m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    const double denom = m.precision + m.recall;
    m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
    f1_sum += m.f1;
  }
  r.macro_f1 = f1_sum / static_cast<double>(num_classes);
  return r;
}

double silhouette(std::span<const Vector> embeddings, std::span<const std::size_t> labels) {
  if (embeddings.size() != labels.size()) throw DimensionError("embedding/label length mismatch");
  const std::size_t n = embeddings.size();
  std::size_t num_clusters = 0;
  for (auto l : labels) num_clusters = std::max(num_clusters, l + 1);
  std::vector<std::size_t> sizes(num_clusters, 0);
  for (auto l : labels) ++sizes[l];
  std::size_t nonempty = 0;
  for (auto s : sizes) nonempty += s > 0 ? 1 : 0;
  if (nonempty < 2) throw LabelError("silhouette needs at least two non-empty clusters");

  double total = 0.0;
  std::vector<double> dist_sum(num_clusters);
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist_sum[labels[j]] += (embeddings[i] - embeddings[j]).norm();
    }
    const double a = dist_sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_clusters; ++c) {
      if (c != labels[i] && sizes[c] > 0) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

std::size_t count_trainable(const PromptState& state) {
  auto size = [](const auto& m) { return static_cast<std::size_t>(m.size()); };
  std::size_t total = size(state.graph_prompt.tokens) + size(state.text_prompt.tokens) +
                      size(state.proj_weight) + size(state.proj_bias);
  if (state.head) total += size(state.head->weight) + size(state.head->bias);
  return total;
}

std::string to_json(const EvalReport& report, const std::vector<std::string>& label_texts) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["num_samples"] = report.num_samples;
  auto per_class = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    nlohmann::ordered_json e;
    e["class"] = c;
    if (c < label_texts.size()) e["label"] = label_texts[c];
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["support"] = m.support;
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  j["confusion"] = report.confusion;
  j["silhouette"] = report.silhouette ? nlohmann::ordered_json(*report.silhouette) : nullptr;
  j["trainable_parameters"] = report.trainable_parameters;
  j["runtime_seconds"] = report.runtime_seconds;
  return j.dump(2);
}

void write_report(const EvalReport& report, const std::vector<std::string>& label_texts,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(report, label_texts) << '\n';
}

}  // namespace morpher
