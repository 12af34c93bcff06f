#include "morpher/commands.hpp"
#include "morpher/dataset_io.hpp"
#include "morpher/eval.hpp"
#include "morpher/generators.hpp"
#include "morpher/gradcheck.hpp"
#include "morpher/sampling.hpp"
#include "morpher/state_io.hpp"
#include "morpher/train.hpp"
#include "morpher/zero_shot.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace morpher;

namespace {

std::vector<Edge> to_edges(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs) edges.push_back({std::min(u, v), std::max(u, v)});
  return edges;
}

std::vector<std::pair<std::size_t, std::size_t>> from_edges(const std::vector<Edge>& edges) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.emplace_back(e.u, e.v);
  return out;
}

std::vector<const Graph*> pointers(const std::vector<Graph>& graphs) {
  std::vector<const Graph*> out;
  for (const auto& g : graphs) out.push_back(&g);
  return out;
}

}  // namespace

PYBIND11_MODULE(_morpher, m) {
  m.doc() = "Graph and text prompt tuning against frozen encoders";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<LabelError>(m, "LabelError", error.ptr());
  py::register_exception<GraphError>(m, "GraphError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::enum_<PromptStyle>(m, "PromptStyle").value("aio", PromptStyle::aio).value("improved", PromptStyle::improved);
  py::enum_<Mode>(m, "Mode")
      .value("morpher", Mode::morpher)
      .value("improved_aio_head", Mode::improved_aio_head)
      .value("aio_head", Mode::aio_head);
  py::enum_<PromptInit>(m, "PromptInit").value("kaiming", PromptInit::kaiming).value("normal", PromptInit::normal);
  py::enum_<TaskLevel>(m, "TaskLevel")
      .value("graph", TaskLevel::graph)
      .value("node", TaskLevel::node)
      .value("edge", TaskLevel::edge);

  py::class_<Graph>(m, "Graph")
      .def(py::init([](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                       const Matrix& features) { return Graph(n, to_edges(edges), features); }),
           py::arg("num_nodes"), py::arg("edges"), py::arg("features"))
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("feature_dim", &Graph::feature_dim)
      .def_property_readonly("edges", [](const Graph& g) { return from_edges(g.edges()); })
      .def_property_readonly("features", &Graph::features)
      .def_property_readonly("source_ids", &Graph::source_ids)
      .def_property_readonly("centers", &Graph::centers);

  py::class_<Splits>(m, "Splits")
      .def(py::init<>())
      .def_readwrite("train", &Splits::train)
      .def_readwrite("val", &Splits::val)
      .def_readwrite("test", &Splits::test);

  py::class_<DatasetBundle>(m, "DatasetBundle")
      .def(py::init<>())
      .def_readwrite("graphs", &DatasetBundle::graphs)
      .def_readwrite("labels", &DatasetBundle::labels)
      .def_readwrite("label_texts", &DatasetBundle::label_texts)
      .def_readwrite("splits", &DatasetBundle::splits)
      .def_readwrite("task_level", &DatasetBundle::task_level)
      .def_property_readonly("num_classes", &DatasetBundle::num_classes)
      .def("validate", &DatasetBundle::validate);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, std::optional<std::size_t> pad_to,
         std::optional<std::filesystem::path> labels_path) {
        LoadOptions o;
        o.pad_to = pad_to;
        o.labels_path = std::move(labels_path);
        return load_dataset(path, o);
      },
      py::arg("path"), py::arg("pad_to") = py::none(), py::arg("labels_path") = py::none());
  m.def("save_dataset", &save_dataset, py::arg("bundle"), py::arg("path"), py::arg("labels_path") = py::none());
  m.def("generate_separable_dataset", &generate_separable_dataset, py::arg("n_graphs"),
        py::arg("nodes_per_graph"), py::arg("d"), py::arg("num_classes"), py::arg("seed"), py::arg("noise") = 0.1);
  m.def("generate_one_hot_dataset", &generate_one_hot_dataset, py::arg("n_graphs"), py::arg("nodes_per_graph"),
        py::arg("d"), py::arg("num_classes"), py::arg("seed"), py::arg("class_bias") = 0.0);
  m.def("few_shot_split", &few_shot_split, py::arg("bundle"), py::arg("shots_per_class"), py::arg("seed"));
  m.def(
      "induce_ego_graph",
      [](const Graph& g, const std::vector<std::size_t>& centers, std::size_t hops) {
        return induce_ego_graph(g, centers, hops);
      },
      py::arg("graph"), py::arg("centers"), py::arg("hops") = 2);

  py::class_<GraphPrompt>(m, "GraphPrompt")
      .def(py::init<>())
      .def_readwrite("tokens", &GraphPrompt::tokens)
      .def_readwrite("delta_inner", &GraphPrompt::delta_inner)
      .def_readwrite("delta_cross", &GraphPrompt::delta_cross);
  m.def("init_graph_prompt", &init_graph_prompt, py::arg("num_tokens"), py::arg("d"), py::arg("seed"),
        py::arg("std_multiplier") = 1.0);

  py::class_<PromptedGraph>(m, "PromptedGraph")
      .def_readonly("num_tokens", &PromptedGraph::num_tokens)
      .def_readonly("num_input_nodes", &PromptedGraph::num_input_nodes)
      .def_readonly("inner_edge_count", &PromptedGraph::inner_edge_count)
      .def_readonly("cross_edge_count", &PromptedGraph::cross_edge_count)
      .def_readonly("features", &PromptedGraph::features)
      .def_property_readonly("edges", [](const PromptedGraph& p) { return from_edges(p.edges); });
  m.def("build_prompted", &build_prompted, py::arg("graph"), py::arg("prompt"), py::arg("style"));

  py::class_<FrozenGnn>(m, "FrozenGnn")
      .def(py::init<Matrix, Matrix>(), py::arg("w1"), py::arg("w2"))
      .def_property_readonly("w1", &FrozenGnn::w1)
      .def_property_readonly("w2", &FrozenGnn::w2)
      .def_property_readonly("parameter_count", &FrozenGnn::parameter_count);
  m.def("init_gnn_random", &init_gnn_random, py::arg("d"), py::arg("hidden"), py::arg("out"), py::arg("seed"));
  m.def("load_gnn_weights", &load_gnn_weights);
  m.def("save_gnn_weights", &save_gnn_weights);

  py::class_<TextEmbeddingStore>(m, "TextEmbeddingStore")
      .def(py::init<std::vector<std::pair<std::string, Matrix>>>(), py::arg("entries"))
      .def_property_readonly("labels", &TextEmbeddingStore::labels)
      .def_property_readonly("embedding_dim", &TextEmbeddingStore::embedding_dim)
      .def("tokens", &TextEmbeddingStore::tokens)
      .def("__len__", &TextEmbeddingStore::size)
      .def("__contains__", &TextEmbeddingStore::contains);
  py::class_<MidpointLabel>(m, "MidpointLabel")
      .def(py::init<std::string, std::string, std::string>(), py::arg("label"), py::arg("left"), py::arg("right"));
  m.def("load_token_embeddings", &load_token_embeddings);
  m.def("save_token_embeddings", &save_token_embeddings);
  m.def(
      "build_pseudo_store",
      [](const std::vector<std::string>& labels, std::size_t d_t, std::uint64_t seed,
         const std::vector<MidpointLabel>& midpoints) { return build_pseudo_store(labels, d_t, seed, midpoints); },
      py::arg("labels"), py::arg("d_t"), py::arg("seed"), py::arg("midpoints") = std::vector<MidpointLabel>{});

  py::class_<TaskHead>(m, "TaskHead")
      .def_readwrite("weight", &TaskHead::weight)
      .def_readwrite("bias", &TaskHead::bias);
  py::class_<AlignOptions>(m, "AlignOptions")
      .def(py::init<>())
      .def_readwrite("center_labels", &AlignOptions::center_labels)
      .def_readwrite("renormalize_graph_output", &AlignOptions::renormalize_graph_output)
      .def_readwrite("freeze_graph_prompt", &AlignOptions::freeze_graph_prompt)
      .def_readwrite("freeze_text_prompt", &AlignOptions::freeze_text_prompt)
      .def_readwrite("freeze_projector", &AlignOptions::freeze_projector);
  py::class_<PromptState>(m, "PromptState")
      .def_readwrite("mode", &PromptState::mode)
      .def_readwrite("style", &PromptState::style)
      .def_readwrite("graph_prompt", &PromptState::graph_prompt)
      .def_property(
          "text_prompt", [](const PromptState& s) { return s.text_prompt.tokens; },
          [](PromptState& s, const Matrix& t) { s.text_prompt.tokens = t; })
      .def_readwrite("proj_weight", &PromptState::proj_weight)
      .def_readwrite("proj_bias", &PromptState::proj_bias)
      .def_readwrite("tau", &PromptState::tau)
      .def_readwrite("options", &PromptState::options)
      .def_readwrite("head", &PromptState::head);
  m.def("save_prompt_state", &save_prompt_state);
  m.def("load_prompt_state", &load_prompt_state);

  py::class_<AdamHyper>(m, "AdamHyper")
      .def(py::init<>())
      .def_readwrite("learning_rate", &AdamHyper::learning_rate)
      .def_readwrite("beta1", &AdamHyper::beta1)
      .def_readwrite("beta2", &AdamHyper::beta2)
      .def_readwrite("epsilon", &AdamHyper::epsilon)
      .def_readwrite("weight_decay", &AdamHyper::weight_decay);
  py::class_<PromptConfig>(m, "PromptConfig")
      .def(py::init<>())
      .def_readwrite("num_graph_tokens", &PromptConfig::num_graph_tokens)
      .def_readwrite("num_text_tokens", &PromptConfig::num_text_tokens)
      .def_readwrite("delta_inner", &PromptConfig::delta_inner)
      .def_readwrite("delta_cross", &PromptConfig::delta_cross)
      .def_readwrite("init", &PromptConfig::init)
      .def_readwrite("init_std", &PromptConfig::init_std)
      .def_readwrite("init_std_multiplier", &PromptConfig::init_std_multiplier)
      .def_readwrite("text_seed_phrase", &PromptConfig::text_seed_phrase)
      .def_readwrite("style", &PromptConfig::style);
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("mode", &TrainConfig::mode)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("adam", &TrainConfig::adam)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("threads", &TrainConfig::threads)
      .def_readwrite("prompt", &TrainConfig::prompt)
      .def_readwrite("options", &TrainConfig::options)
      .def("validate", &TrainConfig::validate);

  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("loss", &EpochRecord::loss)
      .def_readonly("train_accuracy", &EpochRecord::train_accuracy)
      .def_readonly("val_accuracy", &EpochRecord::val_accuracy);
  py::class_<ZeroShotPoint>(m, "ZeroShotPoint")
      .def_readonly("epoch", &ZeroShotPoint::epoch)
      .def_readonly("acc_train2", &ZeroShotPoint::acc_train2)
      .def_readonly("acc_train3", &ZeroShotPoint::acc_train3)
      .def_readonly("acc_test_zero", &ZeroShotPoint::acc_test_zero);
  py::class_<TrainHistory>(m, "TrainHistory")
      .def_readonly("epochs", &TrainHistory::epochs)
      .def_readonly("zero_shot", &TrainHistory::zero_shot)
      .def_readonly("best_epoch", &TrainHistory::best_epoch);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("state", &TrainResult::state)
      .def_readonly("history", &TrainResult::history);

  m.def(
      "train_morpher",
      [](const DatasetBundle& b, const FrozenGnn& gnn, const TextEmbeddingStore& store, const TrainConfig& c) {
        py::gil_scoped_release release;
        return train_morpher(b, gnn, store, c);
      },
      py::arg("bundle"), py::arg("gnn"), py::arg("store"), py::arg("config"));
  m.def(
      "train_baseline",
      [](const DatasetBundle& b, const FrozenGnn& gnn, const TrainConfig& c) {
        py::gil_scoped_release release;
        return train_baseline(b, gnn, c);
      },
      py::arg("bundle"), py::arg("gnn"), py::arg("config"));

  m.def(
      "predict",
      [](const std::vector<Graph>& graphs, const PromptState& state, const FrozenGnn& gnn,
         const TextEmbeddingStore* store, const std::vector<std::string>& labels, std::size_t threads) {
        const auto ptrs = pointers(graphs);
        return predict_all(ptrs, state, gnn, store, labels, threads);
      },
      py::arg("graphs"), py::arg("state"), py::arg("gnn"), py::arg("store"), py::arg("label_texts"),
      py::arg("threads") = 1);
  m.def(
      "graph_embeddings",
      [](const std::vector<Graph>& graphs, const PromptState& state, const FrozenGnn& gnn) {
        const auto ptrs = pointers(graphs);
        return graph_embeddings(ptrs, state, gnn);
      },
      py::arg("graphs"), py::arg("state"), py::arg("gnn"));

  py::class_<ClassMetrics>(m, "ClassMetrics")
      .def_readonly("precision", &ClassMetrics::precision)
      .def_readonly("recall", &ClassMetrics::recall)
      .def_readonly("f1", &ClassMetrics::f1)
      .def_readonly("support", &ClassMetrics::support);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("macro_f1", &EvalReport::macro_f1)
      .def_readonly("per_class", &EvalReport::per_class)
      .def_readonly("confusion", &EvalReport::confusion)
      .def_readonly("num_samples", &EvalReport::num_samples)
      .def("to_json", [](const EvalReport& r, const std::vector<std::string>& labels) { return to_json(r, labels); },
           py::arg("label_texts") = std::vector<std::string>{});
  m.def(
      "metrics",
      [](const std::vector<std::size_t>& preds, const std::vector<std::size_t>& golds, std::size_t c) {
        return metrics(preds, golds, c);
      },
      py::arg("preds"), py::arg("golds"), py::arg("num_classes"));
  m.def(
      "silhouette",
      [](const std::vector<Vector>& x, const std::vector<std::size_t>& y) { return silhouette(x, y); },
      py::arg("embeddings"), py::arg("labels"));
  m.def("count_trainable", &count_trainable);
  m.def(
      "contrastive_loss",
      [](const std::vector<Vector>& g, const std::vector<Vector>& t, double tau) { return contrastive_loss(g, t, tau); },
      py::arg("z_graph"), py::arg("z_text"), py::arg("tau"));

  py::class_<GradcheckConfig>(m, "GradcheckConfig")
      .def(py::init<>())
      .def_readwrite("instances", &GradcheckConfig::instances)
      .def_readwrite("step", &GradcheckConfig::step)
      .def_readwrite("tolerance", &GradcheckConfig::tolerance);
  py::class_<GradcheckReport>(m, "GradcheckReport")
      .def_readonly("worst", &GradcheckReport::worst)
      .def_readonly("instances", &GradcheckReport::instances)
      .def("overall", &GradcheckReport::overall)
      .def("passed", &GradcheckReport::passed);
  m.def("run_gradcheck", &run_gradcheck, py::arg("config"), py::arg("seed"));

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("threads", &RunConfig::threads)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("train", &RunConfig::train);
  m.def("load_run_config", &load_run_config);
  m.def(
      "parse_run_config",
      [](const std::string& text, const std::filesystem::path& base) { return parse_run_config(text, base); },
      py::arg("text"), py::arg("base_dir") = std::filesystem::path{});
  m.def("manifest_json", &manifest_json, py::arg("config"), py::arg("command") = "");
  for (const auto& [name, fn] : std::vector<std::pair<const char*, int (*)(const RunConfig&)>>{
           {"cmd_train", &cmd_train},
           {"cmd_eval", &cmd_eval},
           {"cmd_zeroshot", &cmd_zeroshot},
           {"cmd_gradcheck", &cmd_gradcheck},
           {"cmd_gen", &cmd_gen}}) {
    m.def(name, fn, py::arg("config"));
  }
}
