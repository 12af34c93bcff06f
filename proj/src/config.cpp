#include "morpher/config.hpp"

#include "morpher/rng.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace morpher {

namespace {

using json = nlohmann::ordered_json;

json toml_to_json(const toml::node& node, const std::string& where) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) {
      out[std::string(k.str())] = toml_to_json(v, where + "." + std::string(k.str()));
    }
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_to_json(v, where));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  throw ConfigError("unsupported value type at '" + where + "'");
}

/// A JSON object whose keys must all be consumed; leftovers are typos.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be a table");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) throw ConfigError("unknown config key '" + qualified(k) + "'");
    }
  }

  bool has(const std::string& key) {
    const bool present = j_.contains(key) && !j_.at(key).is_null();
    if (j_.contains(key)) used_.insert(key);
    return present;
  }

  Section sub(const std::string& key) {
    static const json empty = json::object();
    return has(key) ? Section(j_.at(key), qualified(key)) : Section(empty, qualified(key));
  }

  void get(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("'" + qualified(key) + "' must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }
  void get(const std::string& key, std::uint64_t& out, bool) {
    std::size_t v = out;
    get(key, v);
    out = v;
  }
  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("'" + qualified(key) + "' must be a number");
    out = v.get<double>();
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + qualified(key) + "' must be a boolean");
    out = v.get<bool>();
  }
  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("'" + qualified(key) + "' must be a string");
    out = v.get<std::string>();
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError("'" + qualified(key) + "' must be an array of strings");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("'" + qualified(key) + "' must be an array of strings");
      out.push_back(e.get<std::string>());
    }
  }
  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    T v{};
    get(key, v);
    out = v;
  }
  void get_path(const std::string& key, std::optional<fs::path>& out, const fs::path& base) {
    std::optional<std::string> s;
    get(key, s);
    if (s) out = resolve(*s, base);
  }

  const json& raw(const std::string& key) {
    has(key);
    return j_.at(key);
  }
  std::string qualified(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  static fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.is_absolute() || base.empty()) return p.lexically_normal();
    return (base / p).lexically_normal();
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

PromptInit prompt_init_from_string(const std::string& s) {
  if (s == "kaiming") return PromptInit::kaiming;
  if (s == "normal") return PromptInit::normal;
  throw ConfigError("unknown prompt init '" + s + "'");
}

std::string to_string(PromptInit init) { return init == PromptInit::normal ? "normal" : "kaiming"; }

RunConfig from_json(const json& root, const fs::path& base) {
  RunConfig c;
  Section top(root, "");
  {
    std::string command;
    top.get("command", command);
  }
  top.get("seed", c.seed, true);
  top.get("threads", c.threads);
  top.get("deterministic", c.deterministic);
  {
    std::optional<fs::path> out;
    top.get_path("output_dir", out, base);
    c.output_dir = out.value_or(Section::resolve("out", base));
  }
  {
    auto s = top.sub("data");
    s.get_path("path", c.data.path, base);
    s.get_path("labels", c.data.labels, base);
    s.get("pad_to", c.data.pad_to);
    std::string level = to_string(c.data.task_level);
    s.get("task_level", level);
    c.data.task_level = task_level_from_string(level);
    s.get("shots", c.data.shots);
  }
  {
    auto s = top.sub("gnn");
    s.get_path("weights", c.gnn.weights, base);
    s.get("input_dim", c.gnn.input_dim);
    s.get("hidden", c.gnn.hidden);
    s.get("out", c.gnn.out);
  }
  {
    auto s = top.sub("text");
    s.get_path("embeddings", c.text.embeddings, base);
    s.get("pseudo_dim", c.text.pseudo_dim);
    if (s.has("midpoints")) {
      const auto& arr = s.raw("midpoints");
      if (!arr.is_array()) throw ConfigError("'text.midpoints' must be an array of tables");
      for (const auto& e : arr) {
        Section m(e, "text.midpoints[]");
        MidpointLabel mp;
        m.get("label", mp.label);
        m.get("left", mp.left);
        m.get("right", mp.right);
        if (mp.label.empty() || mp.left.empty() || mp.right.empty()) {
          throw ConfigError("text.midpoints entries need label, left and right");
        }
        c.text.midpoints.push_back(mp);
      }
    }
  }
  {
    auto& t = c.train;
    auto s = top.sub("train");
    std::string mode = to_string(t.mode);
    s.get("mode", mode);
    t.mode = mode_from_string(mode);
    s.get("epochs", t.epochs);
    s.get("learning_rate", t.adam.learning_rate);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("epsilon", t.adam.epsilon);
    s.get("weight_decay", t.adam.weight_decay);
    s.get("batch_size", t.batch_size);
    s.get("tau", t.tau);
  }
  {
    auto& p = c.train.prompt;
    auto s = top.sub("prompt");
    s.get("num_graph_tokens", p.num_graph_tokens);
    s.get("num_text_tokens", p.num_text_tokens);
    s.get("delta_inner", p.delta_inner);
    s.get("delta_cross", p.delta_cross);
    std::string init = to_string(p.init);
    s.get("init", init);
    p.init = prompt_init_from_string(init);
    s.get("init_std", p.init_std);
    s.get("init_std_multiplier", p.init_std_multiplier);
    s.get("text_seed_phrase", p.text_seed_phrase);
    std::optional<std::string> style;
    s.get("style", style);
    if (style) p.style = prompt_style_from_string(*style);
  }
  {
    auto& o = c.train.options;
    auto s = top.sub("options");
    s.get("center_labels", o.center_labels);
    s.get("renormalize_graph_output", o.renormalize_graph_output);
    s.get("freeze_graph_prompt", o.freeze_graph_prompt);
    s.get("freeze_text_prompt", o.freeze_text_prompt);
    s.get("freeze_projector", o.freeze_projector);
  }
  {
    auto s = top.sub("eval");
    s.get_path("state", c.eval.state, base);
    s.get("split", c.eval.split);
    s.get("silhouette", c.eval.silhouette);
    if (c.eval.split != "train" && c.eval.split != "val" && c.eval.split != "test" &&
        c.eval.split != "all") {
      throw ConfigError("eval.split must be train, val, test or all");
    }
  }
  {
    auto& z = c.zeroshot;
    auto s = top.sub("zeroshot");
    s.get_path("base_edges", z.base_edges, base);
    s.get("base_nodes", z.base_nodes);
    s.get("avg_degree", z.avg_degree);
    s.get("num_samples", z.num_samples);
    s.get("hops", z.hops);
    s.get("train_per_class", z.train_per_class);
    s.get("num_test", z.num_test);
    s.get("labels", z.labels);
    s.get("midpoint", z.midpoint);
  }
  {
    auto& g = c.gradcheck;
    auto s = top.sub("gradcheck");
    s.get("instances", g.instances);
    s.get("step", g.step);
    s.get("tolerance", g.tolerance);
    s.get("nodes", g.nodes);
    s.get("batch", g.batch);
    s.get("feature_dim", g.feature_dim);
    s.get("hidden", g.hidden);
    s.get("out", g.out);
    s.get("text_dim", g.text_dim);
    s.get("num_classes", g.num_classes);
  }
  {
    auto& g = c.gen;
    auto s = top.sub("gen");
    s.get("kind", g.kind);
    s.get_path("out", g.out, base);
    s.get("n_graphs", g.n_graphs);
    s.get("nodes_per_graph", g.nodes_per_graph);
    s.get("d", g.d);
    s.get("num_classes", g.num_classes);
    s.get("noise", g.noise);
    s.get("class_bias", g.class_bias);
    s.get("labels", g.labels);
    if (g.kind != "separable" && g.kind != "one_hot" && g.kind != "zero") {
      throw ConfigError("gen.kind must be separable, one_hot or zero");
    }
  }
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  c.train.seed = derive_seed(c.seed, "train");
  c.train.threads = c.threads;
  c.train.validate();
  return c;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json opt(const std::optional<fs::path>& v) { return v ? json(v->string()) : json(nullptr); }

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    return from_json(j, base_dir);
  }
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid TOML config at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  return from_json(toml_to_json(table, ""), base_dir);
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), fs::absolute(path).parent_path());
}

std::string manifest_json(const RunConfig& c, std::string_view command) {
  json j;
  if (!command.empty()) j["command"] = std::string(command);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["deterministic"] = c.deterministic;
  j["output_dir"] = c.output_dir.string();
  j["data"] = {{"path", opt(c.data.path)},
               {"labels", opt(c.data.labels)},
               {"pad_to", opt(c.data.pad_to)},
               {"task_level", to_string(c.data.task_level)},
               {"shots", opt(c.data.shots)}};
  j["gnn"] = {{"weights", opt(c.gnn.weights)},
              {"input_dim", opt(c.gnn.input_dim)},
              {"hidden", c.gnn.hidden},
              {"out", c.gnn.out}};
  json mids = json::array();
  for (const auto& m : c.text.midpoints) {
    mids.push_back({{"label", m.label}, {"left", m.left}, {"right", m.right}});
  }
  j["text"] = {{"embeddings", opt(c.text.embeddings)},
               {"pseudo_dim", c.text.pseudo_dim},
               {"midpoints", mids}};
  const auto& t = c.train;
  j["train"] = {{"mode", to_string(t.mode)},
                {"epochs", t.epochs},
                {"learning_rate", t.adam.learning_rate},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"epsilon", t.adam.epsilon},
                {"weight_decay", t.adam.weight_decay},
                {"batch_size", t.batch_size},
                {"tau", t.tau}};
  const auto& p = t.prompt;
  j["prompt"] = {{"num_graph_tokens", p.num_graph_tokens},
                 {"num_text_tokens", p.num_text_tokens},
                 {"delta_inner", p.delta_inner},
                 {"delta_cross", t.delta_cross()},
                 {"init", to_string(p.init)},
                 {"init_std", p.init_std},
                 {"init_std_multiplier", p.init_std_multiplier},
                 {"text_seed_phrase", opt(p.text_seed_phrase)},
                 {"style", to_string(t.style())}};
  const auto& o = t.options;
  j["options"] = {{"center_labels", o.center_labels},
                  {"renormalize_graph_output", o.renormalize_graph_output},
                  {"freeze_graph_prompt", o.freeze_graph_prompt},
                  {"freeze_text_prompt", o.freeze_text_prompt},
                  {"freeze_projector", o.freeze_projector}};
  j["eval"] = {{"state", opt(c.eval.state)},
               {"split", c.eval.split},
               {"silhouette", c.eval.silhouette}};
  const auto& z = c.zeroshot;
  j["zeroshot"] = {{"base_edges", opt(z.base_edges)},
                   {"base_nodes", z.base_nodes},
                   {"avg_degree", z.avg_degree},
                   {"num_samples", z.num_samples},
                   {"hops", z.hops},
                   {"train_per_class", z.train_per_class},
                   {"num_test", z.num_test},
                   {"labels", z.labels},
                   {"midpoint", z.midpoint}};
  const auto& g = c.gradcheck;
  j["gradcheck"] = {{"instances", g.instances},
                    {"step", g.step},
                    {"tolerance", g.tolerance},
                    {"nodes", g.nodes},
                    {"batch", g.batch},
                    {"feature_dim", g.feature_dim},
                    {"hidden", g.hidden},
                    {"out", g.out},
                    {"text_dim", g.text_dim},
                    {"num_classes", g.num_classes}};
  j["gen"] = {{"kind", c.gen.kind},
              {"out", opt(c.gen.out)},
              {"n_graphs", c.gen.n_graphs},
              {"nodes_per_graph", c.gen.nodes_per_graph},
              {"d", c.gen.d},
              {"num_classes", c.gen.num_classes},
              {"noise", c.gen.noise},
              {"class_bias", c.gen.class_bias},
              {"labels", c.gen.labels}};
  return j.dump(2);
}

std::uint64_t consumer_seed(const RunConfig& config, std::string_view consumer) {
  return derive_seed(config.seed, consumer);
}

}  // namespace morpher
