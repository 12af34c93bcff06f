#include "morpher/dataset_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace morpher {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct RawGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<double>> rows;
  std::size_t label = 0;
  std::optional<std::string> split;
};

RawGraph parse_line(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_no);
  }
  if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
  for (const auto& [key, _] : obj.items()) {
    if (key != "n" && key != "edges" && key != "x" && key != "y" && key != "split") {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  RawGraph g;
  try {
    const auto n = obj.at("n").get<std::int64_t>();
    if (n < 1) throw ParseError("graph must have at least one node", line_no);
    g.n = static_cast<std::size_t>(n);
    for (const auto& pair : obj.at("edges")) {
      if (!pair.is_array() || pair.size() != 2) throw ParseError("edge must be [u, v]", line_no);
      const auto u = pair[0].get<std::int64_t>();
      const auto v = pair[1].get<std::int64_t>();
      if (u < 0 || v < 0) throw ParseError("negative node index", line_no);
      g.edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
    }
    g.rows = obj.at("x").get<std::vector<std::vector<double>>>();
    const auto y = obj.at("y").get<std::int64_t>();
    if (y < 0) throw LabelError("line " + std::to_string(line_no) + ": negative class index");
    g.label = static_cast<std::size_t>(y);
    if (obj.contains("split")) g.split = obj.at("split").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_no);
  }
  if (g.rows.size() != g.n) {
    throw ParseError("x has " + std::to_string(g.rows.size()) + " rows, n = " + std::to_string(g.n),
                     line_no);
  }
  return g;
}

}  // namespace

std::filesystem::path default_labels_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p.replace_extension(".labels.json");
  return p;
}

std::vector<std::string> load_label_texts(const std::filesystem::path& path) {
  auto in = open_input(path);
  json arr;
  try {
    arr = json::parse(in);
    return arr.get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": labels file must be a JSON array of strings (" +
                      e.what() + ")");
  }
}

DatasetBundle load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  auto in = open_input(path);
  DatasetBundle bundle;
  bundle.task_level = options.task_level;
  bundle.label_texts = load_label_texts(options.labels_path.value_or(default_labels_path(path)));

  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto raw = parse_line(line, line_no);

    const std::size_t d = raw.rows.front().size();
    if (d == 0) throw ParseError("feature rows must be nonempty", line_no);
    Matrix x(static_cast<Eigen::Index>(raw.n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < raw.n; ++i) {
      if (raw.rows[i].size() != d) {
        throw DimensionError("line " + std::to_string(line_no) + ": ragged feature rows");
      }
      for (std::size_t j = 0; j < d; ++j) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw.rows[i][j];
      }
    }
    if (!options.pad_to) {
      if (dim && *dim != d) {
        throw DimensionError("line " + std::to_string(line_no) + ": feature dim " +
                             std::to_string(d) + " differs from " + std::to_string(*dim));
      }
      dim = d;
    }
    if (raw.label >= bundle.label_texts.size()) {
      throw LabelError("line " + std::to_string(line_no) + ": class " + std::to_string(raw.label) +
                       " >= " + std::to_string(bundle.label_texts.size()) + " labels");
    }

    Graph g = [&] {
      try {
        return Graph(raw.n, std::move(raw.edges), std::move(x));
      } catch (const GraphError& e) {
        throw GraphError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }();
    if (options.pad_to) g = g.padded_to(*options.pad_to);

    const std::size_t idx = bundle.graphs.size();
    if (raw.split) {
      if (*raw.split == "train") bundle.splits.train.push_back(idx);
      else if (*raw.split == "val") bundle.splits.val.push_back(idx);
      else if (*raw.split == "test") bundle.splits.test.push_back(idx);
      else throw ParseError("unknown split '" + *raw.split + "'", line_no);
    }
    bundle.graphs.push_back(std::move(g));
    bundle.labels.push_back(raw.label);
  }
  bundle.validate();
  return bundle;
}

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& path,
                  std::optional<std::filesystem::path> labels_path) {
  bundle.validate();
  std::vector<const char*> split_of(bundle.graphs.size(), nullptr);
  for (auto i : bundle.splits.train) split_of[i] = "train";
  for (auto i : bundle.splits.val) split_of[i] = "val";
  for (auto i : bundle.splits.test) split_of[i] = "test";

  auto out = open_output(path);
  for (std::size_t i = 0; i < bundle.graphs.size(); ++i) {
    const auto& g = bundle.graphs[i];
    json obj;
    obj["n"] = g.num_nodes();
    json edges = json::array();
    for (const auto& e : g.edges()) edges.push_back({e.u, e.v});
    obj["edges"] = std::move(edges);
    json rows = json::array();
    for (Eigen::Index r = 0; r < g.features().rows(); ++r) {
      std::vector<double> row(g.features().row(r).begin(), g.features().row(r).end());
      rows.push_back(std::move(row));
    }
    obj["x"] = std::move(rows);
    obj["y"] = bundle.labels[i];
    if (split_of[i]) obj["split"] = split_of[i];
    out << obj.dump() << '\n';
  }
  auto lout = open_output(labels_path.value_or(default_labels_path(path)));
  lout << json(bundle.label_texts).dump(2) << '\n';
}

std::vector<Edge> load_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    long long u = 0;
    long long v = 0;
    if (!(ss >> u)) continue;
    if (!(ss >> v) || u < 0 || v < 0) throw ParseError("expected \"u v\" with u, v >= 0", line_no);
    std::string rest;
    if (ss >> rest) throw ParseError("trailing tokens after edge", line_no);
    edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
  }
  return edges;
}

void save_edge_list(const std::vector<Edge>& edges, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& e : edges) out << e.u << ' ' << e.v << '\n';
}

}  // namespace morpher
