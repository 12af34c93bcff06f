#pragma once

#include "morpher/graph.hpp"

#include <filesystem>
#include <optional>

namespace morpher {

struct LoadOptions {
  /// Zero-pad every feature row on the right to this width.
  std::optional<std::size_t> pad_to;
  /// Labels file; defaults to the sibling "<stem>.labels.json".
  std::optional<std::filesystem::path> labels_path;
  TaskLevel task_level = TaskLevel::graph;
};

/// Sibling labels path for a dataset file: "data/foo.jsonl" -> "data/foo.labels.json".
std::filesystem::path default_labels_path(const std::filesystem::path& dataset);

/// Reads a JSON-lines dataset: one {"n", "edges", "x", "y"} object per line.
///
/// A line may also carry "split": "train" | "val" | "test"; graphs without it go
/// to no split. Blank lines are skipped. Errors carry the 1-based line number.
DatasetBundle load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

std::vector<std::string> load_label_texts(const std::filesystem::path& path);

/// Writes the bundle in the format load_dataset reads, plus the labels file.
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& path,
                  std::optional<std::filesystem::path> labels_path = std::nullopt);

/// Whitespace-separated "u v" pairs, 0-based. '#' starts a comment.
std::vector<Edge> load_edge_list(const std::filesystem::path& path);
void save_edge_list(const std::vector<Edge>& edges, const std::filesystem::path& path);

}  // namespace morpher
