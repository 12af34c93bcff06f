#include "morpher/text.hpp"

#include "morpher/binary_io.hpp"
#include "morpher/rng.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>

namespace morpher {

namespace {

constexpr std::uint32_t kTextVersion = 1;

}  // namespace

TextEmbeddingStore::TextEmbeddingStore(std::vector<std::pair<std::string, Matrix>> entries) {
  if (entries.empty()) throw FormatError("embedding store needs at least one label");
  dim_ = static_cast<std::size_t>(entries.front().second.cols());
  if (dim_ == 0) throw DimensionError("embedding width must be positive");
  for (auto& [label, m] : entries) {
    if (m.rows() < 1) throw DimensionError("label '" + label + "' has no token rows");
    if (static_cast<std::size_t>(m.cols()) != dim_) {
      throw DimensionError("label '" + label + "' has width " + std::to_string(m.cols()) +
                           ", expected " + std::to_string(dim_));
    }
    if (!m.allFinite()) throw DimensionError("label '" + label + "' has non-finite embeddings");
    if (!tokens_.emplace(label, std::move(m)).second) {
      throw LabelError("duplicate label '" + label + "' in embedding store");
    }
    order_.push_back(label);
  }
}

const Matrix& TextEmbeddingStore::tokens(const std::string& label) const {
  const auto it = tokens_.find(label);
  if (it == tokens_.end()) throw LabelError("label '" + label + "' not in embedding store");
  return it->second;
}

TextEmbeddingStore load_token_embeddings(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic("MTEB");
  if (const auto v = in.u32(); v != kTextVersion) {
    throw FormatError(path.string() + ": unsupported MTEB version " + std::to_string(v));
  }
  const auto count = in.u32();
  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = in.u32();
    auto label = in.bytes(len);
    const auto k = in.u32();
    const auto dt = in.u32();
    Matrix m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dt));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(in.f32());
    }
    entries.emplace_back(std::move(label), std::move(m));
  }
  if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes after last entry");
  try {
    return TextEmbeddingStore(std::move(entries));
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_token_embeddings(const TextEmbeddingStore& store, const std::filesystem::path& path) {
  BinaryWriter out(path);
  out.magic("MTEB");
  out.u32(kTextVersion);
  out.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& label : store.labels()) {
    const auto& m = store.tokens(label);
    out.u32(static_cast<std::uint32_t>(label.size()));
    out.bytes(label);
    out.u32(static_cast<std::uint32_t>(m.rows()));
    out.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out.f32(static_cast<float>(m(i, j)));
    }
  }
  out.close();
}

Matrix pseudo_encode(std::string_view text, std::size_t d_t, std::size_t k, std::uint64_t seed) {
  if (d_t < 1 || k < 1) throw DimensionError("pseudo encoder needs d_t, K >= 1");
  Matrix out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d_t));
  const auto text_hash = fnv1a64(text);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    Rng rng(splitmix64(text_hash ^ splitmix64(seed + static_cast<std::uint64_t>(r))));
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(r, j) = rng.normal();
      norm = out.row(r).norm();
    } while (norm == 0.0);
    out.row(r) /= norm;
  }
  return out;
}

std::size_t pseudo_token_count(std::string_view text) {
  std::istringstream ss{std::string(text)};
  std::size_t words = 0;
  for (std::string w; ss >> w;) ++words;
  return std::max<std::size_t>(1, words);
}

TextEmbeddingStore build_pseudo_store(std::span<const std::string> labels, std::size_t d_t,
                                      std::uint64_t seed,
                                      std::span<const MidpointLabel> midpoints) {
  auto encode = [&](const std::string& text) {
    return pseudo_encode(text, d_t, pseudo_token_count(text), seed);
  };
  std::vector<std::pair<std::string, Matrix>> entries;
  for (const auto& label : labels) {
    const MidpointLabel* mid = nullptr;
    for (const auto& m : midpoints) {
      if (m.label == label) mid = &m;
    }
    if (!mid) {
      entries.emplace_back(label, encode(label));
      continue;
    }
    const Matrix left = encode(mid->left);
    const Matrix right = encode(mid->right);
    // Each side repeated by the other's token count so both carry equal weight.
    const auto kl = left.rows();
    const auto kr = right.rows();
    Matrix stacked(2 * kl * kr, static_cast<Eigen::Index>(d_t));
    for (Eigen::Index rep = 0; rep < kr; ++rep) stacked.middleRows(rep * kl, kl) = left;
    for (Eigen::Index rep = 0; rep < kl; ++rep) stacked.middleRows(kl * kr + rep * kr, kr) = right;
    entries.emplace_back(label, std::move(stacked));
  }
  return TextEmbeddingStore(std::move(entries));
}

TextPrompt init_text_prompt(const std::optional<std::string>& seed_phrase, std::size_t n_t,
                            std::size_t d_t, const PhraseEncoder& encoder, std::uint64_t seed) {
  if (n_t < 1 || d_t < 1) throw DimensionError("text prompt needs n_t, d_t >= 1");
  TextPrompt prompt;
  prompt.tokens.resize(static_cast<Eigen::Index>(n_t), static_cast<Eigen::Index>(d_t));
  if (seed_phrase && encoder) {
    if (auto rows = encoder(*seed_phrase);
        rows && rows->rows() > 0 && static_cast<std::size_t>(rows->cols()) == d_t) {
      for (Eigen::Index i = 0; i < prompt.tokens.rows(); ++i) {
        prompt.tokens.row(i) = rows->row(i % rows->rows());
      }
      return prompt;
    }
    spdlog::warn("seed phrase '{}' could not be encoded at width {}; using random init",
                 *seed_phrase, d_t);
  }
  Rng rng(seed);
  for (Eigen::Index i = 0; i < prompt.tokens.rows(); ++i) {
    for (Eigen::Index j = 0; j < prompt.tokens.cols(); ++j) prompt.tokens(i, j) = rng.normal(0.0, 0.02);
  }
  return prompt;
}

Vector prompted_text_embedding(const std::string& label, const TextPrompt& prompt,
                               const TextEmbeddingStore& store) {
  const Matrix& tokens = store.tokens(label);
  if (prompt.embedding_dim() != store.embedding_dim()) {
    throw DimensionError("text prompt width " + std::to_string(prompt.embedding_dim()) +
                         " != embedding width " + std::to_string(store.embedding_dim()));
  }
  const double rows = static_cast<double>(prompt.tokens.rows() + tokens.rows());
  return (prompt.tokens.colwise().sum() + tokens.colwise().sum()).transpose() / rows;
}

CenteredLabels center_normalize_labels(std::span<const Vector> h, bool enable_centering) {
  if (h.empty()) throw LabelError("no label embeddings to normalize");
  CenteredLabels out;
  out.centered = enable_centering && h.size() >= 2;
  if (enable_centering && !out.centered) {
    spdlog::warn("only one candidate label: skipping centering, normalizing only");
  }
  Vector mean = Vector::Zero(h.front().size());
  if (out.centered) {
    for (const auto& v : h) mean += v;
    mean /= static_cast<double>(h.size());
  }
  for (std::size_t c = 0; c < h.size(); ++c) {
    Vector u = h[c] - mean;
    const double norm = u.norm();
    if (!(norm > kNormEpsilon)) {
      throw DegenerateError("label embedding " + std::to_string(c) +
                            " has (near) zero norm after centering");
    }
    out.norms.push_back(norm);
    out.z.push_back(u / norm);
  }
  return out;
}

std::vector<Vector> center_normalize_backward(const CenteredLabels& forward,
                                              std::span<const Vector> d_z) {
  if (d_z.size() != forward.z.size()) throw DimensionError("gradient count != label count");
  std::vector<Vector> d_u(d_z.size());
  for (std::size_t c = 0; c < d_z.size(); ++c) {
    const auto& z = forward.z[c];
    d_u[c] = (d_z[c] - z * z.dot(d_z[c])) / forward.norms[c];
  }
  if (!forward.centered) return d_u;
  Vector mean = Vector::Zero(d_u.front().size());
  for (const auto& g : d_u) mean += g;
  mean /= static_cast<double>(d_u.size());
  for (auto& g : d_u) g -= mean;
  return d_u;
}

}  // namespace morpher
