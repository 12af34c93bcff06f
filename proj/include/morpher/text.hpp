#pragma once

#include "morpher/common.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace morpher {

/// Frozen per-token text embeddings, keyed by label string. Immutable once built.
class TextEmbeddingStore {
 public:
  TextEmbeddingStore() = default;
  /// Throws on an empty entry list, a duplicate label, K = 0 or a d_t mismatch.
  explicit TextEmbeddingStore(std::vector<std::pair<std::string, Matrix>> entries);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t embedding_dim() const noexcept { return dim_; }
  bool contains(const std::string& label) const { return tokens_.contains(label); }
  /// Throws LabelError for an unknown label.
  const Matrix& tokens(const std::string& label) const;
  /// Labels in insertion (file) order.
  const std::vector<std::string>& labels() const noexcept { return order_; }

 private:
  std::map<std::string, Matrix> tokens_;
  std::vector<std::string> order_;
  std::size_t dim_ = 0;
};

/// MTEB file: "MTEB", u32 version = 1, u32 num_entries, then per entry u32 byte
/// length + UTF-8 label, u32 K, u32 d_t and K·d_t little-endian f32 row-major.
TextEmbeddingStore load_token_embeddings(const std::filesystem::path& path);
void save_token_embeddings(const TextEmbeddingStore& store, const std::filesystem::path& path);

/// Deterministic stand-in for a text encoder: K unit rows, row r seeded by
/// hash(text, r, seed).
Matrix pseudo_encode(std::string_view text, std::size_t d_t, std::size_t k, std::uint64_t seed);

/// Token count the pseudo store uses for a text: its whitespace-separated word count (>= 1).
std::size_t pseudo_token_count(std::string_view text);

/// Makes `label`'s token matrix the stack of `left`'s and `right`'s, so its
/// mean readout is exactly the midpoint of theirs.
struct MidpointLabel {
  std::string label;
  std::string left;
  std::string right;
};

TextEmbeddingStore build_pseudo_store(std::span<const std::string> labels, std::size_t d_t,
                                      std::uint64_t seed,
                                      std::span<const MidpointLabel> midpoints = {});

/// Learnable text-prompt tokens (n_t x d_t), prepended to a label's token rows.
struct TextPrompt {
  Matrix tokens;

  std::size_t num_tokens() const noexcept { return static_cast<std::size_t>(tokens.rows()); }
  std::size_t embedding_dim() const noexcept { return static_cast<std::size_t>(tokens.cols()); }
};

/// Maps a phrase to its token embeddings, or nullopt if it cannot be encoded.
using PhraseEncoder = std::function<std::optional<Matrix>(const std::string&)>;

/// Rows are the phrase's token embeddings (cycled when the phrase is shorter
/// than n_t); without an encodable phrase, Gaussian entries with std 0.02.
TextPrompt init_text_prompt(const std::optional<std::string>& seed_phrase, std::size_t n_t,
                            std::size_t d_t, const PhraseEncoder& encoder, std::uint64_t seed);

/// Mean over the rows of [P; tokens(label)].
Vector prompted_text_embedding(const std::string& label, const TextPrompt& prompt,
                               const TextEmbeddingStore& store);

/// Label embeddings after centering on their mean and projecting to the unit sphere.
struct CenteredLabels {
  std::vector<Vector> z;
  std::vector<double> norms;  // norm of each centered vector
  bool centered = true;
};

/// z_c = (h_c - mean) / ||h_c - mean||. With fewer than two labels, or when
/// `enable_centering` is false, centering is skipped and h_c is only normalized.
/// Throws DegenerateError if a vector to be normalized has norm <= 1e-12.
CenteredLabels center_normalize_labels(std::span<const Vector> h, bool enable_centering = true);

/// Pulls gradients w.r.t. z back to gradients w.r.t. h.
std::vector<Vector> center_normalize_backward(const CenteredLabels& forward,
                                              std::span<const Vector> d_z);

}  // namespace morpher
