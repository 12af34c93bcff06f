#pragma once

#include "morpher/common.hpp"

#include <filesystem>

namespace morpher {

/// Frozen two-layer GCN: H1 = ReLU(Â X W1), H2 = Â H1 W2.
///
/// The weights are fixed at construction; nothing in the library updates them.
class FrozenGnn {
 public:
  FrozenGnn(Matrix w1, Matrix w2);

  const Matrix& w1() const noexcept { return w1_; }
  const Matrix& w2() const noexcept { return w2_; }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(w1_.rows()); }
  std::size_t hidden_dim() const noexcept { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t output_dim() const noexcept { return static_cast<std::size_t>(w2_.cols()); }
  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(w1_.size() + w2_.size());
  }

 private:
  Matrix w1_;
  Matrix w2_;
};

/// Kaiming-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)].
FrozenGnn init_gnn_random(std::size_t d, std::size_t hidden, std::size_t out, std::uint64_t seed);

/// MGNN file: "MGNN", u32 version = 1, u32 d, u32 h, u32 d_g, W1 then W2 as
/// row-major little-endian f64.
FrozenGnn load_gnn_weights(const std::filesystem::path& path);
void save_gnn_weights(const FrozenGnn& gnn, const std::filesystem::path& path);

/// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
SparseMatrix normalize_adjacency(const SparseMatrix& a);

/// Intermediates of one forward pass, kept for the backward pass.
struct ForwardTape {
  SparseMatrix a_hat;
  Matrix x;   // input features
  Matrix z1;  // Â X W1 (pre-activation)
  Matrix h1;  // ReLU(z1)
  Matrix h2;  // Â H1 W2
};

ForwardTape gcn_forward(const SparseMatrix& a_hat, const Matrix& x, const FrozenGnn& gnn);

/// Column-wise mean over rows.
Vector readout_mean(const Matrix& h);

/// Gradient of a scalar w.r.t. the input features, given its gradient w.r.t. H2.
/// The weights receive no gradient. ReLU'(0) is taken as 0.
Matrix gcn_backward_features(const ForwardTape& tape, const FrozenGnn& gnn, const Matrix& d_h2);

}  // namespace morpher
