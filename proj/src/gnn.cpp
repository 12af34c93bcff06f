#include "morpher/gnn.hpp"

#include "morpher/binary_io.hpp"
#include "morpher/rng.hpp"

#include <cmath>

namespace morpher {

namespace {

constexpr std::uint32_t kGnnVersion = 1;

Matrix kaiming_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

FrozenGnn::FrozenGnn(Matrix w1, Matrix w2) : w1_(std::move(w1)), w2_(std::move(w2)) {
  if (w1_.rows() < 1 || w1_.cols() < 1 || w2_.cols() < 1) {
    throw DimensionError("GCN weights need d, h, d_g >= 1");
  }
  if (w1_.cols() != w2_.rows()) {
    throw DimensionError("W1 is d x " + std::to_string(w1_.cols()) + " but W2 has " +
                         std::to_string(w2_.rows()) + " rows");
  }
  if (!w1_.allFinite() || !w2_.allFinite()) throw DimensionError("GCN weights must be finite");
}

FrozenGnn init_gnn_random(std::size_t d, std::size_t hidden, std::size_t out, std::uint64_t seed) {
  if (d < 1 || hidden < 1 || out < 1) throw DimensionError("GCN dims must be >= 1");
  Rng rng(seed);
  Matrix w1 = kaiming_uniform(d, hidden, rng);
  Matrix w2 = kaiming_uniform(hidden, out, rng);
  return FrozenGnn(std::move(w1), std::move(w2));
}

FrozenGnn load_gnn_weights(const std::filesystem::path& path) {
  BinaryReader in(path);
  in.expect_magic("MGNN");
  if (const auto v = in.u32(); v != kGnnVersion) {
    throw FormatError(path.string() + ": unsupported MGNN version " + std::to_string(v));
  }
  const auto d = in.u32();
  const auto h = in.u32();
  const auto dg = in.u32();
  Matrix w1 = in.matrix(d, h);
  Matrix w2 = in.matrix(h, dg);
  if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes after W2");
  return FrozenGnn(std::move(w1), std::move(w2));
}

void save_gnn_weights(const FrozenGnn& gnn, const std::filesystem::path& path) {
  BinaryWriter out(path);
  out.magic("MGNN");
  out.u32(kGnnVersion);
  out.u32(static_cast<std::uint32_t>(gnn.input_dim()));
  out.u32(static_cast<std::uint32_t>(gnn.hidden_dim()));
  out.u32(static_cast<std::uint32_t>(gnn.output_dim()));
  out.matrix(gnn.w1());
  out.matrix(gnn.w2());
  out.close();
}

SparseMatrix normalize_adjacency(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("adjacency must be square");
  const auto n = a.rows();
  SparseMatrix identity(n, n);
  identity.setIdentity();
  SparseMatrix with_loops = a + identity;
  Vector inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double deg = 0.0;
    for (SparseMatrix::InnerIterator it(with_loops, i); it; ++it) deg += it.value();
    inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(with_loops, i); it; ++it) {
      it.valueRef() *= inv_sqrt_deg(it.row()) * inv_sqrt_deg(it.col());
    }
  }
  return with_loops;
}

ForwardTape gcn_forward(const SparseMatrix& a_hat, const Matrix& x, const FrozenGnn& gnn) {
  if (a_hat.rows() != x.rows() || a_hat.cols() != x.rows()) {
    throw DimensionError("normalized adjacency is " + std::to_string(a_hat.rows()) + "x" +
                         std::to_string(a_hat.cols()) + " but features have " +
                         std::to_string(x.rows()) + " rows");
  }
  if (static_cast<std::size_t>(x.cols()) != gnn.input_dim()) {
    throw DimensionError("feature dim " + std::to_string(x.cols()) + " != GCN input dim " +
                         std::to_string(gnn.input_dim()));
  }
  ForwardTape tape;
  tape.a_hat = a_hat;
  tape.x = x;
  tape.z1 = a_hat * (x * gnn.w1());
  tape.h1 = tape.z1.cwiseMax(0.0);
  tape.h2 = a_hat * (tape.h1 * gnn.w2());
  return tape;
}

Vector readout_mean(const Matrix& h) {
  if (h.rows() == 0 || h.cols() == 0) throw DimensionError("readout of an empty matrix");
  return h.colwise().mean().transpose();
}

Matrix gcn_backward_features(const ForwardTape& tape, const FrozenGnn& gnn, const Matrix& d_h2) {
  if (d_h2.rows() != tape.h2.rows() || d_h2.cols() != tape.h2.cols()) {
    throw DimensionError("upstream gradient shape does not match the tape");
  }
  if (tape.z1.cols() != gnn.w1().cols() || tape.h2.cols() != gnn.w2().cols()) {
    throw DimensionError("tape was recorded with a different GCN");
  }
  // Â is symmetric, so Âᵀ = Â.
  const Matrix d_h1 = tape.a_hat * (d_h2 * gnn.w2().transpose());
  const Matrix d_z1 = (tape.z1.array() > 0.0).select(d_h1, 0.0);
  return tape.a_hat * (d_z1 * gnn.w1().transpose());
}

}  // namespace morpher
