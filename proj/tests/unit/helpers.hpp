#pragma once

#include "morpher/graph.hpp"
#include "morpher/rng.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <unistd.h>

namespace morpher::testing {

inline Graph random_graph(std::size_t n, std::size_t d, Rng& rng, std::size_t extra_edges = 0) {
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) edges.push_back({rng.below(v), v});
  for (std::size_t k = 0; k < extra_edges; ++k) {
    const auto u = rng.below(n), v = rng.below(n);
    if (u != v) edges.push_back({std::min(u, v), std::max(u, v)});
  }
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  }
  return Graph(n, std::move(edges), std::move(x));
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  return m;
}

/// Central differences of f w.r.t. every entry of m (m is restored afterwards).
template <typename M>
Matrix central_differences(const std::function<double()>& f, M& m, double h = 1e-5) {
  Matrix g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double keep = m(i, j);
      m(i, j) = keep + h;
      const double up = f();
      m(i, j) = keep - h;
      const double down = f();
      m(i, j) = keep;
      g(i, j) = (up - down) / (2 * h);
    }
  }
  return g;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double s = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("morpher_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace morpher::testing
