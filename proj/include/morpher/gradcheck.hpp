#pragma once

#include "morpher/config.hpp"

#include <map>

namespace morpher {

/// Worst block-wise relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
/// over all instances, keyed by parameter block name.
struct GradcheckReport {
  std::map<std::string, double> worst;
  std::size_t instances = 0;
  double tolerance = 1e-4;

  double overall() const;
  bool passed() const { return overall() < tolerance; }
};

/// Central finite differences with the prompted-graph structure frozen at the
/// current prompt (edges carry no gradient).
Matrix numeric_gradient(const std::function<double()>& loss, Matrix& params, double step);

/// ||a - f|| / max(||a||, ||f||, 1e-12).
double relative_error(const Matrix& analytic, const Matrix& numeric);

/// Random seeded instances checking P^g, P^t, W, b of the contrastive pipeline
/// and P^g, head W, head b of the task-head baseline.
GradcheckReport run_gradcheck(const GradcheckConfig& config, std::uint64_t seed);

}  // namespace morpher
