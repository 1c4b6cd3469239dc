#pragma once

// Generic minimization problem as seen by the trainers: a flat parameter
// vector, a fresh-batch sampler, and loss/gradient evaluation on a batch.

#include <functional>
#include <utility>
#include <vector>

#include "lrad/linalg.hpp"
#include "lrad/rng.hpp"

namespace lrad {

struct Batch {
  std::vector<Vector> inputs;
  std::vector<double> targets;  // may be empty for problems without labels

  int size() const { return static_cast<int>(inputs.size()); }
};

struct Problem {
  int param_dim = 0;
  std::function<Batch(RngStream&, int)> sample_batch;
  std::function<std::pair<double, Vector>(const Vector&, const Batch&)> loss_and_grad;
  std::function<double(const Vector&, const Batch&)> loss_only;
};

}  // namespace lrad
