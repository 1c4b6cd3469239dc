#pragma once

// Concrete problem instances: a cubic-polynomial regression target, the
// heat-equation regression of the deep Kolmogorov method, and the quadratic
// convergence experiment evaluated along the rescaled clock N_t.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lrad/linalg.hpp"
#include "lrad/mlp.hpp"
#include "lrad/optimizers.hpp"
#include "lrad/parallel.hpp"
#include "lrad/problem.hpp"
#include "lrad/quadratic.hpp"
#include "lrad/rng.hpp"

namespace lrad {

// f(x) = 1 + sum_{i=1}^d (d+1-2i) x_i^3 on [-1,1]^d
struct SupervisedTarget {
  int d = 6;
};

inline double target_eval(const SupervisedTarget& t, const Vector& x) {
  if (static_cast<int>(x.size()) != t.d)
    throw std::invalid_argument("target_eval: dimension mismatch");
  double s = 1.0;
  for (int i = 1; i <= t.d; ++i) {
    const double xi = x[i - 1];
    s += static_cast<double>(t.d + 1 - 2 * i) * xi * xi * xi;
  }
  return s;
}

// heat equation solution u(T, x) = ||x||^2 + 2 d T for u_t = Laplace u,
// u(0, x) = ||x||^2
inline double heat_exact(int d, double t, const Vector& x) {
  return squared_norm(x) + 2.0 * static_cast<double>(d) * t;
}

// Training sample of the DKM regression: input xi uniform on [-1,1]^d,
// label ||xi + sqrt(2T) Z||^2 with Z standard normal. The conditional mean
// of the label given xi is the exact solution at time T.
struct DkmHeatProblem {
  int d = 5;
  double terminal_time = 1.0;
};

inline double relative_l2_error(const std::function<double(const Vector&)>& predict,
                                const std::function<double(const Vector&)>& exact, int d,
                                double low, double high, std::int64_t n_mc, RngStream& stream) {
  if (n_mc < 1) throw std::invalid_argument("relative_l2_error: n_mc must be >= 1");
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < n_mc; ++i) {
    const Vector x = sample_uniform_box(stream, d, low, high);
    const double e = exact(x);
    const double r = predict(x) - e;
    num += r * r;
    den += e * e;
  }
  if (den == 0.0) throw std::domain_error("relative_l2_error: exact solution vanishes on sample");
  return std::sqrt(num / den);
}

// Monte Carlo mean of ||x + sqrt(2T) Z||^2; converges to heat_exact(d,T,x)
// since E||Z||^2 = d.
inline double dkm_label_mean_check(int d, double t, const Vector& x, std::int64_t n_mc,
                                   RngStream& stream) {
  if (n_mc < 1) throw std::invalid_argument("dkm_label_mean_check: n_mc must be >= 1");
  const double s = std::sqrt(2.0 * t);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_mc; ++i) {
    double q = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = x[j] + s * stream.next_normal();
      q += v * v;
    }
    acc += q;
  }
  return acc / static_cast<double>(n_mc);
}

namespace detail {

inline Problem make_mlp_problem(const MlpArch& arch,
                                std::function<std::pair<Vector, double>(RngStream&)> draw) {
  arch.validate();
  Problem p;
  p.param_dim = static_cast<int>(arch.param_count());
  p.sample_batch = [draw = std::move(draw)](RngStream& stream, int size) {
    Batch b;
    b.inputs.reserve(size);
    b.targets.reserve(size);
    for (int i = 0; i < size; ++i) {
      auto [x, y] = draw(stream);
      b.inputs.push_back(std::move(x));
      b.targets.push_back(y);
    }
    return b;
  };
  p.loss_and_grad = [arch](const Vector& theta, const Batch& b) {
    const MlpParams params = unflatten_params(arch, theta);
    auto [loss, grads] = mlp_loss_and_grad(params, b.inputs, b.targets);
    return std::make_pair(loss, flatten_grads(arch, grads));
  };
  p.loss_only = [arch](const Vector& theta, const Batch& b) {
    return mlp_loss(unflatten_params(arch, theta), b.inputs, b.targets);
  };
  return p;
}

}  // namespace detail

// quadratic model behind the generic trainer interface; batches carry the
// data points as inputs and no targets
inline Problem make_quadratic_problem(const QuadraticModel& model) {
  Problem p;
  p.param_dim = model.dim;
  p.sample_batch = [model](RngStream& stream, int size) {
    Batch b;
    b.inputs.reserve(size);
    for (int i = 0; i < size; ++i) b.inputs.push_back(model.sample(stream));
    return b;
  };
  p.loss_and_grad = [model](const Vector& theta, const Batch& b) {
    if (b.inputs.empty()) throw std::invalid_argument("quadratic problem: empty batch");
    double loss = 0.0;
    Vector g(model.dim, 0.0);
    for (const Vector& x : b.inputs) {
      loss += quad_loss(model, theta, x);
      axpy(1.0, quad_grad(model, theta, x), g);
    }
    const double inv = 1.0 / static_cast<double>(b.inputs.size());
    loss *= inv;
    for (double& v : g) v *= inv;
    return std::make_pair(loss, std::move(g));
  };
  p.loss_only = [model](const Vector& theta, const Batch& b) {
    if (b.inputs.empty()) throw std::invalid_argument("quadratic problem: empty batch");
    double loss = 0.0;
    for (const Vector& x : b.inputs) loss += quad_loss(model, theta, x);
    return loss / static_cast<double>(b.inputs.size());
  };
  return p;
}

inline Problem make_supervised_problem(const MlpArch& arch, const SupervisedTarget& target) {
  if (arch.input_dim() != target.d)
    throw std::invalid_argument("make_supervised_problem: arch input width != target dimension");
  return detail::make_mlp_problem(arch, [target](RngStream& stream) {
    Vector x = sample_uniform_box(stream, target.d, -1.0, 1.0);
    const double y = target_eval(target, x);
    return std::make_pair(std::move(x), y);
  });
}

inline Problem make_dkm_heat_problem(const MlpArch& arch, const DkmHeatProblem& pde) {
  if (arch.input_dim() != pde.d)
    throw std::invalid_argument("make_dkm_heat_problem: arch input width != PDE dimension");
  const double s = std::sqrt(2.0 * pde.terminal_time);
  return detail::make_mlp_problem(arch, [pde, s](RngStream& stream) {
    Vector x = sample_uniform_box(stream, pde.d, -1.0, 1.0);
    double y = 0.0;
    for (int j = 0; j < pde.d; ++j) {
      const double v = x[j] + s * stream.next_normal();
      y += v * v;
    }
    return std::make_pair(std::move(x), y);
  });
}

struct SupervisedRun {
  TrainResult train;
  double final_test_loss = 0.0;
  Vector theta;
};

inline Batch draw_heldout(const Problem& problem, const StreamFamily& streams,
                          std::uint64_t run_index, int size) {
  RngStream test = streams.make(StreamTag::test_data, run_index, 0);
  return problem.sample_batch(test, size);
}

inline SupervisedRun run_problem(const Problem& problem, const AdaptiveTrainerConfig& config,
                                 const MlpArch& arch, const StreamFamily& streams,
                                 std::uint64_t run_index) {
  RngStream init = streams.make(StreamTag::param_init, run_index, 0);
  const Vector theta0 = flatten_params(mlp_init(arch, init));
  const Batch heldout = draw_heldout(problem, streams, run_index, config.test_size);
  SupervisedRun r;
  r.train = train_dynamic(problem, theta0, config, streams, run_index, &heldout);
  r.final_test_loss = problem.loss_only(r.train.theta, heldout);
  r.theta = r.train.theta;
  return r;
}

inline SupervisedRun run_supervised(const AdaptiveTrainerConfig& config, const MlpArch& arch,
                                    const StreamFamily& streams, std::uint64_t run_index = 0) {
  const SupervisedTarget target{arch.input_dim()};
  return run_problem(make_supervised_problem(arch, target), config, arch, streams, run_index);
}

struct DkmRun {
  SupervisedRun run;
  double rel_l2_error = 0.0;
};

inline DkmRun run_dkm_heat(const DkmHeatProblem& pde, const AdaptiveTrainerConfig& config,
                           const MlpArch& arch, std::int64_t n_mc, const StreamFamily& streams,
                           std::uint64_t run_index = 0) {
  const Problem problem = make_dkm_heat_problem(arch, pde);
  DkmRun r;
  r.run = run_problem(problem, config, arch, streams, run_index);
  const MlpParams params = unflatten_params(arch, r.run.theta);
  RngStream eval = streams.make(StreamTag::mc, run_index, 1);
  r.rel_l2_error = relative_l2_error(
      [&params](const Vector& x) { return mlp_forward(params, x)[0]; },
      [&pde](const Vector& x) { return heat_exact(pde.d, pde.terminal_time, x); }, pde.d, -1.0,
      1.0, n_mc, eval);
  return r;
}

// same streams, same initialization, learning-rate grid collapsed to
// {lr_init} and the re-search disabled: the constant-rate arm of a pair
inline AdaptiveTrainerConfig constant_rate_config(AdaptiveTrainerConfig config) {
  config.grid_size = 1;
  config.tolerance = std::numeric_limits<int>::max();
  return config;
}

struct QuadraticExperiment {
  QuadraticModel model;
  NuSequence nu;
  int batch = 16;        // M
  int test_batch = 16;   // test points drawn fresh every step
  std::int64_t max_steps = 200000;
  std::vector<double> probes;
  Vector theta0;
};

struct QuadraticConvergenceTable {
  std::vector<double> probes;                       // reached probes, ascending
  std::vector<double> mean_sq_dist;                 // mean over seeds of ||Theta_{N_t}-E[X]||^2
  std::vector<std::vector<double>> per_seed;        // [seed][probe]
  std::vector<double> unreached_probes;
  std::int64_t total_increase_events = 0;
};

// Runs the adaptive-rule trainer once per seed and averages the squared
// distance of Theta_{N_t} to the data mean at each probe. With
// allow_partial unset, any probe beyond a seed's reachable horizon is an
// error; otherwise reached probes are reported and the rest listed.
inline QuadraticConvergenceTable run_quadratic_convergence(const QuadraticExperiment& exp,
                                                           int n_seeds,
                                                           const StreamFamily& streams,
                                                           bool allow_partial = false) {
  if (n_seeds < 1) throw std::invalid_argument("run_quadratic_convergence: n_seeds must be >= 1");
  std::vector<LadderSgdResult> results(n_seeds);
  parallel_chunks(n_seeds, n_seeds, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s)
      results[s] = train_ladder_sgd(exp.model, exp.theta0, exp.nu, exp.batch, exp.test_batch,
                                  exp.max_steps, streams, static_cast<std::uint64_t>(s),
                                  exp.probes, /*stop_after_probes=*/true);
  });

  std::size_t n_reached = exp.probes.size();
  for (const LadderSgdResult& r : results) n_reached = std::min(n_reached, r.probe_step.size());
  std::vector<double> sorted_probes = exp.probes;
  std::sort(sorted_probes.begin(), sorted_probes.end());
  if (n_reached < sorted_probes.size() && !allow_partial)
    throw std::runtime_error(
        "run_quadratic_convergence: horizon not reached for probe t=" +
        format_double(sorted_probes[n_reached]) + "; extend max_steps");

  QuadraticConvergenceTable table;
  const Vector mu = exp.model.data.mean(exp.model.dim);
  table.probes.assign(sorted_probes.begin(), sorted_probes.begin() + n_reached);
  table.unreached_probes.assign(sorted_probes.begin() + n_reached, sorted_probes.end());
  table.mean_sq_dist.assign(n_reached, 0.0);
  for (const LadderSgdResult& r : results) {
    std::vector<double> row(n_reached);
    for (std::size_t p = 0; p < n_reached; ++p) {
      row[p] = squared_distance(r.probe_theta[p], mu);
      table.mean_sq_dist[p] += row[p] / static_cast<double>(n_seeds);
    }
    table.per_seed.push_back(std::move(row));
    table.total_increase_events += static_cast<std::int64_t>(r.increase_steps.size());
  }
  return table;
}

}  // namespace lrad
