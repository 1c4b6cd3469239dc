#pragma once

// Optimizer steps, the geometric-grid learning-rate search, the dynamic
// trainers built on it, and the adaptive rule that drops the learning rate
// to the next ladder value whenever the test loss strictly increases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lrad/linalg.hpp"
#include "lrad/problem.hpp"
#include "lrad/quadratic.hpp"
#include "lrad/rng.hpp"
#include "lrad/trace.hpp"

namespace lrad {

inline Vector sgd_step(const Vector& theta, double gamma, const Vector& g) {
  check_same_dim(theta, g, "sgd_step");
  Vector out(theta);
  axpy(-gamma, g, out);
  return out;
}

// Bias-correction handling. 'standard' keeps the raw moment accumulators
// and applies the corrections to temporaries (the Adam of Kingma & Ba).
// 'literal' overwrites the accumulators with the corrected values each
// step, and the grid search keeps one moment pair shared across all
// candidates; both quirks compound over steps.
enum class AdamMode { standard, literal };

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t i = 0;

  explicit AdamState(int dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  AdamMode mode = AdamMode::standard;
};

inline std::pair<AdamState, Vector> adam_step(AdamState state, const Vector& theta, double gamma,
                                              const Vector& g, const AdamHyper& h) {
  if (!(h.eps > 0.0)) throw std::invalid_argument("adam_step: eps must be positive");
  check_same_dim(theta, g, "adam_step");
  check_same_dim(state.m, g, "adam_step state");
  const int d = static_cast<int>(theta.size());
  state.i += 1;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.i));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.i));
  Vector out(d);
  for (int j = 0; j < d; ++j) {
    const double m = h.beta1 * state.m[j] + (1.0 - h.beta1) * g[j];
    const double v = h.beta2 * state.v[j] + (1.0 - h.beta2) * g[j] * g[j];
    const double mhat = m / c1;
    const double vhat = v / c2;
    out[j] = theta[j] - gamma * mhat / (std::sqrt(vhat) + h.eps);
    if (h.mode == AdamMode::literal) {
      state.m[j] = mhat;
      state.v[j] = vhat;
    } else {
      state.m[j] = m;
      state.v[j] = v;
    }
  }
  return {std::move(state), std::move(out)};
}

// Candidate grid {center * ratio^{j-(size+1)/2} : j = 1..size}, ascending.
// Odd sizes center the grid multiplicatively on 'center'.
struct GridSpec {
  int size = 5;
  double ratio = 4.0;
  double center = 1e-3;

  GridSpec(int k, double eta, double gamma) : size(k), ratio(eta), center(gamma) {
    if (k < 1) throw std::invalid_argument("GridSpec: size must be >= 1");
    if (!(eta > 1.0)) throw std::invalid_argument("GridSpec: ratio must exceed 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("GridSpec: center must be positive");
  }

  std::vector<double> candidates() const {
    std::vector<double> g(size);
    for (int j = 1; j <= size; ++j)
      g[j - 1] = center * std::pow(ratio, static_cast<double>(j) - (size + 1) / 2.0);
    return g;
  }
};

struct FindLrResult {
  double gamma_star = 0.0;
  std::vector<std::pair<double, double>> trial_losses;  // (candidate, test loss), grid order
};

namespace detail {

// Candidate trial streams are keyed by (search round, candidate index), so
// every candidate sees its own data and the search result is independent of
// evaluation order.
inline std::uint64_t trial_key(std::uint64_t round, int candidate) {
  if (candidate >= (1 << 16)) throw std::invalid_argument("grid size limit (65536) exceeded");
  return (round << 16) | static_cast<std::uint64_t>(candidate);
}

}  // namespace detail

// Grid search for SGD: each candidate runs trial_steps SGD steps from
// theta0 on fresh batches, is scored by mean loss on test_size fresh
// points, and the smallest candidate among minimizers wins. theta0 is not
// modified; trial parameters are discarded.
inline FindLrResult find_lr_sgd(const Problem& problem, const Vector& theta0, const GridSpec& grid,
                                int batch, int test_size, int trial_steps,
                                const StreamFamily& streams, std::uint64_t run_index,
                                std::uint64_t round) {
  FindLrResult res;
  double best = std::numeric_limits<double>::infinity();
  res.gamma_star = grid.center;
  const std::vector<double> cands = grid.candidates();
  for (int j = 0; j < static_cast<int>(cands.size()); ++j) {
    const double gamma = cands[j];
    RngStream data = streams.make(StreamTag::trial_data, run_index, detail::trial_key(round, j));
    RngStream eval = streams.make(StreamTag::trial_eval, run_index, detail::trial_key(round, j));
    Vector theta = theta0;
    for (int i = 0; i < trial_steps; ++i) {
      const Batch b = problem.sample_batch(data, batch);
      theta = sgd_step(theta, gamma, problem.loss_and_grad(theta, b).second);
    }
    const double l = problem.loss_only(theta, problem.sample_batch(eval, test_size));
    res.trial_losses.emplace_back(gamma, l);
    if (l < best) {
      best = l;
      res.gamma_star = gamma;
    }
  }
  return res;
}

// Grid search for Adam. In standard mode every candidate starts from fresh
// zero moments; in literal mode one moment pair is shared across the whole
// search while the bias-correction exponent still follows the inner loop
// index.
inline FindLrResult find_lr_adam(const Problem& problem, const Vector& theta0, const GridSpec& grid,
                                 int batch, int test_size, int trial_steps, const AdamHyper& h,
                                 const StreamFamily& streams, std::uint64_t run_index,
                                 std::uint64_t round) {
  FindLrResult res;
  double best = std::numeric_limits<double>::infinity();
  res.gamma_star = grid.center;
  const std::vector<double> cands = grid.candidates();
  AdamState shared(problem.param_dim);
  for (int j = 0; j < static_cast<int>(cands.size()); ++j) {
    const double gamma = cands[j];
    RngStream data = streams.make(StreamTag::trial_data, run_index, detail::trial_key(round, j));
    RngStream eval = streams.make(StreamTag::trial_eval, run_index, detail::trial_key(round, j));
    AdamState st = (h.mode == AdamMode::literal) ? shared : AdamState(problem.param_dim);
    st.i = 0;
    Vector theta = theta0;
    for (int i = 0; i < trial_steps; ++i) {
      const Batch b = problem.sample_batch(data, batch);
      Vector g = problem.loss_and_grad(theta, b).second;
      std::tie(st, theta) = adam_step(std::move(st), theta, gamma, g, h);
    }
    if (h.mode == AdamMode::literal) shared = st;
    const double l = problem.loss_only(theta, problem.sample_batch(eval, test_size));
    res.trial_losses.emplace_back(gamma, l);
    if (l < best) {
      best = l;
      res.gamma_star = gamma;
    }
  }
  return res;
}

enum class OptimizerKind { sgd, adam };

struct AdaptiveTrainerConfig {
  int batch_size = 256;        // M
  int test_size = 2000;        // N, fresh points scoring each trial
  int trial_steps = 50;        // s
  int tolerance = 400;         // t, non-improving steps before a re-search
  int grid_size = 5;           // k
  double grid_ratio = 4.0;     // eta
  double lr_init = 1e-3;       // gamma_0
  std::int64_t total_steps = 20000;  // T
  OptimizerKind kind = OptimizerKind::adam;
  AdamHyper adam;
  std::int64_t eval_every = 0;  // held-out test-loss cadence; 0 = never

  void validate() const {
    if (batch_size < 1 || test_size < 1 || trial_steps < 1 || tolerance < 1 || grid_size < 1)
      throw std::invalid_argument("AdaptiveTrainerConfig: sizes must be positive");
    if (!(grid_ratio > 1.0)) throw std::invalid_argument("AdaptiveTrainerConfig: grid_ratio must exceed 1");
    if (!(lr_init > 0.0)) throw std::invalid_argument("AdaptiveTrainerConfig: lr_init must be positive");
    if (total_steps < 0) throw std::invalid_argument("AdaptiveTrainerConfig: total_steps must be >= 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 <= 1.0 && adam.beta2 >= 0.0 && adam.beta2 <= 1.0))
      throw std::invalid_argument("AdaptiveTrainerConfig: betas must lie in [0,1]");
    if (!(adam.eps > 0.0)) throw std::invalid_argument("AdaptiveTrainerConfig: eps must be positive");
    if (eval_every < 0) throw std::invalid_argument("AdaptiveTrainerConfig: eval_every must be >= 0");
  }
};

struct TrainResult {
  Vector theta;
  std::vector<TraceRecord> trace;
  std::int64_t lr_searches = 0;  // find_lr invocations, including the initial one
  double final_lr = 0.0;
};

namespace detail {

// compensated accumulator; keeps long learning-rate sums exact enough for
// the clock examples to hold with '>='
struct KahanSum {
  double s = 0.0;
  double c = 0.0;

  void add(double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }

  double value() const { return s; }
};

}  // namespace detail

// Dynamic-learning-rate training loop. Per step the batch loss is computed
// at the pre-update parameters on the step's own batch, a global best loss
// and a counter of non-improving steps are maintained, and once the counter
// reaches the tolerance the learning rate is re-searched on a grid centered
// at its current value. The best loss is never reset by a re-search.
inline TrainResult train_dynamic(const Problem& problem, const Vector& theta0,
                                 const AdaptiveTrainerConfig& config, const StreamFamily& streams,
                                 std::uint64_t run_index = 0, const Batch* heldout = nullptr) {
  config.validate();
  if (static_cast<int>(theta0.size()) != problem.param_dim)
    throw std::invalid_argument("train_dynamic: theta0 dimension mismatch");

  auto search = [&](const Vector& th, double center, std::uint64_t round) {
    const GridSpec grid(config.grid_size, config.grid_ratio, center);
    return config.kind == OptimizerKind::sgd
               ? find_lr_sgd(problem, th, grid, config.batch_size, config.test_size,
                             config.trial_steps, streams, run_index, round)
               : find_lr_adam(problem, th, grid, config.batch_size, config.test_size,
                              config.trial_steps, config.adam, streams, run_index, round);
  };

  TrainResult res;
  res.theta = theta0;
  double gamma = search(res.theta, config.lr_init, 0).gamma_star;
  res.lr_searches = 1;

  RngStream train = streams.make(StreamTag::train_data, run_index, 0);
  AdamState st(problem.param_dim);
  double l_opt = std::numeric_limits<double>::infinity();
  int counter = 0;
  detail::KahanSum clock;

  auto heldout_loss = [&](const Vector& th) -> std::optional<double> {
    if (heldout == nullptr) return std::nullopt;
    return problem.loss_only(th, *heldout);
  };

  res.trace.push_back(TraceRecord{0, std::nullopt, heldout_loss(res.theta), gamma, 0.0,
                                  TraceEvent::research});

  for (std::int64_t i = 1; i <= config.total_steps; ++i) {
    const Batch b = problem.sample_batch(train, config.batch_size);
    auto [l, g] = problem.loss_and_grad(res.theta, b);
    if (config.kind == OptimizerKind::sgd) {
      res.theta = sgd_step(res.theta, gamma, g);
    } else {
      std::tie(st, res.theta) = adam_step(std::move(st), res.theta, gamma, g, config.adam);
    }
    const double gamma_used = gamma;
    clock.add(gamma_used);

    TraceEvent event = TraceEvent::none;
    if (l < l_opt) {
      l_opt = l;
      counter = 0;
      event = TraceEvent::improve;
    } else {
      ++counter;
    }
    if (counter == config.tolerance) {
      gamma = search(res.theta, gamma, static_cast<std::uint64_t>(i)).gamma_star;
      ++res.lr_searches;
      counter = 0;
      event = TraceEvent::research;
    }

    std::optional<double> test;
    if (heldout != nullptr && config.eval_every > 0 &&
        (i % config.eval_every == 0 || i == config.total_steps))
      test = heldout_loss(res.theta);
    res.trace.push_back(TraceRecord{i, l, test, gamma_used, clock.value(), event});
  }
  res.final_lr = gamma;
  return res;
}

// N_t = inf{ n : sum_{k<=n} gamma_k >= t }, over the pushed learning rates.
class NtClock {
 public:
  NtClock() : prefix_(1, 0.0) {}

  void push(double gamma) {
    acc_.add(gamma);
    prefix_.push_back(acc_.value());
  }

  double total() const { return prefix_.back(); }
  std::int64_t steps() const { return static_cast<std::int64_t>(prefix_.size()) - 1; }
  double prefix(std::int64_t n) const { return prefix_[static_cast<std::size_t>(n)]; }

  std::int64_t lookup(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("NtClock: t must be >= 0");
    if (t > total()) throw std::runtime_error("NtClock: horizon not reached");
    const auto it = std::lower_bound(prefix_.begin(), prefix_.end(), t);
    return static_cast<std::int64_t>(it - prefix_.begin());
  }

 private:
  std::vector<double> prefix_;
  detail::KahanSum acc_;
};

struct LadderSgdResult {
  Vector theta;
  std::int64_t steps_run = 0;
  double clock = 0.0;
  double final_lr = 0.0;
  std::vector<std::int64_t> increase_steps;
  std::vector<double> probes;            // requested clock values, ascending
  std::vector<std::int64_t> probe_step;  // N_t per probe (only reached ones)
  std::vector<Vector> probe_theta;       // Theta_{N_t} per reached probe
  bool all_probes_reached = true;
};

using TraceSink = std::function<void(const TraceRecord&)>;

// SGD with the adaptive learning-rate rule on the quadratic model: start at
// gamma_1 = nu_1; after each step compare the summed losses of the new and
// old iterate on fresh test points (exact '>'); on a strict increase drop
// gamma to the largest ladder value strictly below it. Snapshots Theta_{N_t}
// at each requested clock probe. Stops early once all probes are reached
// when stop_after_probes is set.
inline LadderSgdResult train_ladder_sgd(const QuadraticModel& model, const Vector& theta0,
                                     const NuSequence& nu, int batch, int test_batch,
                                     std::int64_t max_steps, const StreamFamily& streams,
                                     std::uint64_t run_index = 0,
                                     std::vector<double> probes = {},
                                     bool stop_after_probes = false,
                                     const TraceSink& sink = nullptr) {
  if (batch < 1 || test_batch < 1)
    throw std::invalid_argument("train_ladder_sgd: batch sizes must be >= 1");
  if (!(model.grad_factor * nu.first() < 2.0))
    throw std::invalid_argument("train_ladder_sgd: stability requires c*nu_1 < 2");
  if (static_cast<int>(theta0.size()) != model.dim)
    throw std::invalid_argument("train_ladder_sgd: theta0 dimension mismatch");
  std::sort(probes.begin(), probes.end());

  RngStream train = streams.make(StreamTag::train_data, run_index, 0);
  RngStream test = streams.make(StreamTag::test_data, run_index, 0);

  LadderSgdResult res;
  res.theta = theta0;
  res.probes = probes;
  double gamma = nu.first();
  detail::KahanSum clock;
  std::size_t probe_idx = 0;
  while (probe_idx < probes.size() && probes[probe_idx] <= 0.0) {
    res.probe_step.push_back(0);
    res.probe_theta.push_back(theta0);
    ++probe_idx;
  }

  const int d = model.dim;
  Vector batch_mean(d), next(d), x(d);
  std::int64_t n = 0;
  while (n < max_steps && !(stop_after_probes && probe_idx >= probes.size())) {
    ++n;
    double train_loss_sum = 0.0;
    for (int i = 0; i < d; ++i) batch_mean[i] = 0.0;
    for (int m = 0; m < batch; ++m) {
      model.data.sample_into(train, d, x.data());
      for (int i = 0; i < d; ++i) batch_mean[i] += x[i];
      if (sink) train_loss_sum += quad_loss(model, res.theta, x);
    }
    for (double& v : batch_mean) v /= static_cast<double>(batch);
    const double a = model.grad_factor * gamma;
    for (int i = 0; i < d; ++i) next[i] = (1.0 - a) * res.theta[i] + a * batch_mean[i];

    double loss_new = 0.0, loss_old = 0.0;
    const double half_c = 0.5 * model.grad_factor;
    for (int m = 0; m < test_batch; ++m) {
      model.data.sample_into(test, d, x.data());
      double sn = 0.0, so = 0.0;
      for (int i = 0; i < d; ++i) {
        const double dn = next[i] - x[i];
        const double dt = res.theta[i] - x[i];
        sn += dn * dn;
        so += dt * dt;
      }
      loss_new += half_c * sn;
      loss_old += half_c * so;
    }
    const double gamma_used = gamma;
    clock.add(gamma_used);
    res.theta.swap(next);

    TraceEvent event = TraceEvent::none;
    if (loss_new > loss_old) {
      res.increase_steps.push_back(n);
      gamma = nu.next_below(gamma);
      event = TraceEvent::lr_decrease;
    }
    while (probe_idx < probes.size() && clock.value() >= probes[probe_idx]) {
      res.probe_step.push_back(n);
      res.probe_theta.push_back(res.theta);
      ++probe_idx;
    }
    if (sink)
      sink(TraceRecord{n, train_loss_sum / static_cast<double>(batch),
                       loss_new / static_cast<double>(test_batch), gamma_used, clock.value(),
                       event});
  }
  res.steps_run = n;
  res.clock = clock.value();
  res.final_lr = gamma;
  res.all_probes_reached = probe_idx >= probes.size();
  return res;
}

}  // namespace lrad
