#pragma once

// Quadratic-loss testbed: loss (c/2)||theta - x||^2 with gradient
// c*(theta - x). The single grad_factor c covers the three scalings used
// elsewhere in this library (||.||^2 is c=2, (p/2)||.||^2 is c=p,
// p||.||^2 is c=2p); every stability condition below is a bound on c*gamma.
//
// Alongside the SGD recursion this header carries the executable theory
// surface: the closed-form state, the truncated invariant-measure sampler,
// a stationarity check, Monte Carlo estimators for test-loss-increase
// events, and exact floating-point inequality checks for the implicit-Euler
// exponential bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrad/linalg.hpp"
#include "lrad/parallel.hpp"
#include "lrad/rng.hpp"

namespace lrad {

struct DataDist {
  enum class Kind { uniform_box, point_mass };
  Kind kind = Kind::uniform_box;
  double low = 0.0;
  double high = 1.0;
  Vector point;

  static DataDist uniform(double low, double high) {
    if (!(low < high)) throw std::invalid_argument("DataDist::uniform: requires low < high");
    DataDist d;
    d.kind = Kind::uniform_box;
    d.low = low;
    d.high = high;
    return d;
  }

  static DataDist point_mass(Vector p) {
    DataDist d;
    d.kind = Kind::point_mass;
    d.point = std::move(p);
    return d;
  }

  Vector sample(RngStream& stream, int dim) const {
    Vector x(dim);
    sample_into(stream, dim, x.data());
    return x;
  }

  // allocation-free variant for hot loops
  void sample_into(RngStream& stream, int dim, double* out) const {
    if (kind == Kind::point_mass) {
      if (static_cast<int>(point.size()) != dim)
        throw std::invalid_argument("DataDist: point mass dimension mismatch");
      for (int i = 0; i < dim; ++i) out[i] = point[i];
      return;
    }
    const double width = high - low;
    for (int i = 0; i < dim; ++i) {
      double v = low + width * stream.next_unit();
      if (v < low) v = low;
      if (v > high) v = high;
      out[i] = v;
    }
  }

  Vector mean(int dim) const {
    if (kind == Kind::point_mass) return point;
    return Vector(dim, 0.5 * (low + high));
  }

  // sup over the support of ||X||
  double sup_norm(int dim) const {
    if (kind == Kind::point_mass) return norm(point);
    const double m = std::max(std::abs(low), std::abs(high));
    return m * std::sqrt(static_cast<double>(dim));
  }
};

struct QuadraticModel {
  int dim = 1;
  double grad_factor = 2.0;  // c > 0
  DataDist data;

  QuadraticModel(int d, double c, DataDist dist) : dim(d), grad_factor(c), data(std::move(dist)) {
    if (d < 1) throw std::invalid_argument("QuadraticModel: dim must be >= 1");
    if (!(c > 0.0)) throw std::invalid_argument("QuadraticModel: grad_factor must be positive");
  }

  Vector sample(RngStream& stream) const { return data.sample(stream, dim); }

  void sample_batch_mean_into(RngStream& stream, int batch, double* mean, double* scratch) const {
    for (int i = 0; i < dim; ++i) mean[i] = 0.0;
    for (int m = 0; m < batch; ++m) {
      data.sample_into(stream, dim, scratch);
      for (int i = 0; i < dim; ++i) mean[i] += scratch[i];
    }
    const double inv = 1.0 / static_cast<double>(batch);
    for (int i = 0; i < dim; ++i) mean[i] *= inv;
  }

  Vector sample_batch_mean(RngStream& stream, int batch) const {
    Vector m(dim);
    Vector scratch(dim);
    sample_batch_mean_into(stream, batch, m.data(), scratch.data());
    return m;
  }
};

inline double quad_loss(const QuadraticModel& model, const Vector& theta, const Vector& x) {
  if (static_cast<int>(theta.size()) != model.dim || static_cast<int>(x.size()) != model.dim)
    throw std::invalid_argument("quad_loss: dimension mismatch");
  return 0.5 * model.grad_factor * squared_distance(theta, x);
}

inline Vector quad_grad(const QuadraticModel& model, const Vector& theta, const Vector& x) {
  if (static_cast<int>(theta.size()) != model.dim || static_cast<int>(x.size()) != model.dim)
    throw std::invalid_argument("quad_grad: dimension mismatch");
  Vector g(theta);
  axpy(-1.0, x, g);
  for (double& v : g) v *= model.grad_factor;
  return g;
}

// One SGD step theta - (gamma/M) sum_m c*(theta - x_m), evaluated in the
// gradient form. Algebraically equal to (1-c*gamma)*theta +
// (c*gamma/M)*sum x_m; the tests pin that identity.
inline Vector quad_sgd_step(const QuadraticModel& model, const Vector& theta, double gamma,
                            const std::vector<Vector>& batch) {
  if (batch.empty()) throw std::invalid_argument("quad_sgd_step: empty batch");
  Vector g(model.dim, 0.0);
  for (const Vector& x : batch) axpy(1.0, quad_grad(model, theta, x), g);
  Vector out(theta);
  axpy(-gamma / static_cast<double>(batch.size()), g, out);
  return out;
}

// step on a precomputed batch mean: (1-c*gamma)*theta + c*gamma*mean
inline Vector quad_mean_step(const QuadraticModel& model, const Vector& theta, double gamma,
                             const Vector& batch_mean) {
  const double a = model.grad_factor * gamma;
  Vector out(model.dim);
  for (int i = 0; i < model.dim; ++i) out[i] = (1.0 - a) * theta[i] + a * batch_mean[i];
  return out;
}

// State after n = batch_means.size() steps by the closed form
//   Theta_n = (1-cg)^n Theta_0 + sum_k (1-cg)^{n-k} cg * mean_k.
inline Vector closed_form_state(const QuadraticModel& model, const Vector& theta0, double gamma,
                                const std::vector<Vector>& batch_means) {
  const double a = model.grad_factor * gamma;
  if (!(a > 0.0 && a < 2.0)) throw std::domain_error("closed_form_state: requires c*gamma in (0,2)");
  const std::size_t n = batch_means.size();
  Vector out = scaled(theta0, std::pow(1.0 - a, static_cast<double>(n)));
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = std::pow(1.0 - a, static_cast<double>(n - k)) * a;
    axpy(w, batch_means[k - 1], out);
  }
  return out;
}

// Truncated invariant-measure sample
//   chi_K = sum_{n=0}^{K-1} cg (1-cg)^n * (fresh batch mean).
// Truncation bias is bounded by (1-cg)^K * sup||X||.
inline Vector sample_invariant_chi(const QuadraticModel& model, double gamma, int batch,
                                   int truncation, RngStream& stream) {
  const double a = model.grad_factor * gamma;
  if (!(a > 0.0 && a <= 1.0))
    throw std::domain_error("sample_invariant_chi: requires c*gamma in (0,1]");
  if (truncation < 1) throw std::invalid_argument("sample_invariant_chi: truncation must be >= 1");
  Vector chi(model.dim, 0.0);
  Vector mean(model.dim), scratch(model.dim);
  double w = a;
  for (int n = 0; n < truncation; ++n) {
    model.sample_batch_mean_into(stream, batch, mean.data(), scratch.data());
    for (int i = 0; i < model.dim; ++i) chi[i] += w * mean[i];
    w *= (1.0 - a);
  }
  return chi;
}

inline double chi_truncation_bias(const QuadraticModel& model, double gamma, int truncation) {
  const double a = model.grad_factor * gamma;
  return std::pow(1.0 - a, truncation) * model.data.sup_norm(model.dim);
}

// a-priori bound 2/(2-cg) * sup||X|| on stationary trajectories
inline double stationary_sup_bound(const QuadraticModel& model, double gamma) {
  const double a = model.grad_factor * gamma;
  return 2.0 / (2.0 - a) * model.data.sup_norm(model.dim);
}

struct StationarityReport {
  double mean_gap = 0.0;  // max_i |E Theta_0,i - E Theta_n,i|
  double cov_gap = 0.0;   // max_ij |E Theta_0,i Theta_0,j - E Theta_n,i Theta_n,j|
  double mean_se = 0.0;   // Monte Carlo standard error at the argmax entry
  double cov_se = 0.0;
};

// Starts replicas in the truncated invariant measure, advances n_steps of
// constant-rate SGD, and compares first and (raw) second moments of the
// initial and final state. Under exact stationarity every gap is zero;
// the truncated sampler adds at most the documented truncation bias.
inline StationarityReport stationarity_check(const QuadraticModel& model, double gamma, int batch,
                                             int truncation, int n_steps, std::int64_t n_samples,
                                             const StreamFamily& streams,
                                             std::uint64_t series = 0) {
  const double a = model.grad_factor * gamma;
  if (!(a > 0.0 && a < 1.0)) throw std::domain_error("stationarity_check: requires c*gamma in (0,1)");
  if (n_samples < 1) throw std::invalid_argument("stationarity_check: n_samples must be >= 1");
  const int d = model.dim;
  const int n_cov = d * d;
  constexpr int kChunks = 256;

  struct Acc {
    std::vector<double> sum, sumsq;
  };
  std::vector<Acc> mean_acc(kChunks, Acc{Vector(d, 0.0), Vector(d, 0.0)});
  std::vector<Acc> cov_acc(kChunks, Acc{Vector(n_cov, 0.0), Vector(n_cov, 0.0)});

  parallel_chunks(n_samples, kChunks, [&](int chunk, std::int64_t lo, std::int64_t hi) {
    Acc& ma = mean_acc[chunk];
    Acc& ca = cov_acc[chunk];
    Vector mean(d), scratch(d);
    for (std::int64_t r = lo; r < hi; ++r) {
      RngStream rep = streams.make(StreamTag::replica, series, static_cast<std::uint64_t>(r));
      Vector th0 = sample_invariant_chi(model, gamma, batch, truncation, rep);
      Vector th = th0;
      for (int s = 0; s < n_steps; ++s) {
        model.sample_batch_mean_into(rep, batch, mean.data(), scratch.data());
        for (int i = 0; i < d; ++i) th[i] = (1.0 - a) * th[i] + a * mean[i];
      }
      for (int i = 0; i < d; ++i) {
        const double diff = th0[i] - th[i];
        ma.sum[i] += diff;
        ma.sumsq[i] += diff * diff;
        for (int j = 0; j < d; ++j) {
          const double sdiff = th0[i] * th0[j] - th[i] * th[j];
          ca.sum[i * d + j] += sdiff;
          ca.sumsq[i * d + j] += sdiff * sdiff;
        }
      }
    }
  });

  auto reduce = [&](const std::vector<Acc>& accs, int m, double& gap, double& se) {
    const double n = static_cast<double>(n_samples);
    gap = 0.0;
    se = 0.0;
    for (int i = 0; i < m; ++i) {
      double s = 0.0, s2 = 0.0;
      for (const Acc& acc : accs) {
        s += acc.sum[i];
        s2 += acc.sumsq[i];
      }
      const double mean = s / n;
      const double var = std::max(0.0, s2 / n - mean * mean);
      if (std::abs(mean) > gap) {
        gap = std::abs(mean);
        se = std::sqrt(var / n);
      }
    }
  };

  StationarityReport rep;
  reduce(mean_acc, d, rep.mean_gap, rep.mean_se);
  reduce(cov_acc, n_cov, rep.cov_gap, rep.cov_se);
  return rep;
}

// Monte Carlo frequency of
//   ||(1-cg) chi + cg Y0 - Z|| > ||chi - Z||
// with chi the truncated invariant sample, Y0 a fresh training-batch mean
// and Z a fresh test-batch mean. The data distribution must be
// non-degenerate for the frequency to have a positive limit; that is a
// caller obligation and is not checked here.
inline double estimate_increase_probability(const QuadraticModel& model, double gamma, int batch,
                                            int test_batch, int truncation, std::int64_t n_samples,
                                            const StreamFamily& streams,
                                            std::uint64_t series = 0) {
  const double a = model.grad_factor * gamma;
  if (!(a > 0.0 && a < 1.0))
    throw std::domain_error("estimate_increase_probability: requires c*gamma in (0,1)");
  if (n_samples < 1) throw std::invalid_argument("estimate_increase_probability: n_samples >= 1");
  constexpr int kChunks = 256;
  std::vector<std::int64_t> hits(kChunks, 0);

  parallel_chunks(n_samples, kChunks, [&](int chunk, std::int64_t lo, std::int64_t hi) {
    std::int64_t h = 0;
    Vector y0(model.dim), z(model.dim), scratch(model.dim);
    for (std::int64_t s = lo; s < hi; ++s) {
      RngStream rep = streams.make(StreamTag::mc, series, static_cast<std::uint64_t>(s));
      const Vector chi = sample_invariant_chi(model, gamma, batch, truncation, rep);
      model.sample_batch_mean_into(rep, batch, y0.data(), scratch.data());
      model.sample_batch_mean_into(rep, test_batch, z.data(), scratch.data());
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < model.dim; ++i) {
        const double u = (1.0 - a) * chi[i] + a * y0[i] - z[i];
        const double v = chi[i] - z[i];
        lhs += u * u;
        rhs += v * v;
      }
      if (std::sqrt(lhs) > std::sqrt(rhs)) ++h;
    }
    hits[chunk] = h;
  });

  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(n_samples);
}

// Constant-learning-rate run that records every step n at which the summed
// test loss on 'test_batch' fresh points strictly increases:
//   sum_m l(Theta_n, Z_m) > sum_m l(Theta_{n-1}, Z_m).
// The comparison is an exact floating-point '>' on the sums.
inline std::vector<std::int64_t> count_increase_events(const QuadraticModel& model, double gamma,
                                                       int batch, int test_batch,
                                                       const Vector& theta0, std::int64_t n_steps,
                                                       const StreamFamily& streams,
                                                       std::uint64_t run_index = 0) {
  const double a = model.grad_factor * gamma;
  if (!(a >= 0.0 && a < 1.0))
    throw std::domain_error("count_increase_events: requires c*gamma in [0,1)");
  if (test_batch < 1) throw std::invalid_argument("count_increase_events: test batch must be >= 1");
  RngStream train = streams.make(StreamTag::train_data, run_index, 0);
  RngStream test = streams.make(StreamTag::test_data, run_index, 0);
  std::vector<std::int64_t> events;
  const int d = model.dim;
  Vector theta = theta0;
  Vector next(d), mean(d), z(d);
  for (std::int64_t n = 1; n <= n_steps; ++n) {
    model.sample_batch_mean_into(train, batch, mean.data(), z.data());
    for (int i = 0; i < d; ++i) next[i] = (1.0 - a) * theta[i] + a * mean[i];
    double loss_new = 0.0, loss_old = 0.0;
    for (int m = 0; m < test_batch; ++m) {
      model.data.sample_into(test, d, z.data());
      double sn = 0.0, so = 0.0;
      for (int i = 0; i < d; ++i) {
        const double dn = next[i] - z[i];
        const double dt = theta[i] - z[i];
        sn += dn * dn;
        so += dt * dt;
      }
      loss_new += 0.5 * model.grad_factor * sn;
      loss_old += 0.5 * model.grad_factor * so;
    }
    if (loss_new > loss_old) events.push_back(n);
    theta.swap(next);
  }
  return events;
}

// Exact floating-point check of exp(-c x) <= 1 - x <= exp(-x) on
// x in [0, ln(c)/c], c >= 1.
inline bool exp_bound_check(double c, const std::vector<double>& x_grid) {
  if (!(c >= 1.0)) throw std::invalid_argument("exp_bound_check: requires c >= 1");
  const double upper = std::log(c) / c;
  for (double x : x_grid) {
    if (!(x >= 0.0 && x <= upper))
      throw std::domain_error("exp_bound_check: grid point outside [0, ln(c)/c]");
    if (!(std::exp(-c * x) <= 1.0 - x && 1.0 - x <= std::exp(-x))) return false;
  }
  return true;
}

// Exact floating-point check of exp(x) <= (1-x)^{-1} <= exp(e x) on
// x in [0, exp(-1)].
inline bool exp_inverse_bound_check(const std::vector<double>& x_grid) {
  const double upper = std::exp(-1.0);
  const double e = std::exp(1.0);
  for (double x : x_grid) {
    if (!(x >= 0.0 && x <= upper))
      throw std::domain_error("exp_inverse_bound_check: grid point outside [0, exp(-1)]");
    const double inv = 1.0 / (1.0 - x);
    if (!(std::exp(x) <= inv && inv <= std::exp(e * x))) return false;
  }
  return true;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  for (int i = 0; i < n; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = hi;
  return g;
}

// Fallback ladder for the adaptive rule: strictly decreasing positive
// values with (for the harmonic rule) divergent partial sums. A
// user-supplied table must satisfy the same invariants; divergence of its
// extension is the caller's obligation.
struct NuSequence {
  bool harmonic_rule = true;
  double nu1 = 0.0;
  std::vector<double> table_values;

  static NuSequence harmonic(double nu1) {
    if (!(nu1 > 0.0)) throw std::invalid_argument("NuSequence: nu1 must be positive");
    NuSequence s;
    s.harmonic_rule = true;
    s.nu1 = nu1;
    return s;
  }

  static NuSequence table(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("NuSequence: empty table");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0)) throw std::invalid_argument("NuSequence: values must be positive");
      if (i > 0 && !(values[i] < values[i - 1]))
        throw std::invalid_argument("NuSequence: values must be strictly decreasing");
    }
    NuSequence s;
    s.harmonic_rule = false;
    s.nu1 = values.front();
    s.table_values = std::move(values);
    return s;
  }

  double first() const { return nu1; }

  // value of nu_k, k >= 1
  double value(std::int64_t k) const {
    if (k < 1) throw std::invalid_argument("NuSequence: index must be >= 1");
    if (harmonic_rule) return nu1 / static_cast<double>(k);
    if (k > static_cast<std::int64_t>(table_values.size()))
      throw std::out_of_range("NuSequence: table exhausted");
    return table_values[static_cast<std::size_t>(k - 1)];
  }

  // largest nu_k strictly below gamma
  double next_below(double gamma) const {
    if (!(gamma > 0.0)) throw std::domain_error("NuSequence: gamma must be positive");
    if (harmonic_rule) {
      std::int64_t k = static_cast<std::int64_t>(std::floor(nu1 / gamma)) + 1;
      if (k < 1) k = 1;
      while (!(nu1 / static_cast<double>(k) < gamma)) ++k;
      return nu1 / static_cast<double>(k);
    }
    for (double v : table_values)
      if (v < gamma) return v;
    throw std::out_of_range("NuSequence: no table value below current learning rate");
  }
};

}  // namespace lrad
