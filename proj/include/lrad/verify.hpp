#pragma once

// Built-in theory checks behind `lrad verify` and the acceptance suite:
// exact exponential-bound inequalities, stationarity of the invariant
// measure, positivity of the test-loss-increase probability, and
// almost-sure occurrence of increase events at constant learning rates.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "lrad/experiments.hpp"
#include "lrad/quadratic.hpp"
#include "lrad/trace.hpp"

namespace lrad {

struct TheoryChecksConfig {
  std::uint64_t seed = 0;
  int exp_grid_points = 1000;
  std::int64_t stationarity_samples = 100000;
  int stationarity_steps = 10;
  std::int64_t increase_prob_samples = 1000000;
  int event_seeds = 100;
  std::int64_t event_steps = 10000;
};

struct TheoryCheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// exp(-cx) <= 1-x <= exp(-x) for c in {1, 1.5, 2, 10} and
// exp(x) <= (1-x)^{-1} <= exp(e x); exact floating-point comparisons
inline TheoryCheckResult check_exp_bounds(const TheoryChecksConfig& cfg) {
  TheoryCheckResult r;
  r.name = "exp_bounds";
  r.pass = true;
  std::ostringstream detail;
  for (double c : {1.0, 1.5, 2.0, 10.0}) {
    const bool ok = exp_bound_check(c, linspace(0.0, std::log(c) / c, cfg.exp_grid_points));
    if (!ok) r.pass = false;
    detail << "c=" << format_double(c) << (ok ? " ok" : " FAIL") << "; ";
  }
  const bool inv_ok = exp_inverse_bound_check(linspace(0.0, std::exp(-1.0), cfg.exp_grid_points));
  if (!inv_ok) r.pass = false;
  detail << "inverse chain" << (inv_ok ? " ok" : " FAIL");
  r.detail = detail.str();
  return r;
}

// d=1, c*gamma=0.5, M=4, K=200: moment gaps below 4 Monte Carlo standard
// errors after stationarity_steps steps
inline TheoryCheckResult check_stationarity(const TheoryChecksConfig& cfg) {
  const QuadraticModel model(1, 1.0, DataDist::uniform(0.0, 1.0));
  const StreamFamily streams{cfg.seed};
  const StationarityReport rep =
      stationarity_check(model, 0.5, 4, 200, cfg.stationarity_steps, cfg.stationarity_samples,
                         streams, /*series=*/0);
  TheoryCheckResult r;
  r.name = "stationarity";
  r.pass = rep.mean_gap < 4.0 * rep.mean_se && rep.cov_gap < 4.0 * rep.cov_se;
  std::ostringstream detail;
  detail << "mean_gap=" << format_double(rep.mean_gap) << " (4se=" << format_double(4.0 * rep.mean_se)
         << ") cov_gap=" << format_double(rep.cov_gap) << " (4se=" << format_double(4.0 * rep.cov_se)
         << ")";
  r.detail = detail.str();
  return r;
}

// d=1, U[0,1] data, c*gamma=0.5, M = test batch = 4, K=200: the increase
// probability estimate stays positive by more than 4 standard errors
inline TheoryCheckResult check_increase_probability(const TheoryChecksConfig& cfg) {
  const QuadraticModel model(1, 1.0, DataDist::uniform(0.0, 1.0));
  const StreamFamily streams{cfg.seed};
  const double p = estimate_increase_probability(model, 0.5, 4, 4, 200,
                                                 cfg.increase_prob_samples, streams, /*series=*/1);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.increase_prob_samples));
  TheoryCheckResult r;
  r.name = "increase_probability";
  r.pass = p - 4.0 * se > 0.0;
  std::ostringstream detail;
  detail << "p_hat=" << format_double(p) << " 4se=" << format_double(4.0 * se);
  r.detail = detail.str();
  return r;
}

// d=2, c*gamma=0.5, M = test batch = 8: every seed records at least one
// strict increase over event_steps steps, and at least 95% of seeds record
// more than 100
inline TheoryCheckResult check_increase_events(const TheoryChecksConfig& cfg) {
  const QuadraticModel model(2, 1.0, DataDist::uniform(0.0, 1.0));
  const Vector theta0(2, 0.0);
  int with_event = 0;
  int above_100 = 0;
  std::vector<std::int64_t> counts(cfg.event_seeds, 0);
  const StreamFamily streams{cfg.seed};
  parallel_chunks(cfg.event_seeds, cfg.event_seeds, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s)
      counts[s] = static_cast<std::int64_t>(
          count_increase_events(model, 0.5, 8, 8, theta0, cfg.event_steps, streams,
                                static_cast<std::uint64_t>(s))
              .size());
  });
  for (std::int64_t c : counts) {
    if (c >= 1) ++with_event;
    if (c > 100) ++above_100;
  }
  TheoryCheckResult r;
  r.name = "increase_events";
  r.pass = with_event == cfg.event_seeds &&
           above_100 * 100 >= 95 * cfg.event_seeds;
  std::ostringstream detail;
  detail << "seeds_with_event=" << with_event << "/" << cfg.event_seeds
         << " seeds_above_100=" << above_100;
  r.detail = detail.str();
  return r;
}

inline std::vector<TheoryCheckResult> run_theory_checks(const TheoryChecksConfig& cfg) {
  return {check_exp_bounds(cfg), check_stationarity(cfg), check_increase_probability(cfg),
          check_increase_events(cfg)};
}

}  // namespace lrad
