#pragma once

// Experiment descriptors (JSON), dispatch, and CSV emission. All file
// content is deterministic for a fixed descriptor: floats are printed with
// 17 significant digits, seeds are collected in index order, and wall-clock
// timings go to a separate timings.csv that is excluded from the
// determinism contract.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrad/experiments.hpp"
#include "lrad/mlp.hpp"
#include "lrad/optimizers.hpp"
#include "lrad/quadratic.hpp"
#include "lrad/trace.hpp"
#include "lrad/verify.hpp"

namespace lrad {

// exit codes: 2 missing file, 3 malformed JSON, 4 invariant violation
struct DescriptorError : std::runtime_error {
  int exit_code;
  DescriptorError(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
};

enum class ExperimentKind { supervised, dkm_heat, quadratic, theory_checks };

inline const char* experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::supervised: return "supervised";
    case ExperimentKind::dkm_heat: return "dkm_heat";
    case ExperimentKind::quadratic: return "quadratic";
    case ExperimentKind::theory_checks: return "theory_checks";
  }
  return "";
}

struct ExperimentDescriptor {
  ExperimentKind kind = ExperimentKind::supervised;
  std::uint64_t seed = 0;
  int seeds = 1;
  std::string output_dir = "out";

  // supervised / dkm_heat
  AdaptiveTrainerConfig trainer;
  MlpArch arch;
  bool baseline = true;  // supervised: also run the constant-rate arm

  // dkm_heat
  DkmHeatProblem pde;
  std::int64_t mc_eval = 100000;

  // quadratic
  int quad_dim = 2;
  double grad_factor = 2.0;
  double data_low = 0.0;
  double data_high = 1.0;
  double nu1 = 0.4;
  int train_batch = 16;
  int test_batch = 16;
  std::int64_t quad_steps = 200000;
  std::vector<double> probes = {1.0, 2.0, 4.0, 8.0};
  Vector theta0;  // empty = zeros
  std::int64_t trace_stride = 100;

  // theory_checks
  TheoryChecksConfig checks;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const std::string& k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw DescriptorError(4, "unknown descriptor key: " + item.key());
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DescriptorError(4, "bad value for key '" + key + "': " + e.what());
  }
}

inline void parse_trainer(const nlohmann::json& j, AdaptiveTrainerConfig& t) {
  t.batch_size = get_or(j, "batch_size", t.batch_size);
  t.test_size = get_or(j, "test_size", t.test_size);
  t.trial_steps = get_or(j, "trial_steps", t.trial_steps);
  t.tolerance = get_or(j, "tolerance", t.tolerance);
  t.grid_size = get_or(j, "grid_size", t.grid_size);
  t.grid_ratio = get_or(j, "grid_ratio", t.grid_ratio);
  t.lr_init = get_or(j, "lr_init", t.lr_init);
  t.total_steps = get_or<std::int64_t>(j, "total_steps", t.total_steps);
  const std::string opt = get_or<std::string>(j, "optimizer", "adam");
  if (opt == "adam")
    t.kind = OptimizerKind::adam;
  else if (opt == "sgd")
    t.kind = OptimizerKind::sgd;
  else
    throw DescriptorError(4, "optimizer must be 'adam' or 'sgd'");
  t.adam.beta1 = get_or(j, "beta1", t.adam.beta1);
  t.adam.beta2 = get_or(j, "beta2", t.adam.beta2);
  t.adam.eps = get_or(j, "epsilon", t.adam.eps);
  const std::string mode = get_or<std::string>(j, "adam_mode", "standard");
  if (mode == "standard")
    t.adam.mode = AdamMode::standard;
  else if (mode == "literal")
    t.adam.mode = AdamMode::literal;
  else
    throw DescriptorError(4, "adam_mode must be 'standard' or 'literal'");
  t.eval_every = get_or<std::int64_t>(j, "eval_every", t.eval_every);
}

inline MlpArch parse_arch(const nlohmann::json& j, std::vector<int> default_widths,
                          Activation default_act) {
  MlpArch arch;
  arch.widths = get_or(j, "arch", default_widths);
  arch.activation =
      activation_from_name(get_or<std::string>(j, "activation", activation_name(default_act)));
  return arch;
}

inline const std::vector<std::string> kTrainerKeys = {
    "batch_size", "test_size",   "trial_steps", "tolerance", "grid_size", "grid_ratio",
    "lr_init",    "total_steps", "optimizer",   "beta1",     "beta2",     "epsilon",
    "adam_mode",  "eval_every",  "arch",        "activation"};

inline std::vector<std::string> with_common(std::vector<std::string> keys) {
  keys.push_back("experiment");
  keys.push_back("seed");
  keys.push_back("seeds");
  keys.push_back("output_dir");
  return keys;
}

}  // namespace detail

inline ExperimentDescriptor descriptor_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DescriptorError(4, "descriptor must be a JSON object");
  if (!j.contains("experiment")) throw DescriptorError(4, "missing required key: experiment");
  const std::string kind_name = j.at("experiment").get<std::string>();

  ExperimentDescriptor d;
  d.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  d.seeds = detail::get_or(j, "seeds", 1);
  d.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
  if (d.seeds < 1) throw DescriptorError(4, "seeds must be >= 1");

  try {
    if (kind_name == "supervised") {
      d.kind = ExperimentKind::supervised;
      auto keys = detail::with_common(detail::kTrainerKeys);
      keys.push_back("baseline");
      detail::require_keys(j, keys);
      d.trainer.eval_every = 100;
      detail::parse_trainer(j, d.trainer);
      d.arch = detail::parse_arch(j, {6, 128, 1}, Activation::relu);
      d.baseline = detail::get_or(j, "baseline", true);
      d.trainer.validate();
      d.arch.validate();
    } else if (kind_name == "dkm_heat") {
      d.kind = ExperimentKind::dkm_heat;
      auto keys = detail::with_common(detail::kTrainerKeys);
      keys.push_back("dim");
      keys.push_back("pde_time");
      keys.push_back("mc_eval");
      detail::require_keys(j, keys);
      d.trainer.eval_every = 100;
      detail::parse_trainer(j, d.trainer);
      d.pde.d = detail::get_or(j, "dim", 5);
      d.pde.terminal_time = detail::get_or(j, "pde_time", 1.0);
      d.mc_eval = detail::get_or<std::int64_t>(j, "mc_eval", 100000);
      d.arch = detail::parse_arch(j, {d.pde.d, 32, 64, 32, 1}, Activation::gelu);
      if (d.pde.d < 1) throw DescriptorError(4, "dim must be >= 1");
      if (!(d.pde.terminal_time >= 0.0)) throw DescriptorError(4, "pde_time must be >= 0");
      if (d.mc_eval < 1) throw DescriptorError(4, "mc_eval must be >= 1");
      d.trainer.validate();
      d.arch.validate();
    } else if (kind_name == "quadratic") {
      d.kind = ExperimentKind::quadratic;
      detail::require_keys(
          j, detail::with_common({"dim", "grad_factor", "data_low", "data_high", "nu1",
                                  "train_batch", "test_batch", "total_steps", "probes", "theta0",
                                  "trace_stride"}));
      d.quad_dim = detail::get_or(j, "dim", 2);
      d.grad_factor = detail::get_or(j, "grad_factor", 2.0);
      d.data_low = detail::get_or(j, "data_low", 0.0);
      d.data_high = detail::get_or(j, "data_high", 1.0);
      d.nu1 = detail::get_or(j, "nu1", 0.4);
      d.train_batch = detail::get_or(j, "train_batch", 16);
      d.test_batch = detail::get_or(j, "test_batch", 16);
      d.quad_steps = detail::get_or<std::int64_t>(j, "total_steps", 200000);
      d.probes = detail::get_or(j, "probes", std::vector<double>{1.0, 2.0, 4.0, 8.0});
      d.theta0 = detail::get_or(j, "theta0", Vector{});
      d.trace_stride = detail::get_or<std::int64_t>(j, "trace_stride", 100);
      if (d.quad_dim < 1) throw DescriptorError(4, "dim must be >= 1");
      if (!(d.grad_factor > 0.0)) throw DescriptorError(4, "grad_factor must be positive");
      if (!(d.data_low < d.data_high)) throw DescriptorError(4, "data_low must be < data_high");
      if (!(d.nu1 > 0.0 && d.grad_factor * d.nu1 < 2.0))
        throw DescriptorError(4, "stability requires 0 < grad_factor*nu1 < 2");
      if (d.train_batch < 1 || d.test_batch < 1) throw DescriptorError(4, "batches must be >= 1");
      if (d.quad_steps < 0) throw DescriptorError(4, "total_steps must be >= 0");
      if (d.trace_stride < 1) throw DescriptorError(4, "trace_stride must be >= 1");
      if (!d.theta0.empty() && static_cast<int>(d.theta0.size()) != d.quad_dim)
        throw DescriptorError(4, "theta0 dimension mismatch");
      for (double p : d.probes)
        if (!(p >= 0.0)) throw DescriptorError(4, "probes must be >= 0");
    } else if (kind_name == "theory_checks") {
      d.kind = ExperimentKind::theory_checks;
      detail::require_keys(
          j, detail::with_common({"exp_grid_points", "stationarity_samples", "stationarity_steps",
                                  "increase_prob_samples", "event_seeds", "event_steps"}));
      d.checks.seed = d.seed;
      d.checks.exp_grid_points = detail::get_or(j, "exp_grid_points", d.checks.exp_grid_points);
      d.checks.stationarity_samples =
          detail::get_or<std::int64_t>(j, "stationarity_samples", d.checks.stationarity_samples);
      d.checks.stationarity_steps =
          detail::get_or(j, "stationarity_steps", d.checks.stationarity_steps);
      d.checks.increase_prob_samples =
          detail::get_or<std::int64_t>(j, "increase_prob_samples", d.checks.increase_prob_samples);
      d.checks.event_seeds = detail::get_or(j, "event_seeds", d.checks.event_seeds);
      d.checks.event_steps = detail::get_or<std::int64_t>(j, "event_steps", d.checks.event_steps);
      if (d.checks.exp_grid_points < 1 || d.checks.stationarity_samples < 1 ||
          d.checks.stationarity_steps < 0 || d.checks.increase_prob_samples < 1 ||
          d.checks.event_seeds < 1 || d.checks.event_steps < 1)
        throw DescriptorError(4, "theory_checks sizes must be positive");
    } else {
      throw DescriptorError(4, "unknown experiment kind: " + kind_name);
    }
  } catch (const std::invalid_argument& e) {
    throw DescriptorError(4, e.what());
  }
  return d;
}

inline ExperimentDescriptor parse_descriptor(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DescriptorError(2, "cannot open descriptor file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DescriptorError(3, std::string("malformed JSON: ") + e.what());
  }
  return descriptor_from_json(j);
}

inline nlohmann::json resolved_config_json(const ExperimentDescriptor& d) {
  nlohmann::json j;
  j["experiment"] = experiment_kind_name(d.kind);
  j["seed"] = d.seed;
  j["seeds"] = d.seeds;
  j["output_dir"] = d.output_dir;
  switch (d.kind) {
    case ExperimentKind::supervised:
    case ExperimentKind::dkm_heat: {
      j["batch_size"] = d.trainer.batch_size;
      j["test_size"] = d.trainer.test_size;
      j["trial_steps"] = d.trainer.trial_steps;
      j["tolerance"] = d.trainer.tolerance;
      j["grid_size"] = d.trainer.grid_size;
      j["grid_ratio"] = d.trainer.grid_ratio;
      j["lr_init"] = d.trainer.lr_init;
      j["total_steps"] = d.trainer.total_steps;
      j["optimizer"] = d.trainer.kind == OptimizerKind::adam ? "adam" : "sgd";
      j["beta1"] = d.trainer.adam.beta1;
      j["beta2"] = d.trainer.adam.beta2;
      j["epsilon"] = d.trainer.adam.eps;
      j["adam_mode"] = d.trainer.adam.mode == AdamMode::literal ? "literal" : "standard";
      j["eval_every"] = d.trainer.eval_every;
      j["arch"] = d.arch.widths;
      j["activation"] = activation_name(d.arch.activation);
      if (d.kind == ExperimentKind::supervised) {
        j["baseline"] = d.baseline;
      } else {
        j["dim"] = d.pde.d;
        j["pde_time"] = d.pde.terminal_time;
        j["mc_eval"] = d.mc_eval;
      }
      break;
    }
    case ExperimentKind::quadratic: {
      j["dim"] = d.quad_dim;
      j["grad_factor"] = d.grad_factor;
      j["data_low"] = d.data_low;
      j["data_high"] = d.data_high;
      j["nu1"] = d.nu1;
      j["train_batch"] = d.train_batch;
      j["test_batch"] = d.test_batch;
      j["total_steps"] = d.quad_steps;
      j["probes"] = d.probes;
      j["theta0"] = d.theta0.empty() ? Vector(d.quad_dim, 0.0) : d.theta0;
      j["trace_stride"] = d.trace_stride;
      break;
    }
    case ExperimentKind::theory_checks: {
      j["exp_grid_points"] = d.checks.exp_grid_points;
      j["stationarity_samples"] = d.checks.stationarity_samples;
      j["stationarity_steps"] = d.checks.stationarity_steps;
      j["increase_prob_samples"] = d.checks.increase_prob_samples;
      j["event_seeds"] = d.checks.event_seeds;
      j["event_steps"] = d.checks.event_steps;
      break;
    }
  }
  return j;
}

namespace detail {

inline bool has_nan(const std::vector<TraceRecord>& trace) {
  for (const TraceRecord& r : trace) {
    if (r.train_loss && !std::isfinite(*r.train_loss)) return true;
    if (r.test_loss && !std::isfinite(*r.test_loss)) return true;
  }
  return false;
}

// first evaluated step whose held-out test loss is <= target; -1 if never
inline std::int64_t steps_to_reach(const std::vector<TraceRecord>& trace, double target) {
  for (const TraceRecord& r : trace)
    if (r.test_loss && *r.test_loss <= target) return r.step;
  return -1;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + p.string());
  os << content;
}

struct SeedTiming {
  int seed;
  std::int64_t wall_ms;
};

// wall-clock times vary run to run, so they live in their own file and are
// not covered by the byte-identical-outputs contract
inline void write_timings(const std::filesystem::path& dir, const std::vector<SeedTiming>& times) {
  std::ostringstream os;
  os << "seed,wall_ms\n";
  for (const SeedTiming& t : times) os << t.seed << ',' << t.wall_ms << '\n';
  write_file(dir / "timings.csv", os.str());
}

template <typename F>
std::int64_t timed_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               t0)
      .count();
}

inline int run_supervised_experiment(const ExperimentDescriptor& d, const StreamFamily& streams) {
  namespace fs = std::filesystem;
  const fs::path dir(d.output_dir);
  struct PerSeed {
    SupervisedRun adaptive;
    SupervisedRun constant;
    std::int64_t wall_ms = 0;
  };
  std::vector<PerSeed> rows(d.seeds);
  parallel_chunks(d.seeds, d.seeds, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s) {
      rows[s].wall_ms = timed_ms([&] {
        rows[s].adaptive = run_supervised(d.trainer, d.arch, streams, static_cast<std::uint64_t>(s));
        if (d.baseline)
          rows[s].constant = run_supervised(constant_rate_config(d.trainer), d.arch, streams,
                                            static_cast<std::uint64_t>(s));
      });
    }
  });

  bool numeric_failure = false;
  std::ostringstream summary;
  if (d.baseline)
    summary << "seed,final_test_adaptive,final_test_constant,steps_to_const_final_adaptive,"
               "steps_to_const_final_constant,lr_searches_adaptive,final_lr_adaptive\n";
  else
    summary << "seed,final_test,lr_searches,final_lr\n";

  std::vector<SeedTiming> times;
  for (int s = 0; s < d.seeds; ++s) {
    const PerSeed& r = rows[s];
    {
      std::ostringstream os;
      write_trace_csv(os, r.adaptive.train.trace);
      write_file(dir / ("trace_adaptive_seed" + std::to_string(s) + ".csv"), os.str());
    }
    save_mlp_params(unflatten_params(d.arch, r.adaptive.theta),
                    (dir / ("params_adaptive_seed" + std::to_string(s) + ".bin")).string());
    if (has_nan(r.adaptive.train.trace) || !std::isfinite(r.adaptive.final_test_loss))
      numeric_failure = true;
    if (d.baseline) {
      std::ostringstream os;
      write_trace_csv(os, r.constant.train.trace);
      write_file(dir / ("trace_constant_seed" + std::to_string(s) + ".csv"), os.str());
      if (has_nan(r.constant.train.trace) || !std::isfinite(r.constant.final_test_loss))
        numeric_failure = true;
      const double target = r.constant.final_test_loss;
      summary << s << ',' << format_double(r.adaptive.final_test_loss) << ','
              << format_double(r.constant.final_test_loss) << ','
              << steps_to_reach(r.adaptive.train.trace, target) << ','
              << steps_to_reach(r.constant.train.trace, target) << ','
              << r.adaptive.train.lr_searches << ','
              << format_double(r.adaptive.train.final_lr) << '\n';
    } else {
      summary << s << ',' << format_double(r.adaptive.final_test_loss) << ','
              << r.adaptive.train.lr_searches << ',' << format_double(r.adaptive.train.final_lr)
              << '\n';
    }
    times.push_back({s, r.wall_ms});
  }
  write_file(dir / "summary.csv", summary.str());
  write_timings(dir, times);
  return numeric_failure ? 1 : 0;
}

inline int run_dkm_experiment(const ExperimentDescriptor& d, const StreamFamily& streams) {
  namespace fs = std::filesystem;
  const fs::path dir(d.output_dir);
  struct PerSeed {
    DkmRun run;
    std::int64_t wall_ms = 0;
  };
  std::vector<PerSeed> rows(d.seeds);
  parallel_chunks(d.seeds, d.seeds, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s)
      rows[s].wall_ms = timed_ms([&] {
        rows[s].run = run_dkm_heat(d.pde, d.trainer, d.arch, d.mc_eval, streams,
                                   static_cast<std::uint64_t>(s));
      });
  });

  bool numeric_failure = false;
  std::ostringstream summary;
  summary << "seed,rel_l2_error,final_test,lr_searches,final_lr\n";
  std::vector<SeedTiming> times;
  for (int s = 0; s < d.seeds; ++s) {
    const DkmRun& r = rows[s].run;
    {
      std::ostringstream os;
      write_trace_csv(os, r.run.train.trace);
      write_file(dir / ("trace_seed" + std::to_string(s) + ".csv"), os.str());
    }
    save_mlp_params(unflatten_params(d.arch, r.run.theta),
                    (dir / ("params_seed" + std::to_string(s) + ".bin")).string());
    if (has_nan(r.run.train.trace) || !std::isfinite(r.rel_l2_error)) numeric_failure = true;
    summary << s << ',' << format_double(r.rel_l2_error) << ','
            << format_double(r.run.final_test_loss) << ',' << r.run.train.lr_searches << ','
            << format_double(r.run.train.final_lr) << '\n';
    times.push_back({s, rows[s].wall_ms});
  }
  write_file(dir / "summary.csv", summary.str());
  write_timings(dir, times);
  return numeric_failure ? 1 : 0;
}

inline int run_quadratic_experiment(const ExperimentDescriptor& d, const StreamFamily& streams) {
  namespace fs = std::filesystem;
  const fs::path dir(d.output_dir);
  const QuadraticModel model(d.quad_dim, d.grad_factor,
                             DataDist::uniform(d.data_low, d.data_high));
  const Vector theta0 = d.theta0.empty() ? Vector(d.quad_dim, 0.0) : d.theta0;
  std::vector<double> probes = d.probes;
  std::sort(probes.begin(), probes.end());
  if (d.quad_steps == 0) probes.assign(1, 0.0);  // only t=0 is reachable without steps

  struct PerSeed {
    LadderSgdResult result;
    std::vector<TraceRecord> trace;
    std::int64_t wall_ms = 0;
  };
  std::vector<PerSeed> rows(d.seeds);
  const NuSequence nu = NuSequence::harmonic(d.nu1);
  parallel_chunks(d.seeds, d.seeds, [&](int, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t s = lo; s < hi; ++s) {
      PerSeed& row = rows[s];
      row.wall_ms = timed_ms([&] {
        TraceSink sink = [&row, &d](const TraceRecord& r) {
          if (r.step % d.trace_stride == 0) row.trace.push_back(r);
        };
        row.result = train_ladder_sgd(model, theta0, nu, d.train_batch, d.test_batch, d.quad_steps,
                                    streams, static_cast<std::uint64_t>(s), probes,
                                    /*stop_after_probes=*/false, sink);
      });
    }
  });

  const Vector mu = model.data.mean(model.dim);
  bool numeric_failure = false;
  bool horizon_missed = false;

  std::ostringstream summary;
  summary << "seed,steps_run,clock,increase_events,final_lr";
  for (double p : probes) summary << ",dist_t" << format_double(p);
  summary << '\n';
  std::vector<double> mean_dist(probes.size(), 0.0);
  std::vector<SeedTiming> times;
  for (int s = 0; s < d.seeds; ++s) {
    const LadderSgdResult& r = rows[s].result;
    {
      std::ostringstream os;
      os << kTraceCsvHeader << '\n';
      for (const TraceRecord& rec : rows[s].trace) write_trace_row(os, rec);
      write_file(dir / ("trace_seed" + std::to_string(s) + ".csv"), os.str());
    }
    summary << s << ',' << r.steps_run << ',' << format_double(r.clock) << ','
            << r.increase_steps.size() << ',' << format_double(r.final_lr);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      if (p < r.probe_theta.size()) {
        const double dist = squared_distance(r.probe_theta[p], mu);
        if (!std::isfinite(dist)) numeric_failure = true;
        mean_dist[p] += dist / static_cast<double>(d.seeds);
        summary << ',' << format_double(dist);
      } else {
        horizon_missed = true;
        summary << ',';
      }
    }
    summary << '\n';
    times.push_back({s, rows[s].wall_ms});
  }
  write_file(dir / "summary.csv", summary.str());

  std::ostringstream conv;
  conv << "t,mean_sq_dist\n";
  for (std::size_t p = 0; p < probes.size(); ++p)
    conv << format_double(probes[p]) << ',' << format_double(mean_dist[p]) << '\n';
  write_file(dir / "convergence.csv", conv.str());
  write_timings(dir, times);

  if (horizon_missed) {
    // unreached probes leave empty summary cells; surface it as an error
    return 1;
  }
  return numeric_failure ? 1 : 0;
}

inline int run_theory_experiment(const ExperimentDescriptor& d) {
  namespace fs = std::filesystem;
  const std::vector<TheoryCheckResult> results = run_theory_checks(d.checks);
  std::ostringstream os;
  os << "check,pass,detail\n";
  bool all_pass = true;
  for (const TheoryCheckResult& r : results) {
    os << r.name << ',' << (r.pass ? "1" : "0") << ",\"" << r.detail << "\"\n";
    if (!r.pass) all_pass = false;
  }
  write_file(fs::path(d.output_dir) / "checks.csv", os.str());
  return all_pass ? 0 : 1;
}

}  // namespace detail

inline int run_experiment(const ExperimentDescriptor& d) {
  namespace fs = std::filesystem;
  fs::create_directories(d.output_dir);
  {
    std::ofstream os(fs::path(d.output_dir) / "config.resolved.json");
    os << resolved_config_json(d).dump(2) << '\n';
  }
  const StreamFamily streams{d.seed};

  switch (d.kind) {
    case ExperimentKind::supervised:
      return detail::run_supervised_experiment(d, streams);
    case ExperimentKind::dkm_heat:
      return detail::run_dkm_experiment(d, streams);
    case ExperimentKind::quadratic:
      return detail::run_quadratic_experiment(d, streams);
    case ExperimentKind::theory_checks:
      return detail::run_theory_experiment(d);
  }
  return 1;
}

}  // namespace lrad
