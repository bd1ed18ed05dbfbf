#pragma once

#include <atomic>
#include <chrono>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "routelab/csv.hpp"
#include "routelab/heuristics.hpp"
#include "routelab/instance_gen.hpp"
#include "routelab/oracle.hpp"
#include "routelab/serialize.hpp"
#include "routelab/trainer.hpp"

namespace routelab::harness {

// ---------------------------------------------------------------------------
// Experiment drivers behind the CLI: run methods over shared instance sets,
// aggregate into report rows, and keep everything reproducible for a fixed
// seed (wall-time columns excepted). Instance-level parallelism is safe
// because every solver call is a pure function of (instance, derived seed).
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string method;
  std::string preset;
  int n_customers = 0;
  int fleet_size = 0;
  double mean_cost = 0.0;
  double mean_travel = 0.0;
  double mean_penalty = 0.0;
  double mean_seconds = 0.0;
  int n_instances = 0;
  std::uint64_t seed = 0;
  std::string instances_hash;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

inline const char* kReportHeader =
    "method,preset,n_customers,fleet_size,mean_cost,mean_travel,mean_penalty,mean_seconds,"
    "n_instances,seed,instances_hash";

inline std::string report_to_csv(const ExperimentReport& report) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const ReportRow& r : report.rows) {
    out += r.method + ',' + r.preset + ',' + std::to_string(r.n_customers) + ',' +
           std::to_string(r.fleet_size) + ',' + csv::format_double(r.mean_cost) + ',' +
           csv::format_double(r.mean_travel) + ',' + csv::format_double(r.mean_penalty) + ',' +
           csv::format_double(r.mean_seconds) + ',' + std::to_string(r.n_instances) + ',' +
           std::to_string(r.seed) + ',' + r.instances_hash + '\n';
  }
  return out;
}

inline void write_report(const std::string& path, const ExperimentReport& report) {
  csv::write_file(path, report_to_csv(report));
}

inline ExperimentReport read_report(const std::string& path) {
  const std::string content = csv::read_file(path);
  std::istringstream is(content);
  std::string line;
  ExperimentReport report;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != kReportHeader) throw ParseError(1, "unexpected report header");
      continue;
    }
    const auto f = csv::split_line(line);
    if (f.size() != 11) throw ParseError(lineno, "report row must have 11 fields");
    ReportRow r;
    r.method = f[0];
    r.preset = f[1];
    r.n_customers = static_cast<int>(csv::parse_long(f[2], lineno));
    r.fleet_size = static_cast<int>(csv::parse_long(f[3], lineno));
    r.mean_cost = csv::parse_double(f[4], lineno);
    r.mean_travel = csv::parse_double(f[5], lineno);
    r.mean_penalty = csv::parse_double(f[6], lineno);
    r.mean_seconds = csv::parse_double(f[7], lineno);
    r.n_instances = static_cast<int>(csv::parse_long(f[8], lineno));
    r.seed = static_cast<std::uint64_t>(csv::parse_long(f[9], lineno));
    r.instances_hash = f[10];
    report.rows.push_back(std::move(r));
  }
  return report;
}

// ---- solver dispatch --------------------------------------------------------

struct SolveOptions {
  std::string method = "nn";
  std::uint64_t seed = 0;
  const maam::ModelParams* model = nullptr;  // required for "maam"
  std::string mode = "greedy";               // maam decode mode
  int samples = 1;                           // maam sample mode: best of K
  std::uint64_t node_limit = std::numeric_limits<std::uint64_t>::max();  // oracle
};

inline std::vector<std::string> solver_methods() {
  return {"oracle", "ga1", "ga2", "ils1", "ils2", "nn", "maam"};
}

inline Solution solve_maam(const Instance& inst, const maam::ModelParams& model,
                           const std::string& mode, int samples, std::uint64_t seed) {
  if (mode == "greedy") {
    return maam::rollout(inst, model, maam::DecodeMode::Greedy).solution;
  }
  if (mode != "sample") throw ConfigError("maam: mode must be greedy or sample");
  if (samples < 1) throw ConfigError("maam: samples must be >= 1");
  Rng rng(seed);
  Solution best;
  bool have = false;
  for (int s = 0; s < samples; ++s) {
    Solution cand = maam::rollout(inst, model, maam::DecodeMode::Sample, &rng).solution;
    if (!have || cand.cost.total < best.cost.total) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

// Runs one method on one instance; `instance_index` derives the per-instance
// seed so results do not depend on scheduling.
inline Solution solve_instance(const Instance& inst, const SolveOptions& opts, int instance_index) {
  const std::uint64_t seed = derive_seed(opts.seed, static_cast<std::uint64_t>(instance_index));
  if (opts.method == "oracle") return oracle::solve_exact(inst, opts.node_limit).best;
  if (opts.method == "ga1") return heuristics::solve_ga(inst, heuristics::ga1_config(seed));
  if (opts.method == "ga2") return heuristics::solve_ga(inst, heuristics::ga2_config(seed));
  if (opts.method == "ils1") return heuristics::solve_ils(inst, heuristics::ils1_config(seed));
  if (opts.method == "ils2") return heuristics::solve_ils(inst, heuristics::ils2_config(seed));
  if (opts.method == "nn") return heuristics::nearest_neighbor_solution(inst);
  if (opts.method == "maam") {
    if (!opts.model) throw ConfigError("maam method requires a checkpoint");
    return solve_maam(inst, *opts.model, opts.mode, opts.samples, seed);
  }
  throw ConfigError("unknown method \"" + opts.method + "\"");
}

// Index-ordered parallel map; worker count never affects results.
template <typename Fn>
inline void parallel_for(int count, int jobs, Fn&& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int n_threads = std::min(jobs, count);
  threads.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct MethodRun {
  std::vector<Solution> solutions;  // instance order
  double mean_cost = 0.0;
  double mean_travel = 0.0;
  double mean_penalty = 0.0;
  double mean_seconds = 0.0;
};

inline MethodRun run_method(const std::vector<Instance>& instances, const SolveOptions& opts,
                            int jobs) {
  MethodRun run;
  run.solutions.resize(instances.size());
  std::vector<double> secs(instances.size(), 0.0);
  parallel_for(static_cast<int>(instances.size()), jobs, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    run.solutions[static_cast<std::size_t>(i)] =
        solve_instance(instances[static_cast<std::size_t>(i)], opts, i);
    secs[static_cast<std::size_t>(i)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  if (!instances.empty()) {
    const double inv = 1.0 / static_cast<double>(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
      run.mean_cost += run.solutions[i].cost.total * inv;
      run.mean_travel += run.solutions[i].cost.travel * inv;
      run.mean_penalty += run.solutions[i].cost.penalty * inv;
      run.mean_seconds += secs[i] * inv;
    }
  }
  return run;
}

// ---- benchmark ----------------------------------------------------------------

struct BenchConfig {
  std::vector<std::string> methods;
  std::string preset = "20C-2V";
  int count = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  const maam::ModelParams* model = nullptr;
  std::string maam_mode = "greedy";
  int maam_samples = 1;
};

inline ReportRow make_row(const std::string& method, const std::string& preset_label,
                          const GenConfig& gen, const MethodRun& run, int count,
                          std::uint64_t seed, const std::string& hash) {
  ReportRow row;
  row.method = method;
  row.preset = preset_label;
  row.n_customers = gen.n_customers;
  row.fleet_size = gen.fleet_size;
  row.mean_cost = run.mean_cost;
  row.mean_travel = run.mean_travel;
  row.mean_penalty = run.mean_penalty;
  row.mean_seconds = run.mean_seconds;
  row.n_instances = count;
  row.seed = seed;
  row.instances_hash = hash;
  return row;
}

inline ExperimentReport run_benchmark(const BenchConfig& cfg) {
  if (cfg.methods.empty()) throw ConfigError("bench: no methods given");
  for (const std::string& m : cfg.methods) {
    if (m == "maam" && !cfg.model) throw ConfigError("bench: maam requires a checkpoint");
    bool known = false;
    for (const std::string& k : solver_methods()) known |= (k == m);
    if (!known) throw ConfigError("bench: unknown method \"" + m + "\"");
  }
  GenConfig gen = preset_config(cfg.preset);
  gen.seed = cfg.seed;
  const std::vector<Instance> instances = generate(gen, cfg.count);
  const std::string hash = instances_content_hash(instances);

  ExperimentReport report;
  for (const std::string& method : cfg.methods) {
    SolveOptions opts;
    opts.method = method;
    opts.seed = cfg.seed;
    opts.model = cfg.model;
    opts.mode = cfg.maam_mode;
    opts.samples = cfg.maam_samples;
    const MethodRun run = run_method(instances, opts, cfg.jobs);
    report.rows.push_back(make_row(method, cfg.preset, gen, run, cfg.count, cfg.seed, hash));
  }
  return report;
}

// ---- robustness (smaller customer counts via virtual padding; capacity scaling) ----

struct RobustnessConfig {
  std::string preset = "10C-2V";  // the preset the checkpoint was trained on
  int trained_n = 0;              // customer count the model expects
  std::vector<int> customer_counts;
  std::vector<double> capacity_factors;
  std::vector<std::string> baselines{"nn"};
  int count = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  const maam::ModelParams* model = nullptr;
};

// Decodes on the padded instance, then drops the virtual customers and
// re-evaluates on the real one (the padding is purely a model-input trick).
inline Solution solve_maam_padded(const Instance& original, const maam::ModelParams& model,
                                  int trained_n) {
  const Instance padded = pad_virtual_customers(original, trained_n);
  const Solution padded_sol = maam::rollout(padded, model, maam::DecodeMode::Greedy).solution;
  Routes stripped = padded_sol.routes;
  for (auto& route : stripped) {
    std::erase_if(route, [&](int id) { return id > original.n_customers(); });
  }
  return evaluate_solution(original, stripped);
}

inline ExperimentReport run_robustness(const RobustnessConfig& cfg) {
  if (!cfg.model) throw ConfigError("robustness: a maam checkpoint is required");
  if (cfg.trained_n < 1) throw ConfigError("robustness: trained_n must be >= 1");
  for (int c : cfg.customer_counts) {
    if (c > cfg.trained_n) {
      throw InvalidArgumentError("robustness: requested count " + std::to_string(c) +
                                 " exceeds trained size " + std::to_string(cfg.trained_n));
    }
    if (c < 1) throw ConfigError("robustness: counts must be >= 1");
  }
  for (double f : cfg.capacity_factors) {
    if (!(f > 0.0)) throw ConfigError("robustness: capacity factors must be positive");
  }

  ExperimentReport report;
  const GenConfig base_gen = preset_config(cfg.preset);

  auto run_condition = [&](const std::string& label, const GenConfig& gen,
                           const std::vector<Instance>& model_inputs,
                           const std::vector<Instance>& baseline_inputs, bool pad) {
    const std::string hash = instances_content_hash(baseline_inputs);
    {
      MethodRun run;
      run.solutions.resize(model_inputs.size());
      std::vector<double> secs(model_inputs.size(), 0.0);
      parallel_for(static_cast<int>(model_inputs.size()), cfg.jobs, [&](int i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Instance& inst = model_inputs[static_cast<std::size_t>(i)];
        run.solutions[static_cast<std::size_t>(i)] =
            pad ? solve_maam_padded(inst, *cfg.model, cfg.trained_n)
                : maam::rollout(inst, *cfg.model, maam::DecodeMode::Greedy).solution;
        secs[static_cast<std::size_t>(i)] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      const double inv = model_inputs.empty() ? 0.0 : 1.0 / static_cast<double>(model_inputs.size());
      for (std::size_t i = 0; i < model_inputs.size(); ++i) {
        run.mean_cost += run.solutions[i].cost.total * inv;
        run.mean_travel += run.solutions[i].cost.travel * inv;
        run.mean_penalty += run.solutions[i].cost.penalty * inv;
        run.mean_seconds += secs[i] * inv;
      }
      report.rows.push_back(
          make_row("maam", label, gen, run, static_cast<int>(model_inputs.size()), cfg.seed, hash));
    }
    for (const std::string& method : cfg.baselines) {
      SolveOptions opts;
      opts.method = method;
      opts.seed = cfg.seed;
      const MethodRun run = run_method(baseline_inputs, opts, cfg.jobs);
      report.rows.push_back(make_row(method, label, gen, run,
                                     static_cast<int>(baseline_inputs.size()), cfg.seed, hash));
    }
  };

  for (int n : cfg.customer_counts) {
    GenConfig gen = base_gen;
    gen.n_customers = n;
    gen.seed = cfg.seed;
    const std::vector<Instance> instances = generate(gen, cfg.count);
    const std::string label = cfg.preset + "@n=" + std::to_string(n);
    run_condition(label, gen, instances, instances, /*pad=*/n < cfg.trained_n);
  }

  if (!cfg.capacity_factors.empty()) {
    GenConfig gen = base_gen;
    gen.n_customers = cfg.trained_n;
    gen.seed = cfg.seed;
    const std::vector<Instance> base_instances = generate(gen, cfg.count);
    for (double f : cfg.capacity_factors) {
      std::vector<Instance> scaled;
      scaled.reserve(base_instances.size());
      for (const Instance& inst : base_instances) scaled.push_back(scale_capacity(inst, f));
      std::ostringstream label;
      label << cfg.preset << "@q=" << csv::format_double(f);
      run_condition(label.str(), gen, scaled, scaled, /*pad=*/false);
    }
  }
  return report;
}

// ---- sensitivity sweep -----------------------------------------------------------

struct SweepPoint {
  std::string axis;
  double value = 0.0;
  int epoch = 0;
  double eval_cost = 0.0;
};

inline std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::string out = "axis,value,epoch,eval_cost\n";
  for (const SweepPoint& p : points) {
    out += p.axis + ',' + csv::format_double(p.value) + ',' + std::to_string(p.epoch) + ',' +
           csv::format_double(p.eval_cost) + '\n';
  }
  return out;
}

// Trains one model per value with otherwise identical configs and seeds and
// collects the per-epoch greedy eval-cost curves.
inline std::vector<SweepPoint> run_sensitivity(const std::string& axis,
                                               const std::vector<double>& values,
                                               const train::TrainConfig& base_cfg) {
  if (values.size() < 2) throw ConfigError("sweep: need at least two values");
  if (axis != "dim" && axis != "layers" && axis != "heads") {
    throw ConfigError("sweep: axis must be dim, layers or heads");
  }
  std::vector<SweepPoint> points;
  for (double value : values) {
    train::TrainConfig cfg = base_cfg;
    const int iv = static_cast<int>(value);
    if (axis == "dim") {
      cfg.model_config.embed_dim = iv;
    } else if (axis == "layers") {
      cfg.model_config.n_layers = iv;
    } else {
      cfg.model_config.n_heads = iv;
    }
    train::TrainResult result;
    try {
      result = train::train(cfg);
    } catch (const Error& e) {
      throw Error("sweep: " + axis + "=" + csv::format_double(value) + ": " + e.what());
    }
    for (const auto& rec : result.log.records) {
      points.push_back(SweepPoint{axis, value, rec.epoch, rec.eval_cost_mean});
    }
  }
  return points;
}

}  // namespace routelab::harness
