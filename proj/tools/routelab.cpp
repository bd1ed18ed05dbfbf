// Command-line front end for the MVRPSTW solver laboratory.
//
// Subcommands: gen, solve, train, bench, sweep, robustness, validate.
// Exit codes: 0 success, 2 validation failure, 3 configuration error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "routelab/report.hpp"

namespace {

using namespace routelab;

struct CkptBundle {
  maam::ModelParams params;
  nlohmann::ordered_json meta;
};

CkptBundle load_ckpt(const std::string& path) {
  CkptBundle bundle{maam::ModelParams{}, {}};
  bundle.params = maam::load_model(path, &bundle.meta);
  return bundle;
}

int cmd_gen(const std::string& preset, int count, std::uint64_t seed, const std::string& out) {
  GenConfig cfg = preset_config(preset);
  cfg.seed = seed;
  const std::vector<Instance> instances = generate(cfg, count);
  write_instances(out, instances);
  std::cout << "wrote " << instances.size() << " instances to " << out << "\n";
  return 0;
}

int cmd_solve(const std::string& method, const std::string& in, const std::string& out,
              std::uint64_t seed, int jobs, const std::string& ckpt, const std::string& mode,
              int samples, std::uint64_t node_limit) {
  harness::SolveOptions opts;
  opts.method = method;
  opts.seed = seed;
  opts.mode = mode;
  opts.samples = samples;
  opts.node_limit = node_limit;
  std::optional<CkptBundle> bundle;
  if (method == "maam") {
    if (ckpt.empty()) throw ConfigError("solve: --ckpt is required for method maam");
    bundle = load_ckpt(ckpt);
    opts.model = &bundle->params;
  }
  const std::vector<Instance> instances = read_instances(in);
  std::vector<Solution> solutions(instances.size());
  harness::parallel_for(static_cast<int>(instances.size()), jobs, [&](int i) {
    solutions[static_cast<std::size_t>(i)] =
        harness::solve_instance(instances[static_cast<std::size_t>(i)], opts, i);
  });
  write_solutions(out, solutions);
  double mean_cost = 0.0;
  for (const Solution& s : solutions) mean_cost += s.cost.total;
  if (!solutions.empty()) mean_cost /= static_cast<double>(solutions.size());
  std::cout << method << ": solved " << solutions.size() << " instances, mean cost "
            << csv::format_double(mean_cost) << "\n";
  return 0;
}

int cmd_validate(const std::string& instances_path, const std::string& solutions_path, double tol) {
  const std::vector<Instance> instances = read_instances(instances_path);
  const std::vector<SolutionRecord> solutions = read_solutions(solutions_path);
  if (instances.size() != solutions.size()) {
    std::cerr << "validate: " << instances.size() << " instances vs " << solutions.size()
              << " solutions\n";
    return 2;
  }
  int failures = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      const Solution sol = evaluate_solution(instances[i], solutions[i].routes);
      const CostBreakdown& stored = solutions[i].cost;
      if (std::abs(sol.cost.travel - stored.travel) > tol ||
          std::abs(sol.cost.penalty - stored.penalty) > tol ||
          std::abs(sol.cost.total - stored.total) > tol) {
        std::cerr << "record " << i + 1 << ": stored cost (" << stored.travel << ", "
                  << stored.penalty << ", " << stored.total << ") != recomputed ("
                  << sol.cost.travel << ", " << sol.cost.penalty << ", " << sol.cost.total
                  << ")\n";
        ++failures;
      }
    } catch (const ValidationError& e) {
      std::cerr << "record " << i + 1 << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (failures > 0) {
    std::cerr << failures << " of " << instances.size() << " records failed validation\n";
    return 2;
  }
  std::cout << "all " << instances.size() << " records valid\n";
  return 0;
}

struct TrainFlags {
  std::string preset = "10C-2V";
  int epochs = 20;
  int instances_per_epoch = 2000;
  int batch = 64;
  int dim = 128;
  int layers = 3;
  int heads = 8;
  int ff_hidden = 0;
  double logit_scale = 0.0;
  double lr = 1e-4;
  double alpha = 0.05;
  int eval_set = 256;
  double grad_clip = 0.0;
  std::uint64_t seed = 0;
};

train::TrainConfig make_train_config(const TrainFlags& f) {
  train::TrainConfig cfg;
  cfg.gen_config = preset_config(f.preset);
  cfg.gen_config.seed = f.seed;
  cfg.epochs = f.epochs;
  cfg.instances_per_epoch = f.instances_per_epoch;
  cfg.batch_size = f.batch;
  cfg.learning_rate = f.lr;
  cfg.ttest_alpha = f.alpha;
  cfg.eval_set_size = f.eval_set;
  cfg.grad_clip = f.grad_clip;
  cfg.seed = f.seed;
  cfg.model_config.embed_dim = f.dim;
  cfg.model_config.n_layers = f.layers;
  cfg.model_config.n_heads = f.heads;
  cfg.model_config.ff_hidden = f.ff_hidden;
  cfg.model_config.logit_scale = f.logit_scale;
  return cfg;
}

int cmd_train(const TrainFlags& flags, const std::string& out, const std::string& log_path) {
  const train::TrainConfig cfg = make_train_config(flags);
  if (cfg.grad_clip > 0.0) {
    std::cerr << "train: gradient clipping enabled at " << cfg.grad_clip << "\n";
  }
  const train::TrainResult result = train::train(cfg);
  if (!out.empty()) {
    nlohmann::ordered_json extra;
    extra["trained_n"] = cfg.gen_config.n_customers;
    extra["preset"] = flags.preset;
    maam::save_model(out, result.best_params, extra);
  }
  if (!log_path.empty()) train::write_train_log(log_path, result.log);
  std::cout << "initial greedy eval cost " << csv::format_double(result.initial_eval_cost)
            << ", best " << csv::format_double(result.best_eval_cost) << " (epoch "
            << result.best_epoch << ")\n";
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_bench(const std::string& methods, const std::string& preset, int count,
              std::uint64_t seed, int jobs, const std::string& out, const std::string& ckpt,
              const std::string& mode, int samples) {
  harness::BenchConfig cfg;
  cfg.methods = split_list(methods);
  cfg.preset = preset;
  cfg.count = count;
  cfg.seed = seed;
  cfg.jobs = jobs;
  cfg.maam_mode = mode;
  cfg.maam_samples = samples;
  std::optional<CkptBundle> bundle;
  bool needs_model = false;
  for (const std::string& m : cfg.methods) needs_model |= (m == "maam");
  if (needs_model) {
    if (ckpt.empty()) throw ConfigError("bench: --ckpt is required when methods include maam");
    bundle = load_ckpt(ckpt);
    cfg.model = &bundle->params;
  }
  const harness::ExperimentReport report = harness::run_benchmark(cfg);
  harness::write_report(out, report);
  std::cout << "wrote " << report.rows.size() << " report rows to " << out << "\n";
  return 0;
}

int cmd_sweep(const std::string& axis, const std::string& values_csv, const TrainFlags& flags,
              const std::string& out) {
  std::vector<double> values;
  for (const std::string& v : split_list(values_csv)) values.push_back(std::stod(v));
  const train::TrainConfig base = make_train_config(flags);
  const auto points = harness::run_sensitivity(axis, values, base);
  csv::write_file(out, harness::sweep_to_csv(points));
  std::cout << "wrote " << points.size() << " sweep points to " << out << "\n";
  return 0;
}

int cmd_robustness(const std::string& ckpt, const std::string& preset, const std::string& counts_csv,
                   const std::string& factors_csv, const std::string& baselines_csv, int count,
                   std::uint64_t seed, int jobs, const std::string& out) {
  CkptBundle bundle = load_ckpt(ckpt);
  harness::RobustnessConfig cfg;
  cfg.model = &bundle.params;
  cfg.preset = !preset.empty() ? preset : bundle.meta.value("preset", std::string{});
  if (cfg.preset.empty()) {
    throw ConfigError("robustness: checkpoint carries no preset; pass --preset");
  }
  cfg.trained_n = bundle.meta.value("trained_n", 0);
  if (cfg.trained_n == 0) {
    throw ConfigError("robustness: checkpoint does not record the trained customer count");
  }
  for (const std::string& v : split_list(counts_csv)) cfg.customer_counts.push_back(std::stoi(v));
  for (const std::string& v : split_list(factors_csv)) cfg.capacity_factors.push_back(std::stod(v));
  if (!baselines_csv.empty()) cfg.baselines = split_list(baselines_csv);
  cfg.count = count;
  cfg.seed = seed;
  cfg.jobs = jobs;
  const harness::ExperimentReport report = harness::run_robustness(cfg);
  harness::write_report(out, report);
  std::cout << "wrote " << report.rows.size() << " report rows to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"routelab: an MVRPSTW solver laboratory"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate problem instances");
  std::string gen_preset = "20C-2V", gen_out = "instances.jsonl";
  int gen_count = 100;
  std::uint64_t gen_seed = 0;
  gen->add_option("--preset", gen_preset, "Instance preset")->required();
  gen->add_option("--count", gen_count, "Number of instances")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output file (JSON lines)")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve instances from a file");
  std::string solve_method = "nn", solve_in, solve_out = "solutions.jsonl", solve_ckpt,
              solve_mode = "greedy";
  int solve_jobs = 1, solve_samples = 1;
  std::uint64_t solve_seed = 0, solve_node_limit = std::numeric_limits<std::uint64_t>::max();
  solve->add_option("--method", solve_method, "oracle | ga1 | ga2 | ils1 | ils2 | nn | maam")
      ->required();
  solve->add_option("--in", solve_in, "Instance file")->required();
  solve->add_option("--out", solve_out, "Solution file")->required();
  solve->add_option("--seed", solve_seed, "Solver seed");
  solve->add_option("--jobs", solve_jobs, "Worker threads");
  solve->add_option("--ckpt", solve_ckpt, "Model checkpoint (maam)");
  solve->add_option("--mode", solve_mode, "maam decode mode: greedy | sample");
  solve->add_option("--samples", solve_samples, "maam sample mode: best of K");
  solve->add_option("--node-limit", solve_node_limit, "Oracle search node budget");

  // validate
  auto* validate = app.add_subcommand("validate", "Re-check a solution file against instances");
  std::string val_instances, val_solutions;
  double val_tol = 1e-9;
  validate->add_option("--instances", val_instances, "Instance file")->required();
  validate->add_option("--solutions", val_solutions, "Solution file")->required();
  validate->add_option("--tol", val_tol, "Cost comparison tolerance");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the attention model");
  TrainFlags tf;
  std::string train_out = "model.ckpt", train_log;
  train_cmd->add_option("--preset", tf.preset, "Generator preset")->required();
  train_cmd->add_option("--epochs", tf.epochs, "Training epochs");
  train_cmd->add_option("--instances-per-epoch", tf.instances_per_epoch, "Fresh instances per epoch");
  train_cmd->add_option("--batch", tf.batch, "Batch size");
  train_cmd->add_option("--dim", tf.dim, "Embedding dimension");
  train_cmd->add_option("--layers", tf.layers, "Encoder layers");
  train_cmd->add_option("--heads", tf.heads, "Attention heads");
  train_cmd->add_option("--ff-hidden", tf.ff_hidden, "Feed-forward hidden width (0 = 4*dim)");
  train_cmd->add_option("--logit-scale", tf.logit_scale, "Scale factor on tanh logits (0 = off)");
  train_cmd->add_option("--lr", tf.lr, "Learning rate");
  train_cmd->add_option("--alpha", tf.alpha, "Paired t-test significance level");
  train_cmd->add_option("--eval-set-size", tf.eval_set, "Held-out eval set size");
  train_cmd->add_option("--grad-clip", tf.grad_clip, "Global-norm gradient clip (0 = off)");
  train_cmd->add_option("--seed", tf.seed, "Training seed");
  train_cmd->add_option("--out", train_out, "Checkpoint output path");
  train_cmd->add_option("--log", train_log, "Training log CSV path");

  // bench
  auto* bench = app.add_subcommand("bench", "Compare methods on a shared instance set");
  std::string bench_methods, bench_preset = "20C-2V", bench_out = "report.csv", bench_ckpt,
              bench_mode = "greedy";
  int bench_count = 100, bench_jobs = 1, bench_samples = 1;
  std::uint64_t bench_seed = 0;
  bench->add_option("--methods", bench_methods, "Comma-separated methods")->required();
  bench->add_option("--preset", bench_preset, "Instance preset")->required();
  bench->add_option("--count", bench_count, "Number of instances");
  bench->add_option("--seed", bench_seed, "Seed");
  bench->add_option("--jobs", bench_jobs, "Worker threads");
  bench->add_option("--out", bench_out, "Report CSV path")->required();
  bench->add_option("--ckpt", bench_ckpt, "Model checkpoint (maam)");
  bench->add_option("--mode", bench_mode, "maam decode mode");
  bench->add_option("--samples", bench_samples, "maam sample mode: best of K");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over a model hyperparameter");
  std::string sweep_axis, sweep_values, sweep_out = "sweep.csv";
  sweep->add_option("--axis", sweep_axis, "dim | layers | heads")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--preset", tf.preset, "Generator preset");
  sweep->add_option("--epochs", tf.epochs, "Training epochs");
  sweep->add_option("--instances-per-epoch", tf.instances_per_epoch, "Fresh instances per epoch");
  sweep->add_option("--batch", tf.batch, "Batch size");
  sweep->add_option("--dim", tf.dim, "Embedding dimension (base config)");
  sweep->add_option("--layers", tf.layers, "Encoder layers (base config)");
  sweep->add_option("--heads", tf.heads, "Attention heads (base config)");
  sweep->add_option("--lr", tf.lr, "Learning rate");
  sweep->add_option("--eval-set-size", tf.eval_set, "Held-out eval set size");
  sweep->add_option("--seed", tf.seed, "Training seed");
  sweep->add_option("--out", sweep_out, "Curve CSV path")->required();

  // robustness
  auto* robust = app.add_subcommand("robustness", "Evaluate a trained model off its nominal scale");
  std::string rob_ckpt, rob_preset, rob_counts, rob_factors, rob_baselines,
      rob_out = "robustness.csv";
  int rob_count = 100, rob_jobs = 1;
  std::uint64_t rob_seed = 0;
  robust->add_option("--ckpt", rob_ckpt, "Model checkpoint")->required();
  robust->add_option("--preset", rob_preset, "Base preset (defaults to the checkpoint's)");
  robust->add_option("--counts", rob_counts, "Comma-separated smaller customer counts");
  robust->add_option("--factors", rob_factors, "Comma-separated capacity factors");
  robust->add_option("--baselines", rob_baselines, "Comma-separated baseline methods (default nn)");
  robust->add_option("--count", rob_count, "Instances per condition");
  robust->add_option("--seed", rob_seed, "Seed");
  robust->add_option("--jobs", rob_jobs, "Worker threads");
  robust->add_option("--out", rob_out, "Report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_preset, gen_count, gen_seed, gen_out);
    if (solve->parsed()) {
      return cmd_solve(solve_method, solve_in, solve_out, solve_seed, solve_jobs, solve_ckpt,
                       solve_mode, solve_samples, solve_node_limit);
    }
    if (validate->parsed()) return cmd_validate(val_instances, val_solutions, val_tol);
    if (train_cmd->parsed()) return cmd_train(tf, train_out, train_log);
    if (bench->parsed()) {
      return cmd_bench(bench_methods, bench_preset, bench_count, bench_seed, bench_jobs, bench_out,
                       bench_ckpt, bench_mode, bench_samples);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_axis, sweep_values, tf, sweep_out);
    if (robust->parsed()) {
      return cmd_robustness(rob_ckpt, rob_preset, rob_counts, rob_factors, rob_baselines, rob_count,
                            rob_seed, rob_jobs, rob_out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
