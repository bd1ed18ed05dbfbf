#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "routelab/csv.hpp"
#include "routelab/instance_gen.hpp"
#include "routelab/model.hpp"
#include "routelab/optimizer.hpp"
#include "routelab/stats.hpp"

namespace routelab::train {

// ---------------------------------------------------------------------------
// REINFORCE with a frozen greedy-rollout baseline. Per instance the loss is
// -(R - R_BL) * log p with R = -cost of a sampled rollout under the policy
// and R_BL = -cost of a greedy rollout under the baseline; the advantage is
// a constant, so no gradient flows through either reward. The baseline is
// replaced by the policy only when a one-sided paired t-test on a fixed
// evaluation set is significant.
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 20;
  int instances_per_epoch = 2000;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double adam_beta2 = 0.999;
  double ttest_alpha = 0.05;
  int eval_set_size = 256;
  GenConfig gen_config;
  maam::ModelConfig model_config;
  double grad_clip = 0.0;  // 0 = off
  std::uint64_t seed = 0;
};

// Fills the model fields that must mirror the generator before validation.
inline TrainConfig resolve_train_config(TrainConfig cfg) {
  cfg.model_config.fleet_size = cfg.gen_config.fleet_size;
  cfg.model_config.horizon = cfg.gen_config.window_horizon;
  cfg.model_config.capacity = cfg.gen_config.capacity;
  return cfg;
}

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (cfg.instances_per_epoch < 1) throw ConfigError("train: instances_per_epoch must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(cfg.ttest_alpha > 0.0 && cfg.ttest_alpha < 1.0)) {
    throw ConfigError("train: ttest_alpha must lie in (0, 1)");
  }
  if (cfg.eval_set_size < 2) throw ConfigError("train: eval_set_size must be >= 2");
  if (cfg.grad_clip < 0.0) throw ConfigError("train: grad_clip must be >= 0");
  validate_gen_config(cfg.gen_config);
  maam::validate_model_config(cfg.model_config);
  if (cfg.model_config.fleet_size != cfg.gen_config.fleet_size) {
    throw ConfigError("train: model fleet size does not match generator fleet size");
  }
}

struct EpochRecord {
  int epoch = 0;
  double train_cost_mean = 0.0;
  double eval_cost_mean = 0.0;
  bool baseline_replaced = false;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> records;  // one per completed epoch
};

struct TrainResult {
  maam::ModelParams best_params;   // lowest greedy eval cost seen
  maam::ModelParams final_params;  // after the last epoch
  TrainLog log;
  double initial_eval_cost = 0.0;  // untrained greedy cost on the eval set
  double best_eval_cost = 0.0;
  int best_epoch = 0;  // 0 = untrained model
};

inline std::vector<double> greedy_costs(const maam::ModelParams& params,
                                        const std::vector<Instance>& instances) {
  std::vector<double> costs;
  costs.reserve(instances.size());
  for (const Instance& inst : instances) {
    costs.push_back(maam::rollout(inst, params, maam::DecodeMode::Greedy).solution.cost.total);
  }
  return costs;
}

inline double mean_greedy_cost(const maam::ModelParams& params,
                               const std::vector<Instance>& instances) {
  const auto costs = greedy_costs(params, instances);
  return stats::mean(costs);
}

struct BatchStats {
  double mean_sample_cost = 0.0;
  double mean_baseline_cost = 0.0;
  double mean_advantage = 0.0;
};

// Accumulates gradients of the batch-mean surrogate loss into the policy
// parameters (caller zeroes grads beforehand and applies the optimizer
// step afterwards).
inline BatchStats reinforce_batch(const std::vector<Instance>& batch, maam::ModelParams& policy,
                                  const maam::ModelParams& baseline, Rng& rng) {
  if (batch.empty()) throw InvalidArgumentError("reinforce_batch: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  BatchStats stats;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Instance& inst = batch[i];
    maam::RolloutResult sampled;
    maam::RolloutResult greedy_bl;
    try {
      sampled = maam::rollout(inst, policy, maam::DecodeMode::Sample, &rng);
      greedy_bl = maam::rollout(inst, baseline, maam::DecodeMode::Greedy);
    } catch (const Error& e) {
      throw Error("reinforce_batch: instance " + std::to_string(i) + ": " + e.what());
    }
    const double sample_cost = sampled.solution.cost.total;
    const double baseline_cost = greedy_bl.solution.cost.total;
    const double advantage = reward(sampled.solution) - reward(greedy_bl.solution);
    const double log_prob = sampled.log_prob.item();
    if (!std::isfinite(sample_cost) || !std::isfinite(baseline_cost) || !std::isfinite(log_prob)) {
      throw Error("reinforce_batch: non-finite loss terms at instance " + std::to_string(i));
    }
    // loss_i = -(R - R_BL) * log p / B; the advantage enters as a constant.
    ad::backward(ad::scale(sampled.log_prob, -advantage * inv_b));
    stats.mean_sample_cost += sample_cost * inv_b;
    stats.mean_baseline_cost += baseline_cost * inv_b;
    stats.mean_advantage += advantage * inv_b;
  }
  return stats;
}

struct TtestOutcome {
  bool replaced = false;
  double p_value = 1.0;
  double candidate_mean = 0.0;
  std::vector<double> candidate_costs;
};

// Greedy-decodes both models on the evaluation set; copies the policy into
// the baseline when the one-sided paired t-test on cost differences
// (candidate minus baseline) is significant at `alpha`.
inline TtestOutcome paired_ttest_update(const maam::ModelParams& policy,
                                        maam::ModelParams& baseline,
                                        const std::vector<Instance>& eval_set, double alpha) {
  if (eval_set.empty()) throw InvalidArgumentError("paired_ttest_update: empty eval set");
  TtestOutcome out;
  out.candidate_costs = greedy_costs(policy, eval_set);
  const std::vector<double> baseline_costs = greedy_costs(baseline, eval_set);
  out.candidate_mean = stats::mean(out.candidate_costs);
  out.p_value = stats::paired_ttest_pvalue_less(out.candidate_costs, baseline_costs);
  if (out.p_value < alpha) {
    baseline.copy_values_from(policy);
    out.replaced = true;
  }
  return out;
}

inline void clip_gradients(std::vector<ad::Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const ad::Tensor& p : params) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double factor = max_norm / norm;
  for (ad::Tensor& p : params) {
    for (double& g : p.grad_mut()) g *= factor;
  }
}

inline TrainResult train(const TrainConfig& raw_cfg) {
  const TrainConfig cfg = resolve_train_config(raw_cfg);
  validate_train_config(cfg);

  maam::ModelParams policy = maam::ModelParams::init(cfg.model_config, derive_seed(cfg.seed, 1));
  TrainResult result;
  result.final_params = policy;
  if (cfg.epochs == 0) {
    result.best_params = policy.clone(false);
    return result;
  }

  maam::ModelParams baseline = policy.clone(false);
  GenConfig eval_gen = cfg.gen_config;
  eval_gen.seed = derive_seed(cfg.seed, 2);
  const std::vector<Instance> eval_set = generate(eval_gen, cfg.eval_set_size);

  result.initial_eval_cost = mean_greedy_cost(policy, eval_set);
  result.best_params = policy.clone(false);
  result.best_eval_cost = result.initial_eval_cost;
  result.best_epoch = 0;

  auto params = policy.all();
  ad::AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  adam.beta2 = cfg.adam_beta2;
  adam.init(params);
  Rng rollout_rng(derive_seed(cfg.seed, 3));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    GenConfig epoch_gen = cfg.gen_config;
    epoch_gen.seed = derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(epoch));
    const std::vector<Instance> instances = generate(epoch_gen, cfg.instances_per_epoch);

    double epoch_cost_sum = 0.0;
    std::size_t begin = 0;
    int batch_index = 0;
    while (begin < instances.size()) {
      const std::size_t end = std::min(begin + static_cast<std::size_t>(cfg.batch_size),
                                       instances.size());
      const std::vector<Instance> batch(instances.begin() + static_cast<std::ptrdiff_t>(begin),
                                        instances.begin() + static_cast<std::ptrdiff_t>(end));
      ad::zero_grads(params);
      BatchStats stats;
      try {
        stats = reinforce_batch(batch, policy, baseline, rollout_rng);
      } catch (const Error& e) {
        throw Error("train: epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(batch_index) + " (gen seed " + std::to_string(epoch_gen.seed) +
                    "): " + e.what());
      }
      if (cfg.grad_clip > 0.0) clip_gradients(params, cfg.grad_clip);
      ad::adam_step(params, adam);
      epoch_cost_sum += stats.mean_sample_cost * static_cast<double>(batch.size());
      begin = end;
      ++batch_index;
    }

    const TtestOutcome outcome = paired_ttest_update(policy, baseline, eval_set, cfg.ttest_alpha);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_cost_mean = epoch_cost_sum / static_cast<double>(instances.size());
    rec.eval_cost_mean = outcome.candidate_mean;
    rec.baseline_replaced = outcome.replaced;
    rec.seconds = seconds;
    result.log.records.push_back(rec);

    if (outcome.candidate_mean < result.best_eval_cost) {
      result.best_params = policy.clone(false);
      result.best_eval_cost = outcome.candidate_mean;
      result.best_epoch = epoch;
    }
  }
  result.final_params = policy;
  return result;
}

// CSV persistence: epoch,train_cost_mean,eval_cost_mean,baseline_replaced,seconds
inline std::string train_log_to_csv(const TrainLog& log) {
  std::string out = "epoch,train_cost_mean,eval_cost_mean,baseline_replaced,seconds\n";
  for (const EpochRecord& r : log.records) {
    out += std::to_string(r.epoch) + ',' + csv::format_double(r.train_cost_mean) + ',' +
           csv::format_double(r.eval_cost_mean) + ',' + (r.baseline_replaced ? "1" : "0") + ',' +
           csv::format_double(r.seconds) + '\n';
  }
  return out;
}

inline void write_train_log(const std::string& path, const TrainLog& log) {
  csv::write_file(path, train_log_to_csv(log));
}

inline TrainLog read_train_log(const std::string& path) {
  const std::string content = csv::read_file(path);
  std::istringstream is(content);
  std::string line;
  TrainLog log;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != 5) throw ParseError(lineno, "train log row must have 5 fields");
    EpochRecord r;
    r.epoch = static_cast<int>(csv::parse_long(fields[0], lineno));
    r.train_cost_mean = csv::parse_double(fields[1], lineno);
    r.eval_cost_mean = csv::parse_double(fields[2], lineno);
    r.baseline_replaced = csv::parse_long(fields[3], lineno) != 0;
    r.seconds = csv::parse_double(fields[4], lineno);
    log.records.push_back(r);
  }
  return log;
}

}  // namespace routelab::train
