#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "routelab/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace routelab;
using namespace routelab::train;

namespace {

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.gen_config = preset_config("6C-2V");
  cfg.gen_config.n_customers = 4;
  cfg.model_config.embed_dim = 8;
  cfg.model_config.n_layers = 1;
  cfg.model_config.n_heads = 2;
  cfg.model_config.ff_hidden = 16;
  cfg.epochs = 2;
  cfg.instances_per_epoch = 16;
  cfg.batch_size = 8;
  cfg.eval_set_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.seed = 42;
  return resolve_train_config(cfg);
}

}  // namespace

TEST_CASE("single-action instances give zero advantage and zero gradients") {
  // with one customer the sampled rollout always equals the greedy one
  GenConfig gen = preset_config("6C-2V");
  gen.n_customers = 1;
  gen.fleet_size = 1;
  gen.seed = 3;
  const auto batch = generate(gen, 4);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 1;
  mc.horizon = gen.window_horizon;
  maam::ModelParams policy = maam::ModelParams::init(mc, 7);
  const maam::ModelParams baseline = policy.clone(false);
  auto params = policy.all();
  ad::zero_grads(params);
  Rng rng(5);
  const BatchStats stats = reinforce_batch(batch, policy, baseline, rng);
  CHECK(stats.mean_advantage == 0.0);
  CHECK(stats.mean_sample_cost == stats.mean_baseline_cost);
  for (const auto& p : params) {
    for (double g : p.grad()) CHECK(g == 0.0);
  }
}

TEST_CASE("advantage has the sign of the baseline-minus-sample cost") {
  GenConfig gen = preset_config("6C-2V");
  gen.seed = 11;
  const auto batch = generate(gen, 6);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 2;
  mc.horizon = gen.window_horizon;
  maam::ModelParams policy = maam::ModelParams::init(mc, 13);
  const maam::ModelParams baseline = policy.clone(false);
  auto params = policy.all();
  ad::zero_grads(params);

  Rng rng(17);
  Rng replay_rng(17);
  const BatchStats stats = reinforce_batch(batch, policy, baseline, rng);

  double expected_advantage = 0.0;
  for (const Instance& inst : batch) {
    const auto sampled = maam::rollout(inst, policy, maam::DecodeMode::Sample, &replay_rng);
    const auto greedy = maam::rollout(inst, baseline, maam::DecodeMode::Greedy);
    expected_advantage +=
        (greedy.solution.cost.total - sampled.solution.cost.total) / static_cast<double>(batch.size());
  }
  CHECK_THAT(stats.mean_advantage, Catch::Matchers::WithinAbs(expected_advantage, 1e-12));
}

TEST_CASE("batch gradient equals the replayed surrogate and passes finite differences") {
  GenConfig gen = preset_config("6C-2V");
  gen.n_customers = 4;
  gen.seed = 19;
  const auto batch = generate(gen, 4);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 2;
  mc.horizon = gen.window_horizon;

  maam::ModelParams policy = maam::ModelParams::init(mc, 23);
  const maam::ModelParams baseline = policy.clone(false);

  // run the real batch
  auto params = policy.all();
  ad::zero_grads(params);
  Rng rng(29);
  reinforce_batch(batch, policy, baseline, rng);
  std::vector<std::vector<double>> batch_grads;
  for (const auto& p : params) batch_grads.push_back(p.grad());

  // replay: same sampling stream, advantages recomputed from the evaluator
  Rng replay_rng(29);
  std::vector<std::vector<int>> actions;
  std::vector<double> advantages;
  for (const Instance& inst : batch) {
    const auto sampled = maam::rollout(inst, policy, maam::DecodeMode::Sample, &replay_rng);
    const auto greedy = maam::rollout(inst, baseline, maam::DecodeMode::Greedy);
    actions.push_back(sampled.actions);
    const Solution recomputed = evaluate_solution(inst, sampled.solution.routes);
    advantages.push_back(reward(recomputed) - reward(greedy.solution));
  }
  // identical per-instance structure, advantages recomputed: bitwise equal
  ad::zero_grads(params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    maam::RolloutOptions opts;
    opts.forced_actions = &actions[i];
    const auto replayed = maam::rollout(batch[i], policy, maam::DecodeMode::Greedy, nullptr, opts);
    ad::backward(ad::scale(replayed.log_prob, -advantages[i] / static_cast<double>(batch.size())));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(params[i].grad() == batch_grads[i]);
  }

  // frozen advantages: the combined surrogate loss passes finite differences
  auto surrogate = [&] {
    ad::Tensor loss;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      maam::RolloutOptions opts;
      opts.forced_actions = &actions[i];
      const auto replayed = maam::rollout(batch[i], policy, maam::DecodeMode::Greedy, nullptr, opts);
      const ad::Tensor term =
          ad::scale(replayed.log_prob, -advantages[i] / static_cast<double>(batch.size()));
      loss = loss.defined() ? ad::add(loss, term) : term;
    }
    return loss;
  };
  CHECK(testutil::max_fd_rel_error(params, surrogate) < 1e-5);
}

TEST_CASE("reinforce batch never touches the baseline") {
  GenConfig gen = preset_config("6C-2V");
  gen.seed = 31;
  const auto batch = generate(gen, 4);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 2;
  mc.horizon = gen.window_horizon;
  maam::ModelParams policy = maam::ModelParams::init(mc, 37);
  maam::ModelParams baseline = policy.clone(false);
  const auto before = baseline.all();
  std::vector<std::vector<double>> snapshot;
  for (const auto& p : before) snapshot.push_back(p.value());
  auto params = policy.all();
  ad::zero_grads(params);
  Rng rng(41);
  reinforce_batch(batch, policy, baseline, rng);
  const auto after = baseline.all();
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(after[i].value() == snapshot[i]);
    CHECK_FALSE(after[i].has_grad());
  }
}

TEST_CASE("nan parameters abort the batch with a diagnostic") {
  GenConfig gen = preset_config("6C-2V");
  gen.seed = 43;
  const auto batch = generate(gen, 2);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 2;
  mc.horizon = gen.window_horizon;
  maam::ModelParams policy = maam::ModelParams::init(mc, 47);
  policy.input_w.value_mut()[0] = std::numeric_limits<double>::quiet_NaN();
  const maam::ModelParams baseline = policy.clone(false);
  Rng rng(53);
  CHECK_THROWS_AS(reinforce_batch(batch, policy, baseline, rng), Error);
}

TEST_CASE("paired t-test update mechanics") {
  GenConfig gen = preset_config("6C-2V");
  gen.seed = 59;
  const auto eval_set = generate(gen, 24);
  maam::ModelConfig mc;
  mc.embed_dim = 8;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.fleet_size = 2;
  mc.horizon = gen.window_horizon;

  SECTION("identical models never trigger replacement") {
    const maam::ModelParams policy = maam::ModelParams::init(mc, 61);
    maam::ModelParams baseline = policy.clone(false);
    const TtestOutcome outcome = paired_ttest_update(policy, baseline, eval_set, 0.05);
    CHECK_FALSE(outcome.replaced);
    CHECK(outcome.p_value == 1.0);  // zero variance, zero mean difference
  }

  SECTION("replacement copies the policy into the baseline") {
    // scan seeds for a significantly better candidate; fixed seeds keep this
    // deterministic
    bool found_replace = false;
    for (std::uint64_t seed = 0; seed < 60 && !found_replace; ++seed) {
      const maam::ModelParams policy = maam::ModelParams::init(mc, 1000 + seed);
      maam::ModelParams baseline = maam::ModelParams::init(mc, 2000 + seed);
      const TtestOutcome outcome = paired_ttest_update(policy, baseline, eval_set, 0.05);
      if (!outcome.replaced) continue;
      found_replace = true;
      const auto a = policy.all();
      const auto b = baseline.all();
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
    }
    CHECK(found_replace);
  }
}

TEST_CASE("zero epochs returns the initial parameters and an empty log") {
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 0;
  const TrainResult result = routelab::train::train(cfg);
  CHECK(result.log.records.empty());
  const maam::ModelParams fresh =
      maam::ModelParams::init(cfg.model_config, derive_seed(cfg.seed, 1));
  const auto a = result.final_params.all();
  const auto b = fresh.all();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
}

TEST_CASE("training is reproducible for a fixed seed") {
  const TrainConfig cfg = tiny_train_config();
  const TrainResult r1 = routelab::train::train(cfg);
  const TrainResult r2 = routelab::train::train(cfg);
  REQUIRE(r1.log.records.size() == r2.log.records.size());
  for (std::size_t i = 0; i < r1.log.records.size(); ++i) {
    CHECK(r1.log.records[i].epoch == r2.log.records[i].epoch);
    CHECK(r1.log.records[i].train_cost_mean == r2.log.records[i].train_cost_mean);
    CHECK(r1.log.records[i].eval_cost_mean == r2.log.records[i].eval_cost_mean);
    CHECK(r1.log.records[i].baseline_replaced == r2.log.records[i].baseline_replaced);
  }
  CHECK(r1.initial_eval_cost == r2.initial_eval_cost);
  const auto a = r1.final_params.all();
  const auto b = r2.final_params.all();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
}

TEST_CASE("checkpointed model is the eval minimum over the log") {
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 4;
  const TrainResult result = routelab::train::train(cfg);
  double min_eval = result.initial_eval_cost;
  for (const auto& rec : result.log.records) min_eval = std::min(min_eval, rec.eval_cost_mean);
  CHECK(result.best_eval_cost == min_eval);
  // checking the stored parameters really achieve that eval cost
  GenConfig eval_gen = cfg.gen_config;
  eval_gen.seed = derive_seed(cfg.seed, 2);
  const auto eval_set = generate(eval_gen, cfg.eval_set_size);
  CHECK_THAT(mean_greedy_cost(result.best_params, eval_set),
             Catch::Matchers::WithinAbs(result.best_eval_cost, 1e-9));
}

TEST_CASE("train log csv round trips") {
  TrainConfig cfg = tiny_train_config();
  const TrainResult result = routelab::train::train(cfg);
  testutil::TempDir dir;
  const std::string path = dir.file("log.csv");
  write_train_log(path, result.log);
  const TrainLog back = read_train_log(path);
  REQUIRE(back.records.size() == result.log.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    CHECK(back.records[i].epoch == result.log.records[i].epoch);
    CHECK(back.records[i].train_cost_mean == result.log.records[i].train_cost_mean);
    CHECK(back.records[i].eval_cost_mean == result.log.records[i].eval_cost_mean);
    CHECK(back.records[i].baseline_replaced == result.log.records[i].baseline_replaced);
  }
}

TEST_CASE("the full-budget configuration is expressible") {
  TrainConfig cfg;
  cfg.gen_config = preset_config("20C-2V");
  cfg.epochs = 100;
  cfg.instances_per_epoch = 1280000;
  cfg.batch_size = 512;
  cfg.learning_rate = 1e-4;
  cfg.model_config.embed_dim = 128;
  cfg.model_config.n_layers = 3;
  cfg.model_config.n_heads = 8;
  CHECK_NOTHROW(validate_train_config(resolve_train_config(cfg)));
}

TEST_CASE("train config validation") {
  TrainConfig cfg = tiny_train_config();
  cfg.ttest_alpha = 1.5;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
  cfg = tiny_train_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(cfg), ConfigError);
}
