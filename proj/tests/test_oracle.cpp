#include <catch2/catch_amalgamated.hpp>

#include "routelab/heuristics.hpp"
#include "routelab/instance_gen.hpp"
#include "routelab/oracle.hpp"
#include "support/test_util.hpp"

using namespace routelab;
using testutil::make_customer;
using testutil::make_instance;

TEST_CASE("single customer has the single solution") {
  const Instance inst = make_instance({0, 0}, {make_customer(1, 3, 4)}, 1, 10.0);
  const auto result = oracle::solve_exact(inst);
  CHECK(result.optimal_cost == 10.0);
  CHECK(result.best.routes == Routes{{1}});
  CHECK(result.nodes_explored > 0);
}

TEST_CASE("symmetric pair splits one customer per vehicle") {
  const Instance inst = make_instance(
      {0, 0}, {make_customer(1, 1, 0, 0.0), make_customer(2, -1, 0, 0.0)}, 2, 10.0);
  const auto result = oracle::solve_exact(inst);
  CHECK(result.optimal_cost == 4.0);
  // lexicographically smallest route set among the cost ties
  CHECK(result.best.routes == Routes{{1}, {2}});
}

TEST_CASE("oracle refuses oversized instances") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.seed = 8;
  const Instance inst = generate(cfg, 1)[0];
  CHECK_THROWS_AS(oracle::solve_exact(inst), InvalidArgumentError);
}

TEST_CASE("node limit raises a partial-result error carrying the incumbent") {
  GenConfig cfg = preset_config("6C-2V");
  cfg.seed = 4;
  const Instance inst = generate(cfg, 1)[0];
  const auto full = oracle::solve_exact(inst);
  CHECK_THROWS_AS(oracle::solve_exact(inst, 10), oracle::NodeLimitError);
  try {
    oracle::solve_exact(inst, full.nodes_explored / 2);
    FAIL("expected NodeLimitError");
  } catch (const oracle::NodeLimitError& e) {
    if (e.has_incumbent()) {
      CHECK(e.incumbent().optimal_cost >= full.optimal_cost - 1e-9);
    }
  }
  CHECK_THROWS_AS(oracle::solve_exact(inst, 0), InvalidArgumentError);
}

TEST_CASE("permutation invariance and idempotence") {
  GenConfig cfg = preset_config("6C-2V");
  cfg.seed = 12;
  const auto instances = generate(cfg, 10);
  Rng rng(55);
  for (const Instance& inst : instances) {
    const double cost1 = oracle::solve_exact(inst).optimal_cost;
    const double cost2 = oracle::solve_exact(inst).optimal_cost;
    CHECK(cost1 == cost2);

    // relabel customers by a random permutation
    const int n = inst.n_customers();
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = rng.uniform_int(i + 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Instance shuffled = inst;
    for (int i = 0; i < n; ++i) {
      shuffled.customers[static_cast<std::size_t>(i)] =
          inst.customers[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      shuffled.customers[static_cast<std::size_t>(i)].id = i + 1;
    }
    CHECK_THAT(oracle::solve_exact(shuffled).optimal_cost,
               Catch::Matchers::WithinAbs(cost1, 1e-9));
  }
}

TEST_CASE("independent cost path agrees with the problem-core evaluator") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.seed = 23;
  const auto instances = generate(cfg, 100);
  Rng rng(77);
  int trials = 0;
  for (const Instance& inst : instances) {
    for (int k = 0; k < 10; ++k) {
      const Routes routes = testutil::random_feasible_routes(inst, rng);
      const Solution sol = evaluate_solution(inst, routes);
      const CostBreakdown other = oracle::evaluate_routes(inst, routes);
      CHECK_THAT(other.travel, Catch::Matchers::WithinAbs(sol.cost.travel, 1e-12));
      CHECK_THAT(other.penalty, Catch::Matchers::WithinAbs(sol.cost.penalty, 1e-12));
      CHECK_THAT(other.total, Catch::Matchers::WithinAbs(sol.cost.total, 1e-12));
      ++trials;
    }
  }
  CHECK(trials == 1000);
}

TEST_CASE("oracle lower-bounds the heuristics on tiny instances") {
  GenConfig cfg = preset_config("6C-2V");
  cfg.seed = 99;
  const auto instances = generate(cfg, 10);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const double optimum = oracle::solve_exact(inst).optimal_cost;
    const double ils = heuristics::solve_ils(inst, heuristics::ils1_config(i)).cost.total;
    const double nn = heuristics::nearest_neighbor_solution(inst).cost.total;
    CHECK(ils >= optimum - 1e-9);
    CHECK(nn >= optimum - 1e-9);
  }
}

TEST_CASE("oracle result passes the validator and best matches optimal_cost") {
  GenConfig cfg = preset_config("6C-2V");
  cfg.seed = 1011;
  for (const Instance& inst : generate(cfg, 20)) {
    const auto result = oracle::solve_exact(inst);
    const Solution check = evaluate_solution(inst, result.best.routes);
    CHECK(check.cost.total == result.optimal_cost);
  }
}
