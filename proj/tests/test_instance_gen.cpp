#include <catch2/catch_amalgamated.hpp>

#include "routelab/csv.hpp"
#include "routelab/instance_gen.hpp"
#include "routelab/serialize.hpp"
#include "support/test_util.hpp"

using namespace routelab;

TEST_CASE("presets follow the experiment scales") {
  const GenConfig small = preset_config("20C-2V");
  CHECK(small.n_customers == 20);
  CHECK(small.fleet_size == 2);
  CHECK(small.capacity == 60.0);
  CHECK(small.window_horizon == 10.0);
  CHECK(small.demand_max == 10.0);

  const GenConfig medium = preset_config("50C-4V");
  CHECK(medium.capacity == 150.0);
  CHECK(medium.window_horizon == 20.0);
  CHECK(medium.demand_max == 20.0);

  const GenConfig large = preset_config("100C-3V");
  CHECK(large.capacity == 300.0);
  CHECK(large.window_horizon == 40.0);
  CHECK(large.demand_max == 15.0);

  const GenConfig xl = preset_config("150C-5V");
  CHECK(xl.n_customers == 150);
  CHECK(xl.capacity == 180.0);
  CHECK(xl.window_horizon == 60.0);
  REQUIRE(xl.window_length.has_value());
  CHECK(*xl.window_length == 20.0);
  CHECK(xl.alpha_range.lo == 0.1);
  CHECK(xl.beta_range.lo == 0.5);

  CHECK_THROWS_AS(preset_config("7C-9V"), ConfigError);
}

TEST_CASE("generated instances respect their preset") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.seed = 2024;
  const auto instances = generate(cfg, 50);
  REQUIRE(instances.size() == 50);
  for (const Instance& inst : instances) {
    REQUIRE(inst.n_customers() == 20);
    CHECK(inst.fleet_size == 2);
    CHECK(inst.capacity == 60.0);
    CHECK(inst.depot.x >= 0.0);
    CHECK(inst.depot.x <= 10.0);
    for (const Customer& c : inst.customers) {
      CHECK(c.coord.x >= 0.0);
      CHECK(c.coord.x <= 10.0);
      CHECK(c.coord.y >= 0.0);
      CHECK(c.coord.y <= 10.0);
      CHECK(c.demand > 0.0);
      CHECK(c.demand <= 10.0);
      CHECK(c.window_open <= c.window_close);
      CHECK(c.window_close <= 10.0);
      CHECK(c.early_coeff >= 0.0);
      CHECK(c.early_coeff <= 0.2);
      CHECK(c.late_coeff >= 0.0);
      CHECK(c.late_coeff <= 1.0);
    }
    CHECK_NOTHROW(validate_instance(inst));
  }
}

TEST_CASE("50C-4V total demand stays within the fleet budget") {
  GenConfig cfg = preset_config("50C-4V");
  cfg.seed = 77;
  for (const Instance& inst : generate(cfg, 30)) {
    CHECK(inst.total_demand() <= 600.0);
  }
}

TEST_CASE("150C-5V windows have fixed length and constant coefficients") {
  GenConfig cfg = preset_config("150C-5V");
  cfg.seed = 15;
  const Instance inst = generate(cfg, 1)[0];
  for (const Customer& c : inst.customers) {
    CHECK_THAT(c.window_close - c.window_open, Catch::Matchers::WithinAbs(20.0, 1e-12));
    CHECK(c.window_close <= 60.0);
    CHECK(c.early_coeff == 0.1);
    CHECK(c.late_coeff == 0.5);
  }
}

TEST_CASE("same seed produces byte-identical files") {
  GenConfig cfg = preset_config("10C-2V");
  cfg.seed = 999;
  testutil::TempDir dir;
  const std::string a = dir.file("a.jsonl");
  const std::string b = dir.file("b.jsonl");
  write_instances(a, generate(cfg, 25));
  write_instances(b, generate(cfg, 25));
  CHECK(csv::read_file(a) == csv::read_file(b));

  // prefix stability: growing the count keeps earlier instances unchanged
  const auto few = generate(cfg, 5);
  const auto more = generate(cfg, 25);
  CHECK(instances_to_string(few) ==
        instances_to_string({more.begin(), more.begin() + 5}));
}

TEST_CASE("empirical marginals match the sampling distributions") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.seed = 31415;
  const auto instances = generate(cfg, 500);  // 10^4 customers
  double coord_sum = 0.0;
  double demand_sum = 0.0;
  std::size_t count = 0;
  for (const Instance& inst : instances) {
    for (const Customer& c : inst.customers) {
      coord_sum += 0.5 * (c.coord.x + c.coord.y);
      demand_sum += c.demand;
      ++count;
    }
  }
  REQUIRE(count == 10000);
  const double coord_mean = coord_sum / static_cast<double>(count);
  const double demand_mean = demand_sum / static_cast<double>(count);
  CHECK_THAT(coord_mean, Catch::Matchers::WithinAbs(5.0, 0.15));
  CHECK(std::abs(demand_mean - 5.0) < 0.05 * 5.0);
}

TEST_CASE("unsatisfiable feasibility exhausts the retry budget") {
  GenConfig cfg;
  cfg.n_customers = 10;
  cfg.fleet_size = 1;
  cfg.capacity = 5.0;
  cfg.demand_max = 10.0;
  cfg.window_horizon = 10.0;
  cfg.seed = 1;
  CHECK_THROWS_AS(generate(cfg, 1, /*retry_budget=*/2000), GenerationError);
}

TEST_CASE("config validation") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.n_customers = 0;
  CHECK_THROWS_AS(generate(cfg, 1), ConfigError);
  cfg = preset_config("20C-2V");
  cfg.window_length = 15.0;  // longer than the horizon
  CHECK_THROWS_AS(generate(cfg, 1), ConfigError);
}
