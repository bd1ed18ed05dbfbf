#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "routelab/csv.hpp"
#include "routelab/instance_gen.hpp"
#include "routelab/serialize.hpp"
#include "support/test_util.hpp"

using namespace routelab;

TEST_CASE("instance files round trip") {
  GenConfig cfg = preset_config("20C-2V");
  cfg.seed = 123;
  const auto instances = generate(cfg, 100);
  testutil::TempDir dir;
  const std::string path = dir.file("instances.jsonl");
  write_instances(path, instances);
  const auto back = read_instances(path);
  REQUIRE(back.size() == instances.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].depot == instances[i].depot);
    CHECK(back[i].capacity == instances[i].capacity);
    CHECK(back[i].fleet_size == instances[i].fleet_size);
    REQUIRE(back[i].n_customers() == instances[i].n_customers());
    for (int id = 1; id <= back[i].n_customers(); ++id) {
      CHECK(back[i].customer(id).coord == instances[i].customer(id).coord);
      CHECK(back[i].customer(id).demand == instances[i].customer(id).demand);
      CHECK(back[i].customer(id).window_open == instances[i].customer(id).window_open);
      CHECK(back[i].customer(id).window_close == instances[i].customer(id).window_close);
      CHECK(back[i].customer(id).early_coeff == instances[i].customer(id).early_coeff);
      CHECK(back[i].customer(id).late_coeff == instances[i].customer(id).late_coeff);
    }
  }
  // write o read is the identity on bytes too
  const std::string rewritten = dir.file("again.jsonl");
  write_instances(rewritten, back);
  CHECK(csv::read_file(path) == csv::read_file(rewritten));
}

TEST_CASE("empty file reads as empty list") {
  testutil::TempDir dir;
  const std::string path = dir.file("empty.jsonl");
  csv::write_file(path, "");
  CHECK(read_instances(path).empty());
}

TEST_CASE("truncated record errors name the line") {
  GenConfig cfg = preset_config("6C-2V");
  cfg.seed = 5;
  const auto instances = generate(cfg, 3);
  testutil::TempDir dir;
  const std::string path = dir.file("instances.jsonl");
  write_instances(path, instances);
  std::string content = csv::read_file(path);
  // chop bytes off the second record
  std::size_t first_nl = content.find('\n');
  std::size_t second_nl = content.find('\n', first_nl + 1);
  content = content.substr(0, second_nl - 25) + "\n" + content.substr(second_nl + 1);
  csv::write_file(path, content);
  try {
    read_instances(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("unknown fields are rejected") {
  testutil::TempDir dir;
  const std::string path = dir.file("bad.jsonl");
  csv::write_file(path,
                  R"({"depot":[0,0],"capacity":10,"fleet_size":1,"customers":[],"extra":1})"
                  "\n");
  CHECK_THROWS_AS(read_instances(path), ParseError);
  csv::write_file(
      path,
      R"({"depot":[0,0],"capacity":10,"fleet_size":1,"customers":[{"id":1,"x":1,"y":1,"demand":1,"e":0,"l":5,"alpha":0,"beta":0,"color":"red"}]})"
      "\n");
  CHECK_THROWS_AS(read_instances(path), ParseError);
}

TEST_CASE("missing fields are rejected") {
  testutil::TempDir dir;
  const std::string path = dir.file("bad.jsonl");
  csv::write_file(path, R"({"depot":[0,0],"capacity":10,"customers":[]})"
                        "\n");
  CHECK_THROWS_WITH(read_instances(path), Catch::Matchers::ContainsSubstring("fleet_size"));
}

TEST_CASE("solution records round trip and reject unknown fields") {
  const Instance inst = testutil::make_instance(
      {0, 0}, {testutil::make_customer(1, 3, 4), testutil::make_customer(2, 1, 1)}, 2, 10.0);
  const Solution sol = evaluate_solution(inst, {{1}, {2}});
  testutil::TempDir dir;
  const std::string path = dir.file("solutions.jsonl");
  write_solutions(path, {sol});
  const auto back = read_solutions(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].routes == sol.routes);
  CHECK(back[0].cost.travel == sol.cost.travel);
  CHECK(back[0].cost.penalty == sol.cost.penalty);
  CHECK(back[0].cost.total == sol.cost.total);

  csv::write_file(path, R"({"routes":[[1]],"travel":1,"penalty":0,"total":1,"note":"hi"})"
                        "\n");
  CHECK_THROWS_AS(read_solutions(path), ParseError);
}

TEST_CASE("malformed json names the line") {
  testutil::TempDir dir;
  const std::string path = dir.file("bad.jsonl");
  csv::write_file(path,
                  R"({"depot":[0,0],"capacity":10,"fleet_size":1,"customers":[]})"
                  "\n{oops\n");
  try {
    read_instances(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
