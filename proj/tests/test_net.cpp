#include <catch_amalgamated.hpp>

#include "mcdode/net.hpp"
#include "mcdode/scenarios.hpp"
#include "test_support.hpp"

using namespace mcdode;

TEST_CASE("seven-link scenario builds with frozen index maps") {
  const Network net = test_support::small7();
  CHECK(net.num_links() == 7);
  CHECK(net.num_paths() == 3);
  CHECK(net.num_od() == 1);
  CHECK(net.num_classes() == 2);
  CHECK(net.links[net.link_index_of_id.at(1)].is_connector);
  CHECK(net.links[net.link_index_of_id.at(7)].is_connector);

  // id -> index -> id round trip
  for (const auto &[id, idx] : net.link_index_of_id)
    CHECK(net.links[idx].id == id);
}

TEST_CASE("two-link chain builds") {
  const Network net = test_support::two_link();
  CHECK(net.num_links() == 2);
  CHECK(net.num_paths() == 1);
}

TEST_CASE("invalid configs are rejected") {
  nlohmann::json doc = small7_scenario();

  SECTION("OD pair without paths") {
    doc["paths"] = nlohmann::json::array();
    CHECK_THROWS_AS(build_network(parse_scenario(doc)),
                    std::invalid_argument);
  }
  SECTION("dangling link reference") {
    doc["paths"][0]["links"] = {1, 2, 99, 7};
    CHECK_THROWS_AS(build_network(parse_scenario(doc)),
                    std::invalid_argument);
  }
  SECTION("disconnected path") {
    doc["paths"][0]["links"] = {1, 3, 7};  // link 3 starts elsewhere
    CHECK_THROWS_AS(build_network(parse_scenario(doc)),
                    std::invalid_argument);
  }
  SECTION("duplicate link id") {
    doc["links"][1]["id"] = 1;
    CHECK_THROWS_AS(build_network(parse_scenario(doc)),
                    std::invalid_argument);
  }
  SECTION("interval not a multiple of the loading step") {
    doc["grid"]["interval_length"] = 902;
    CHECK_THROWS_AS(parse_scenario(doc), std::invalid_argument);
  }
}

TEST_CASE("interval_of half-open convention") {
  TimeGrid grid{5.0, 900.0, 10};
  CHECK(interval_of(0.0, grid) == 0);
  CHECK(interval_of(899.9, grid) == 0);
  CHECK(interval_of(900.0, grid) == 1);
  CHECK_THROWS_AS(interval_of(grid.horizon(), grid), std::out_of_range);
  CHECK_THROWS_AS(interval_of(-1.0, grid), std::out_of_range);
}

TEST_CASE("interval_of is monotone and surjective") {
  TimeGrid grid{5.0, 900.0, 10};
  int prev = 0;
  std::set<int> seen;
  for (double t = 0.0; t < grid.horizon(); t += 37.0) {
    const int h = interval_of(t, grid);
    CHECK(h >= prev);
    prev = h;
    seen.insert(h);
  }
  CHECK(seen.size() == 10);
}
