#include <catch2/catch_amalgamated.hpp>

#include "nst/marchal.hpp"
#include "nst/serialize.hpp"

using namespace nst;

TEST_CASE("single edge golden bytes", "[serialize]") {
  GrowthTree t(2.0);
  REQUIRE(serialize(t) == "{\"alpha\":\"2\",\"edges\":[[0,1]],\"leaf_order\":[0,1],\"n\":1}\n");
}

TEST_CASE("round trip is byte identical", "[serialize]") {
  for (double alpha : {1.3, 1.5, 2.0}) {
    auto t = grow(alpha, 80, 11);
    const std::string doc = serialize(t);
    auto back = deserialize(doc);
    REQUIRE_FALSE(back.has_colors);
    REQUIRE(back.tree.alpha() == alpha);  // bit-exact through the decimal string
    REQUIRE(back.tree.step() == t.step());
    REQUIRE(back.tree.leaf_order() == t.leaf_order());
    REQUIRE(serialize(back.tree) == doc);
  }
}

TEST_CASE("colored round trip preserves colors", "[serialize]") {
  CoupledChain chain(1.5, 1.8, 120, 3);
  chain.run_to(120);
  const std::string doc = serialize(chain.state());
  auto back = deserialize(doc);
  REQUIRE(back.has_colors);
  ColoredTree colored = to_colored(std::move(back), 1.8);
  REQUIRE(colored.blue_leaf_indices() == chain.state().blue_leaf_indices());
  REQUIRE(colored.blue_edge_count() == chain.state().blue_edge_count());
  REQUIRE(serialize(colored) == doc);
}

TEST_CASE("parse failures carry location", "[serialize]") {
  REQUIRE_THROWS_WITH(deserialize("{\"alpha\": "), Catch::Matchers::ContainsSubstring("parse"));
  REQUIRE_THROWS(deserialize("[1,2,3]"));
}

TEST_CASE("semantic failures are rejected on load", "[serialize]") {
  // missing field
  REQUIRE_THROWS(deserialize("{\"alpha\":\"2\",\"edges\":[[0,1]],\"n\":1}\n"));
  // degree-2 vertex
  REQUIRE_THROWS(deserialize(
      "{\"alpha\":\"1.5\",\"edges\":[[0,1],[1,2]],\"leaf_order\":[0,2],\"n\":1}\n"));
  // alpha out of range
  REQUIRE_THROWS(deserialize("{\"alpha\":\"2.5\",\"edges\":[[0,1]],\"leaf_order\":[0,1],\"n\":1}\n"));
  // bad alpha string
  REQUIRE_THROWS(deserialize("{\"alpha\":\"x\",\"edges\":[[0,1]],\"leaf_order\":[0,1],\"n\":1}\n"));
  // colors must come in pairs
  REQUIRE_THROWS(deserialize(
      "{\"alpha\":\"2\",\"edge_colors\":{\"0\":\"blue\"},\"edges\":[[0,1]],\"leaf_order\":[0,1],\"n\":1}\n"));
  // unknown color word
  REQUIRE_THROWS(deserialize(
      "{\"alpha\":\"2\",\"edge_colors\":{\"0\":\"teal\"},\"edges\":[[0,1]],\"leaf_order\":[0,1],"
      "\"n\":1,\"vertex_colors\":{\"0\":\"blue\",\"1\":\"blue\"}}\n"));
  // incomplete color map
  REQUIRE_THROWS(deserialize(
      "{\"alpha\":\"2\",\"edge_colors\":{\"0\":\"blue\"},\"edges\":[[0,1]],\"leaf_order\":[0,1],"
      "\"n\":1,\"vertex_colors\":{\"0\":\"blue\"}}\n"));
}

TEST_CASE("to_colored validates the colored invariants", "[serialize]") {
  // blue path with a degree-2 blue middle: breaks the blue weight identity
  const std::string bad =
      "{\"alpha\":\"1.5\",\"edge_colors\":{\"0\":\"blue\",\"1\":\"blue\",\"2\":\"red\"},"
      "\"edges\":[[0,2],[2,1],[2,3]],\"leaf_order\":[0,1,3],\"n\":2,"
      "\"vertex_colors\":{\"0\":\"blue\",\"1\":\"blue\",\"2\":\"blue\",\"3\":\"red\"}}\n";
  auto doc = deserialize(bad);
  REQUIRE(doc.has_colors);
  REQUIRE_THROWS(to_colored(std::move(doc), 1.8));

  auto plain = deserialize("{\"alpha\":\"2\",\"edges\":[[0,1]],\"leaf_order\":[0,1],\"n\":1}\n");
  REQUIRE_THROWS(to_colored(std::move(plain), 2.0));  // no colors to lift
}
