#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nst/rng.hpp"
#include "nst/tree.hpp"
#include "nst/weight_index.hpp"

using namespace nst;

namespace {

GrowthTree star4() {
  GrowthTree t(1.5);
  t.split_edge(0);
  t.attach_leaf(2);
  t.finalize();
  return t;
}

}  // namespace

TEST_CASE("item weights and totals", "[weight_index]") {
  WeightIndex w(1.5);
  REQUIRE(w.total() == 0.0);
  w.register_edge(0);
  REQUIRE(w.total() == Catch::Approx(0.5));
  w.register_branch_vertex(2);
  REQUIRE(w.total() == Catch::Approx(1.0));  // degree-3 weight 2 - alpha
  w.bump_branch_vertex(2);
  REQUIRE(w.total() == Catch::Approx(2.0));  // degree-4 weight 3 - alpha
  REQUIRE(w.item_count() == 2);
  REQUIRE(w.weight(0) == Catch::Approx(0.5));
  REQUIRE(w.weight(1) == Catch::Approx(1.5));
  REQUIRE(w.at(0).is_edge);
  REQUIRE(w.at(0).id == 0);
  REQUIRE_FALSE(w.at(1).is_edge);
  REQUIRE(w.at(1).id == 2);
}

TEST_CASE("for_tree reproduces the degree formula", "[weight_index]") {
  auto t = star4();
  auto w = WeightIndex::for_tree(t);
  // 4 edges at 0.5 plus one degree-4 vertex at 1.5
  REQUIRE(w.total() == Catch::Approx(3.5));
  REQUIRE(w.total() == Catch::Approx(3 * 1.5 - 1.0));  // n*alpha - 1 at n = 3
  REQUIRE(w.item_count() == 5);
}

TEST_CASE("error paths", "[weight_index]") {
  REQUIRE_THROWS(WeightIndex(1.0));
  REQUIRE_THROWS(WeightIndex(2.1));
  WeightIndex w(1.5);
  RngStream rng(1, "select");
  REQUIRE_THROWS(w.sample(rng));  // empty
  w.register_branch_vertex(0);
  REQUIRE_THROWS(w.register_branch_vertex(0));
  REQUIRE_THROWS(w.bump_branch_vertex(9));
}

TEST_CASE("zero weight items are never selected", "[weight_index]") {
  WeightIndex w(2.0);  // degree-3 vertices carry weight 0
  w.register_edge(0);
  w.register_branch_vertex(5);
  w.register_edge(1);
  RngStream rng(99, "select");
  int first = 0, second = 0;
  for (int i = 0; i < 20000; ++i) {
    auto p = w.sample(rng);
    REQUIRE(p.is_edge);
    (p.id == 0 ? first : second)++;
  }
  REQUIRE(first > 0);
  REQUIRE(second > 0);
  // equal weights: split should be near even (sd of the difference is sqrt(n))
  REQUIRE(std::abs(first - second) < 4 * std::sqrt(20000.0));
}

TEST_CASE("sampling follows the weights", "[weight_index]") {
  auto t = star4();
  auto w = WeightIndex::for_tree(t);
  RngStream rng(7, "select");
  const int trials = 40000;
  int vertex_hits = 0;
  for (int i = 0; i < trials; ++i)
    if (!w.sample(rng).is_edge) ++vertex_hits;
  const double p = 1.5 / 3.5;
  const double se = std::sqrt(p * (1 - p) / trials);
  REQUIRE(std::abs(vertex_hits / double(trials) - p) < 4 * se);
}

TEST_CASE("growth across capacity doublings keeps totals exact", "[weight_index]") {
  WeightIndex w(1.5, 8);
  for (std::uint32_t i = 0; i < 5000; ++i) w.register_edge(i);
  REQUIRE(w.total() == Catch::Approx(2500.0).epsilon(1e-12));
  REQUIRE(std::abs(w.total() - w.recompute_total()) < 1e-9);
  for (VertexId v = 0; v < 500; ++v) {
    w.register_branch_vertex(v);
    w.bump_branch_vertex(v);
  }
  REQUIRE(w.total() == Catch::Approx(2500.0 + 500 * 1.5).epsilon(1e-12));
  w.rebuild();
  REQUIRE(std::abs(w.total() - w.recompute_total()) < 1e-9);
}

TEST_CASE("single item sampling always returns it", "[weight_index]") {
  WeightIndex w(1.5);
  w.register_edge(42);
  RngStream rng(3, "select");
  for (int i = 0; i < 100; ++i) {
    auto p = w.sample(rng);
    REQUIRE(p.is_edge);
    REQUIRE(p.id == 42);
  }
}
