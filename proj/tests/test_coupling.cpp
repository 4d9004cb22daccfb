#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "nst/coupling.hpp"
#include "nst/marchal.hpp"
#include "nst/shape.hpp"

using namespace nst;

TEST_CASE("acceptance probability, pinned values", "[coupling]") {
  AcceptanceTable t(1.5, 1.8);
  REQUIRE(t(5, 0) == 0.0);
  REQUIRE(t(5, 2) == 1.0);
  // (d'-1-a')(a-1) / ((d-1-a)(a'-1)) at d=5, d'=4: (2.2*0.5)/(2.5*0.8)
  REQUIRE_THAT(t(5, 4), Catch::Matchers::WithinAbs(0.3, 1e-15));
  REQUIRE_THAT(t(3, 3), Catch::Matchers::WithinAbs(0.25, 1e-15));

  AcceptanceTable remy(1.5, 2.0);
  REQUIRE(remy(3, 3) == 0.0);
  REQUIRE(remy(7, 3) == 0.0);
}

TEST_CASE("acceptance probability, admissible domain", "[coupling]") {
  AcceptanceTable t(1.5, 1.8);
  REQUIRE_THROWS(t(1, 0));
  REQUIRE_THROWS(t(4, 1));
  REQUIRE_THROWS(t(4, 5));
  REQUIRE_THROWS(AcceptanceTable(1.8, 1.5));
  REQUIRE_THROWS(AcceptanceTable(1.5, 1.5));
  REQUIRE_THROWS(AcceptanceTable(1.0, 1.5));
  REQUIRE_THROWS(AcceptanceTable(1.5, 2.1));

  for (uint32_t d = 2; d <= 12; ++d) {
    for (uint32_t dp : {0u, 2u, 3u, 4u, 5u, 6u}) {
      if (dp > d) continue;
      const double p = t(d, dp);
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
    }
  }
}

TEST_CASE("acceptance probability, monotonicity", "[coupling]") {
  // tighter second threshold can only reject more
  for (uint32_t d : {4u, 5u, 9u}) {
    for (uint32_t dp : {0u, 2u, 3u, 4u}) {
      double prev = 1.0;
      for (double ap : {1.6, 1.8, 2.0}) {
        const double p = AcceptanceTable(1.5, ap)(d, dp);
        REQUIRE(p <= prev + 1e-15);
        prev = p;
      }
    }
  }
  // thicker surviving degree can only help, away from the inherited d'=2 row
  AcceptanceTable t(1.5, 1.8);
  for (uint32_t d : {5u, 8u}) {
    double prev = t(d, 0);
    for (uint32_t dp = 3; dp <= d; ++dp) {
      const double p = t(d, dp);
      REQUIRE(p >= prev - 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("fresh coupled state", "[coupling]") {
  ColoredTree s(1.5, 1.8);
  REQUIRE(s.L() == 1);
  REQUIRE(s.blue_leaf_indices() == std::vector<uint32_t>{0, 1});
  REQUIRE(s.blue_edge_count() == 1);
  REQUIRE(s.blue_weight_gap() == 0.0);
  REQUIRE_NOTHROW(s.validate());
  REQUIRE_THAT(blue_step_probability(s), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("second leaf is always kept", "[coupling]") {
  for (uint64_t seed : {1u, 2u, 77u}) {
    auto trace = leaf_count_trace(1.3, 1.9, 30, seed);
    REQUIRE(trace.counts.size() == 30);
    REQUIRE(trace.counts[0] == 1);
    REQUIRE(trace.counts[1] == 2);  // only one item to pick at n=1 and it is blue
    for (size_t i = 1; i < trace.counts.size(); ++i) {
      const uint32_t inc = trace.counts[i] - trace.counts[i - 1];
      REQUIRE(inc <= 1);
    }
  }
  REQUIRE(leaf_count_trace(1.3, 1.9, 30, 5).counts ==
          leaf_count_trace(1.3, 1.9, 30, 5).counts);
}

TEST_CASE("invariants hold along a run", "[coupling]") {
  CoupledChain chain(1.5, 1.8, 300, 42);
  while (chain.state().tree().step() < 300) {
    chain.step();
    REQUIRE(std::abs(chain.state().blue_weight_gap()) <= 1e-9);
    REQUIRE_NOTHROW(blue_step_probability(chain.state()));  // dual computation agrees inside
  }
  REQUIRE_NOTHROW(chain.state().validate());
}

TEST_CASE("uncolored marginal matches the plain chain", "[coupling]") {
  auto plain = grow(1.5, 250, 77);
  CoupledChain chain(1.5, 1.8, 250, 77);
  chain.run_to(250);
  const auto& a = plain.edges();
  const auto& b = chain.tree().edges();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].a == b[i].a);
    REQUIRE(a[i].b == b[i].b);
  }
  REQUIRE(plain.leaf_order() == chain.tree().leaf_order());
}

TEST_CASE("binary second tree at the boundary", "[coupling]") {
  CoupledChain chain(1.5, 2.0, 500, 9);
  chain.run_to(500);
  const auto& s = chain.state();
  for (VertexId v : s.blue_vertices()) {
    const uint32_t d = s.blue_degree(v);
    REQUIRE((d == 1 || d == 3));
  }
}

TEST_CASE("smallest state with a red leaf, dual rate check", "[coupling]") {
  // three splits cannot make a red leaf; one rejected vertex attachment can
  GrowthTree t(1.5, 3, {{0, 2}, {2, 1}, {2, 3}, {2, 4}}, {0, 1, 3, 4});
  ColoredTree s(std::move(t), 1.8, {1, 1, 1, 0}, {1, 1, 1, 1, 0});
  REQUIRE(s.L() == 2);
  REQUIRE(s.blue_degree(2) == 3);
  const double p = blue_step_probability(s);
  // (L a' - 1)(a - 1) / ((a' - 1)(n a - 1)) = 2.6 * 0.5 / (0.8 * 3.5)
  REQUIRE_THAT(p, Catch::Matchers::WithinAbs(1.3 / 2.8, 1e-12));
}

TEST_CASE("bad colorings are rejected", "[coupling]") {
  GrowthTree y(1.5, 2, {{0, 2}, {2, 1}, {2, 3}}, {0, 1, 3});
  // degree-2 blue middle on a blue path: weight identity cannot balance
  REQUIRE_THROWS(ColoredTree(GrowthTree(y), 1.8, {1, 1, 0}, {1, 1, 1, 0}));
  // blue edge with a red endpoint
  REQUIRE_THROWS(ColoredTree(GrowthTree(y), 1.8, {1, 1, 1}, {1, 1, 1, 0}));
  // first two leaves must stay blue
  REQUIRE_THROWS(ColoredTree(GrowthTree(y), 1.8, {0, 0, 0}, {0, 0, 0, 0}));
}

TEST_CASE("law of the blue tree at four leaves", "[coupling]") {
  const double alpha = 1.3;
  const double alpha_prime = 1.6;
  const int replicas = 3000;
  std::map<std::string, int> counts;
  for (int r = 0; r < replicas; ++r) {
    CoupledChain chain(alpha, alpha_prime, 10000, 1000 + static_cast<uint64_t>(r));
    while (chain.state().L() + 1 < 4) chain.step();
    chain.state().finalize();
    counts[chain.state().blue_shape().code] += 1;
  }
  int total = 0;
  for (auto shape : enumerate_labeled_shapes(4)) {
    const double q = tree_probability(shape, alpha_prime);
    const int c = counts[shape.code];
    total += c;
    const double sd = std::sqrt(static_cast<double>(replicas) * q * (1.0 - q));
    REQUIRE(std::abs(c - replicas * q) <= 4.5 * sd);
  }
  REQUIRE(total == replicas);
}

TEST_CASE("boundary second tree never holds a star", "[coupling]") {
  const int replicas = 400;
  for (int r = 0; r < replicas; ++r) {
    CoupledChain chain(1.5, 2.0, 10000, 5000 + static_cast<uint64_t>(r));
    while (chain.state().L() + 1 < 4) chain.step();
    chain.state().finalize();
    for (uint32_t d : chain.state().blue_shape().internal_degrees) REQUIRE(d == 3);
  }
}
