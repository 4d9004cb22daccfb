#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "nst/fragmentation.hpp"
#include "nst/marchal.hpp"

using namespace nst;

namespace {

GrowthTree y_tree() {
  return GrowthTree(1.5, 2, {{0, 2}, {2, 1}, {2, 3}}, {0, 1, 3});
}

ColoredTree all_blue(GrowthTree t, double alpha_prime) {
  std::vector<uint8_t> eb(t.edge_count(), 1), vb(t.vertex_count(), 1);
  return ColoredTree(std::move(t), alpha_prime, std::move(eb), std::move(vb));
}

}  // namespace

TEST_CASE("mass partition basics", "[fragmentation]") {
  MassPartition s({0.2, 0.5, 0.3});
  REQUIRE(s.values() == std::vector<double>{0.5, 0.3, 0.2});
  REQUIRE_THAT(s.total(), Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE(s.positive_count() == 3);
  REQUIRE(MassPartition({0.0, 0.1}).positive_count() == 1);
  REQUIRE(MassPartition().size() == 0);
  REQUIRE_THROWS(MassPartition({-0.1, 0.5}));
  REQUIRE_THROWS(MassPartition({0.7, 0.7}));
}

TEST_CASE("components above a height", "[fragmentation]") {
  auto t = y_tree();
  t.finalize();
  auto c0 = height_components(t, 0, 0.0, 1.0);
  REQUIRE(c0 == std::vector<std::vector<VertexId>>{{1, 2, 3}});
  auto c1 = height_components(t, 0, 1.0, 1.0);
  REQUIRE(c1 == std::vector<std::vector<VertexId>>{{1}, {3}});
  REQUIRE(height_components(t, 0, 2.0, 1.0).empty());
  // halving the scale doubles every height
  REQUIRE(height_components(t, 0, 3.0, 0.5) == c1);
  REQUIRE(height_components(t, 0, 1.5, 0.5) == c0);
  REQUIRE_THROWS(height_components(t, 0, 1.0, 0.0));
  REQUIRE_THROWS(height_components(t, 0, -1.0, 1.0));
}

TEST_CASE("three-leaf profile by hand", "[fragmentation]") {
  auto t = y_tree();
  t.finalize();
  auto profile = frag_profile(t, 0, {0.0, 1.0, 2.0}, 1.0);
  REQUIRE(profile.size() == 3);
  REQUIRE(profile[0].masses.values() == std::vector<double>{2.0 / 3.0});
  REQUIRE(profile[1].masses.values() == std::vector<double>{1.0 / 3.0, 1.0 / 3.0});
  REQUIRE(profile[2].masses.size() == 0);
  REQUIRE_THROWS(frag_profile(t, 2, {0.0}, 1.0));  // root must be a leaf
}

TEST_CASE("whole tree at threshold zero", "[fragmentation]") {
  auto t = grow(1.5, 200, 4);
  t.finalize();
  auto profile = frag_profile(t, t.leaf_order()[0], {0.0}, 1.0);
  REQUIRE(profile[0].masses.size() == 1);
  REQUIRE(profile[0].masses.values()[0] == 200.0 / 201.0);
}

TEST_CASE("profiles refine as the threshold grows", "[fragmentation]") {
  auto t = grow(1.4, 300, 12);
  t.finalize();
  const VertexId root = t.leaf_order()[0];
  const std::vector<double> ts{0.0, 1.0, 2.0, 3.0, 5.0, 8.0};
  auto profile = frag_profile(t, root, ts, 1.0);
  for (size_t i = 1; i < ts.size(); ++i)
    REQUIRE(profile[i].masses.total() <= profile[i - 1].masses.total() + 1e-15);
  for (size_t i = 1; i < ts.size(); ++i) {
    auto coarse = height_components(t, root, ts[i - 1], 1.0);
    auto fine = height_components(t, root, ts[i], 1.0);
    for (const auto& f : fine) {
      int parents = 0;
      for (const auto& c : coarse)
        if (std::includes(c.begin(), c.end(), f.begin(), f.end())) ++parents;
      REQUIRE(parents == 1);
    }
  }
}

TEST_CASE("projection is identity on a fully kept tree", "[fragmentation]") {
  auto base = grow(1.5, 100, 3);
  auto ct = all_blue(std::move(base), 1.8);
  ct.finalize();
  const auto& t = ct.tree();
  std::vector<VertexId> everything;
  for (VertexId v = 0; v < t.vertex_count(); ++v) everything.push_back(v);
  REQUIRE(projected_mass(ct, everything) == 1.0);

  // one side of an edge carries exactly its own leaves
  const VertexId u = t.edges()[5].a, w = t.edges()[5].b;
  auto parents = bfs_parents(t, u);
  std::vector<VertexId> side;
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    VertexId p = v;
    while (p != u && parents[p] != u) p = parents[p];
    if (v != u && (p == w || v == w)) side.push_back(v);
  }
  uint32_t leaves_inside = 0;
  for (VertexId v : side)
    if (t.is_leaf(v)) ++leaves_inside;
  REQUIRE(projected_mass(ct, side) ==
          static_cast<double>(leaves_inside) / static_cast<double>(t.step() + 1));
}

TEST_CASE("four-leaf projections by hand", "[fragmentation]") {
  GrowthTree star(1.5, 3, {{0, 2}, {2, 1}, {2, 3}, {2, 4}}, {0, 1, 3, 4});
  ColoredTree ct(std::move(star), 1.8, {1, 1, 1, 0}, {1, 1, 1, 1, 0});
  ct.finalize();
  REQUIRE(projected_mass(ct, {0}) == 0.25);
  REQUIRE(projected_mass(ct, {1}) == 0.25);
  REQUIRE(projected_mass(ct, {3}) == 0.25);
  REQUIRE(projected_mass(ct, {2}) == 0.25);  // the dropped leaf lands on the junction
  REQUIRE(projected_mass(ct, {2, 3}) == 0.5);
  REQUIRE_THROWS(projected_mass(ct, {}));
  REQUIRE_THROWS(projected_mass(ct, {4}));     // not kept
  REQUIRE_THROWS(projected_mass(ct, {0, 0}));  // duplicate
  REQUIRE_THROWS(projected_mass(ct, {0, 1}));  // splits across the junction
}

TEST_CASE("projections over a partition sum to one", "[fragmentation]") {
  CoupledChain chain(1.5, 1.8, 300, 6);
  chain.run_to(300);
  chain.state().finalize();
  const auto& ct = chain.state();
  const auto& t = ct.tree();

  // split the kept subtree at its first branch vertex
  const std::vector<VertexId> blues = ct.blue_vertices();
  VertexId hub = kNoVertex;
  for (VertexId v : blues)
    if (ct.blue_degree(v) >= 3) {
      hub = v;
      break;
    }
  REQUIRE(hub != kNoVertex);
  std::set<VertexId> blue(blues.begin(), blues.end());
  std::set<VertexId> seen{hub};
  std::vector<std::vector<VertexId>> parts{{hub}};
  for (VertexId v : blues) {
    if (seen.count(v)) continue;
    std::vector<VertexId> comp;
    std::queue<VertexId> q;
    q.push(v);
    seen.insert(v);
    while (!q.empty()) {
      VertexId x = q.front();
      q.pop();
      comp.push_back(x);
      for (VertexId w : t.neighbors(x))
        if (blue.count(w) && !seen.count(w) && w != hub) {
          seen.insert(w);
          q.push(w);
        }
    }
    parts.push_back(std::move(comp));
  }
  REQUIRE(parts.size() >= 3);
  double total = 0.0;
  for (const auto& part : parts) {
    const double m = projected_mass(ct, part);
    REQUIRE(m >= 0.0);
    REQUIRE(m <= 1.0);
    total += m;
  }
  REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("size-biased order laws", "[fragmentation]") {
  auto rng = make_stream(11, 0, "frag-test");
  REQUIRE(size_biased_reorder(MassPartition({1.0, 0.0}), rng) ==
          std::vector<uint32_t>{0, 1});
  REQUIRE_THROWS(size_biased_reorder(MassPartition({0.0, 0.0}), rng));

  MassPartition s({0.5, 0.3, 0.2});
  const int draws = 30000;
  int first_is_0 = 0, order_012 = 0;
  for (int i = 0; i < draws; ++i) {
    auto order = size_biased_reorder(s, rng);
    if (order[0] == 0) ++first_is_0;
    if (order == std::vector<uint32_t>{0, 1, 2}) ++order_012;
  }
  const double sd1 = std::sqrt(draws * 0.5 * 0.5);
  const double sd2 = std::sqrt(draws * 0.3 * 0.7);
  REQUIRE(std::abs(first_is_0 - draws * 0.5) < 4.0 * sd1);
  REQUIRE(std::abs(order_012 - draws * 0.3) < 4.0 * sd2);
}

TEST_CASE("two fragments always survive extraction", "[fragmentation]") {
  auto rng = make_stream(13, 0, "frag-test");
  for (int i = 0; i < 200; ++i) {
    auto out = dissipative_extract(MassPartition({0.5, 0.5}), 1.5, 1.8, rng);
    REQUIRE(out.values() == std::vector<double>{0.5, 0.5});
  }
  // boundary threshold: anything past the second is dropped with certainty
  for (int i = 0; i < 200; ++i) {
    auto out = dissipative_extract(MassPartition({0.3, 0.3, 0.2, 0.2}), 1.5, 2.0, rng);
    REQUIRE(out.size() == 2);
  }
  REQUIRE(dissipative_extract(MassPartition({0.8}), 1.5, 1.8, rng).values() ==
          std::vector<double>{0.8});
  REQUIRE(dissipative_extract(MassPartition(), 1.5, 1.8, rng).size() == 0);
}

TEST_CASE("third fragment survival rate", "[fragmentation]") {
  auto rng = make_stream(17, 0, "frag-test");
  MassPartition s({0.4, 0.3, 0.3});
  const int draws = 20000;
  int kept3 = 0;
  double in_total = s.total();
  for (int i = 0; i < draws; ++i) {
    auto out = dissipative_extract(s, 1.5, 1.8, rng);
    REQUIRE(out.size() >= 2);
    REQUIRE(out.total() <= in_total + 1e-15);
    if (out.size() == 3) ++kept3;
  }
  // survival of the third draw is p(3,3) = 0.25 whatever the order
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  REQUIRE(std::abs(kept3 - draws * 0.25) < 4.0 * sd);
}

TEST_CASE("growth exponent diagnostic", "[fragmentation]") {
  auto report = malthus_diagnostic(1.5, 2.0, 5000, 20, 31);
  REQUIRE_THAT(report.target, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
  REQUIRE(report.checkpoints.front() == 1000);
  REQUIRE(report.checkpoints.back() == 5000);
  REQUIRE(report.replicas == 20);
  REQUIRE(report.stderr_ > 0.0);
  CAPTURE(report.mean_slope, report.stderr_);
  REQUIRE(std::abs(report.mean_slope - report.target) < 0.15);
  REQUIRE(report.mean_slope - 1.0 < 0.0);  // kept-leaf fraction decays
  REQUIRE_THROWS(malthus_diagnostic(1.5, 2.0, 1500, 20, 31));
  REQUIRE_THROWS(malthus_diagnostic(1.5, 2.0, 5000, 1, 31));
}
