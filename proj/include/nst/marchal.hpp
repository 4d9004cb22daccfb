#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nst/rng.hpp"
#include "nst/shape.hpp"
#include "nst/tree.hpp"
#include "nst/weight_index.hpp"

namespace nst {

// Total item weight recomputed from degrees; equals n*alpha - 1 after step n.
inline double total_weight(const GrowthTree& t) {
  const double alpha = t.alpha();
  long double s = static_cast<long double>(t.edge_count()) * (alpha - 1.0);
  for (VertexId v = 0; v < t.vertex_count(); ++v) {
    const std::uint32_t d = t.degree(v);
    if (d >= 3) s += (d - 1.0) - alpha;
  }
  return static_cast<double>(s);
}

struct StepRecord {
  std::uint32_t step;          // index of the leaf attached by this step
  bool edge_selected;
  std::uint32_t item_id;       // selected edge id or vertex id
  std::uint32_t degree_before; // 2 for an edge split, full degree for a vertex
  VertexId middle;             // kNoVertex for the vertex case
  VertexId leaf;
};

// One growth move: pick an edge w.p. (alpha-1)/(n*alpha-1) each or a branch
// vertex of degree d w.p. (d-1-alpha)/(n*alpha-1); split or attach.
inline StepRecord marchal_step(GrowthTree& tree, WeightIndex& weights, RngStream& select) {
  const auto pick = weights.sample(select);
  StepRecord rec{};
  rec.step = tree.step() + 1;
  rec.edge_selected = pick.is_edge;
  rec.item_id = pick.id;
  if (pick.is_edge) {
    rec.degree_before = 2;
    const auto split = tree.split_edge(pick.id);
    rec.middle = split.middle;
    rec.leaf = split.leaf;
    weights.register_edge(split.edge_mid_b);
    weights.register_edge(split.edge_mid_leaf);
    weights.register_branch_vertex(split.middle);
  } else {
    rec.degree_before = tree.degree(pick.id);
    rec.middle = kNoVertex;
    rec.leaf = tree.attach_leaf(pick.id);
    weights.register_edge(static_cast<std::uint32_t>(tree.edge_count() - 1));
    weights.bump_branch_vertex(pick.id);
  }
  return rec;
}

// Drift policy shared by the plain and colored chains: every 2^16 steps
// rebuild the prefix sums from raw weights and check the running total
// against n*alpha-1.
inline constexpr std::uint32_t kDriftCheckPeriod = 1u << 16;
inline constexpr double kWeightTol = 1e-9;

inline void check_weight_invariant(const GrowthTree& tree, WeightIndex& weights) {
  weights.rebuild();
  const double expect = tree.step() * tree.alpha() - 1.0;
  const double got = weights.recompute_total();
  if (std::abs(got - expect) > kWeightTol * expect)
    throw std::runtime_error("weight invariant violated at step " + std::to_string(tree.step()) +
                             ": total " + std::to_string(got) + " vs " + std::to_string(expect));
}

inline GrowthTree grow(double alpha, std::uint32_t n, RngStream& select) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  GrowthTree tree(alpha);
  tree.reserve(n);
  WeightIndex weights(alpha, 3 * std::size_t{n} + 8);
  weights.register_edge(0);
  while (tree.step() < n) {
    marchal_step(tree, weights, select);
    if (tree.step() % kDriftCheckPeriod == 0) check_weight_invariant(tree, weights);
  }
  check_weight_invariant(tree, weights);
  return tree;
}

inline GrowthTree grow(double alpha, std::uint32_t n, std::uint64_t seed,
                       std::uint64_t replica = 0) {
  RngStream select = make_stream(seed, replica, kSelectLabel);
  return grow(alpha, n, select);
}

// Graph distance between the two starting leaves, maintained across growth
// steps without walking the tree. A split lengthens the 0-1 path exactly when
// the split edge lies on it; the rewritten edge keeps its id and its flag,
// the half toward the old endpoint inherits the flag, leaf edges never join.
class EndpointDistanceTracker {
 public:
  EndpointDistanceTracker() : on_path_{true}, distance_(1) {}

  void observe(const StepRecord& rec) {
    if (rec.edge_selected) {
      const bool on = on_path_[rec.item_id];
      on_path_.push_back(on);   // half from the middle to the old endpoint
      on_path_.push_back(false);
      if (on) ++distance_;
    } else {
      on_path_.push_back(false);
    }
  }

  std::uint64_t distance() const noexcept { return distance_; }

 private:
  std::vector<bool> on_path_;  // indexed by edge id
  std::uint64_t distance_;
};

// distance(A_0, A_1) in T(n) at each requested step; checkpoints ascending, >= 1
inline std::vector<std::uint64_t> endpoint_distance_trace(
    double alpha, const std::vector<std::uint32_t>& checkpoints, std::uint64_t seed,
    std::uint64_t replica = 0) {
  if (checkpoints.empty()) throw std::invalid_argument("no checkpoints");
  for (size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw std::invalid_argument("checkpoints must be ascending and >= 1");
  }
  RngStream select = make_stream(seed, replica, kSelectLabel);
  GrowthTree tree(alpha);
  tree.reserve(checkpoints.back());
  WeightIndex weights(alpha, 3 * std::size_t{checkpoints.back()} + 8);
  weights.register_edge(0);
  EndpointDistanceTracker tracker;
  std::vector<std::uint64_t> out;
  out.reserve(checkpoints.size());
  size_t next = 0;
  while (next < checkpoints.size() && checkpoints[next] == tree.step()) {
    out.push_back(tracker.distance());
    ++next;
  }
  while (next < checkpoints.size()) {
    tracker.observe(marchal_step(tree, weights, select));
    if (tree.step() % kDriftCheckPeriod == 0) check_weight_invariant(tree, weights);
    if (tree.step() == checkpoints[next]) {
      out.push_back(tracker.distance());
      ++next;
    }
  }
  return out;
}

// log of p_k = |(alpha-1)(alpha-2)...(alpha-k+2)|; -inf when a factor is 0.
inline double log_degree_weight(std::uint32_t k, double alpha) {
  if (k == 1) return 0.0;
  if (k == 2) throw std::invalid_argument("degree-2 vertex has no chain weight");
  double s = 0.0;
  for (std::uint32_t j = 1; j + 1 < k; ++j) {
    const double f = std::abs(alpha - j);
    if (f == 0.0) return -std::numeric_limits<double>::infinity();
    s += std::log(f);
  }
  return s;
}

// P(chain at step n equals this labeled shape) = prod_v p_deg(v) / prod_{i=1}^{n-1} (i*alpha-1).
inline double tree_probability(const LabeledShape& shape, double alpha) {
  if (!(alpha > 1.0) || !(alpha <= 2.0)) throw std::invalid_argument("alpha must be in (1,2]");
  if (shape.leaf_count < 2) throw std::invalid_argument("shape needs >= 2 leaves");
  for (std::uint32_t d : shape.internal_degrees)
    if (d == 2) throw std::invalid_argument("degree-2 vertex in shape");
  double logp = 0.0;
  for (std::uint32_t d : shape.internal_degrees) logp += log_degree_weight(d, alpha);
  const std::uint32_t n = shape.leaf_count - 1;
  for (std::uint32_t i = 1; i < n; ++i) logp -= std::log(i * alpha - 1.0);
  return std::exp(logp);
}

struct ShapeFrequencyRow {
  LabeledShape shape;
  double probability;   // exact
  std::uint64_t count;  // observed
  double frequency;
  double z;             // against binomial stderr
};

struct DistributionReport {
  std::vector<ShapeFrequencyRow> rows;
  double probability_sum = 0.0;
  std::uint64_t replicas = 0;
  double max_abs_z = 0.0;
};

// Empirical shape law from `grow` vs the exact formula, per enumerated shape.
inline DistributionReport distribution_check(double alpha, int num_leaves, std::uint64_t replicas,
                                             std::uint64_t seed) {
  const auto shapes = enumerate_labeled_shapes(num_leaves);
  DistributionReport rep;
  rep.replicas = replicas;
  std::vector<std::uint64_t> counts(shapes.size(), 0);
  const auto n = static_cast<std::uint32_t>(num_leaves - 1);
  for (std::uint64_t r = 0; r < replicas; ++r) {
    GrowthTree t = grow(alpha, n, seed, r);
    t.finalize();
    const LabeledShape s = shape_of(t);
    const auto it = std::lower_bound(shapes.begin(), shapes.end(), s);
    if (it == shapes.end() || !(*it == s))
      throw std::logic_error("grown shape missing from enumeration");
    ++counts[static_cast<std::size_t>(it - shapes.begin())];
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    ShapeFrequencyRow row;
    row.shape = shapes[i];
    row.probability = tree_probability(shapes[i], alpha);
    row.count = counts[i];
    row.frequency = static_cast<double>(counts[i]) / static_cast<double>(replicas);
    const double se = std::sqrt(row.probability * (1.0 - row.probability) /
                                static_cast<double>(replicas));
    row.z = se > 0.0 ? (row.frequency - row.probability) / se : 0.0;
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
    rep.probability_sum += row.probability;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace nst
