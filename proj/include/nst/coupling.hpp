#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nst/marchal.hpp"
#include "nst/rng.hpp"
#include "nst/shape.hpp"
#include "nst/tree.hpp"
#include "nst/weight_index.hpp"

namespace nst {

// Probability that a leaf attached at a vertex of full degree d and blue
// degree d' comes out blue. Degenerate rows: d'=0 never, d'=2 always.
class AcceptanceTable {
 public:
  AcceptanceTable(double alpha, double alpha_prime) : alpha_(alpha), alpha_prime_(alpha_prime) {
    if (!(alpha > 1.0) || !(alpha < alpha_prime) || !(alpha_prime <= 2.0))
      throw std::invalid_argument("need 1 < alpha < alpha_prime <= 2");
  }

  double alpha() const noexcept { return alpha_; }
  double alpha_prime() const noexcept { return alpha_prime_; }

  double operator()(std::uint32_t d, std::uint32_t d_prime) const {
    if (d < 2 || d_prime == 1 || d_prime > d)
      throw std::invalid_argument("inadmissible degree pair (" + std::to_string(d) + "," +
                                  std::to_string(d_prime) + ")");
    if (d_prime == 0) return 0.0;
    if (d_prime == 2) return 1.0;
    // d >= d' >= 3, alpha < 2 keeps the denominator positive
    return (d_prime - 1.0 - alpha_prime_) * (alpha_ - 1.0) /
           ((d - 1.0 - alpha_) * (alpha_prime_ - 1.0));
  }

 private:
  double alpha_;
  double alpha_prime_;
};

inline double accept_probability(const AcceptanceTable& table, std::uint32_t d,
                                 std::uint32_t d_prime) {
  return table(d, d_prime);
}

struct CoupledRecord {
  StepRecord step;
  bool new_leaf_blue;
};

// Growth state plus a blue/red color per edge and vertex. The blue edges form
// a subtree containing A_0 and A_1; blue tree leaves are exactly the blue
// vertices of blue degree 1. Counters keep the subtree weight identity
//   (a'-1)*blue_edges + sum over blue-degree-(d'>=3) vertices of (d'-1-a')
//     = L*a' - 1,   L+1 = blue leaf count
// checkable in O(1); validate() recounts everything from scratch.
class ColoredTree {
 public:
  ColoredTree(double alpha, double alpha_prime, std::uint32_t reserve_hint = 0)
      : tree_(alpha), alpha_prime_(alpha_prime) {
    if (!(alpha < alpha_prime) || !(alpha_prime <= 2.0))
      throw std::invalid_argument("need 1 < alpha < alpha_prime <= 2");
    if (reserve_hint) tree_.reserve(reserve_hint);
    edge_blue_ = {1};
    vertex_blue_ = {1, 1};
    blue_degree_ = {1, 1};
    blue_leaf_indices_ = {0, 1};
    blue_edges_ = 1;
  }

  // Reconstruction from a serialized document; recomputes all bookkeeping.
  ColoredTree(GrowthTree tree, double alpha_prime, std::vector<std::uint8_t> edge_blue,
              std::vector<std::uint8_t> vertex_blue)
      : tree_(std::move(tree)),
        alpha_prime_(alpha_prime),
        edge_blue_(std::move(edge_blue)),
        vertex_blue_(std::move(vertex_blue)) {
    if (!(tree_.alpha() < alpha_prime) || !(alpha_prime <= 2.0))
      throw std::invalid_argument("need 1 < alpha < alpha_prime <= 2");
    if (edge_blue_.size() != tree_.edge_count() || vertex_blue_.size() != tree_.vertex_count())
      throw std::invalid_argument("color array size mismatch");
    blue_degree_.assign(tree_.vertex_count(), 0);
    blue_edges_ = 0;
    for (std::size_t e = 0; e < edge_blue_.size(); ++e)
      if (edge_blue_[e]) {
        ++blue_edges_;
        ++blue_degree_[tree_.edges()[e].a];
        ++blue_degree_[tree_.edges()[e].b];
      }
    for (std::size_t i = 0; i < tree_.leaf_order().size(); ++i)
      if (vertex_blue_[tree_.leaf_order()[i]])
        blue_leaf_indices_.push_back(static_cast<std::uint32_t>(i));
    for (VertexId v = 0; v < tree_.vertex_count(); ++v)
      if (vertex_blue_[v] && blue_degree_[v] >= 3) {
        blue_branch_excess_ += blue_degree_[v] - 1;
        ++blue_branch_count_;
      }
    validate();
  }

  const GrowthTree& tree() const noexcept { return tree_; }
  void finalize() { tree_.finalize(); }
  double alpha() const noexcept { return tree_.alpha(); }
  double alpha_prime() const noexcept { return alpha_prime_; }

  bool edge_is_blue(std::uint32_t eid) const { return edge_blue_.at(eid) != 0; }
  bool vertex_is_blue(VertexId v) const { return vertex_blue_.at(v) != 0; }
  std::uint32_t blue_degree(VertexId v) const { return blue_degree_.at(v); }
  std::uint64_t blue_edge_count() const noexcept { return blue_edges_; }
  const std::vector<std::uint8_t>& edge_colors() const noexcept { return edge_blue_; }
  const std::vector<std::uint8_t>& vertex_colors() const noexcept { return vertex_blue_; }

  // Leaf indices i (positions in leaf_order) with A_i blue, ascending.
  const std::vector<std::uint32_t>& blue_leaf_indices() const noexcept {
    return blue_leaf_indices_;
  }
  std::uint32_t L() const { return static_cast<std::uint32_t>(blue_leaf_indices_.size()) - 1; }

  std::vector<VertexId> blue_vertices() const {
    std::vector<VertexId> out;
    for (VertexId v = 0; v < tree_.vertex_count(); ++v)
      if (vertex_blue_[v]) out.push_back(v);
    return out;
  }
  std::vector<VertexId> blue_leaves() const {
    std::vector<VertexId> out;
    out.reserve(blue_leaf_indices_.size());
    for (std::uint32_t i : blue_leaf_indices_) out.push_back(tree_.leaf_order()[i]);
    return out;
  }

  // Signed defect of the weight identity, from the O(1) counters.
  double blue_weight_gap() const {
    const double lhs = (alpha_prime_ - 1.0) * static_cast<double>(blue_edges_) +
                       static_cast<double>(blue_branch_excess_) -
                       alpha_prime_ * static_cast<double>(blue_branch_count_);
    const double rhs = static_cast<double>(L()) * alpha_prime_ - 1.0;
    return lhs - rhs;
  }

  // Contracted shape of the blue subtree, leaves labeled by blue-leaf order.
  LabeledShape blue_shape() const {
    detail::require_finalized(tree_);
    return shape_of_subset(tree_, blue_vertices(), blue_leaves());
  }

  // Full recount of every color invariant; throws on the first violation.
  void validate() const {
    tree_.validate();
    const std::size_t nv = tree_.vertex_count();
    if (edge_blue_.size() != tree_.edge_count() || vertex_blue_.size() != nv ||
        blue_degree_.size() != nv)
      throw std::logic_error("color bookkeeping size mismatch");
    std::vector<std::uint32_t> deg(nv, 0);
    std::vector<std::vector<VertexId>> adj(nv);
    std::uint64_t blue_edges = 0;
    for (std::size_t e = 0; e < edge_blue_.size(); ++e) {
      const Edge& ed = tree_.edges()[e];
      if (!edge_blue_[e]) continue;
      ++blue_edges;
      ++deg[ed.a];
      ++deg[ed.b];
      adj[ed.a].push_back(ed.b);
      adj[ed.b].push_back(ed.a);
      if (!vertex_blue_[ed.a] || !vertex_blue_[ed.b])
        throw std::logic_error("blue edge with a red endpoint");
    }
    if (blue_edges != blue_edges_) throw std::logic_error("blue edge count drifted");
    std::uint64_t excess = 0, branches = 0, blue_vertex_count = 0;
    for (VertexId v = 0; v < nv; ++v) {
      if (deg[v] != blue_degree_[v]) throw std::logic_error("blue degree counter drifted");
      if (vertex_blue_[v]) {
        ++blue_vertex_count;
        if (deg[v] == 0) throw std::logic_error("blue vertex with only red edges");
        if (deg[v] >= 3) {
          excess += deg[v] - 1;
          ++branches;
        }
      } else if (deg[v] != 0) {
        throw std::logic_error("red vertex with a blue edge");
      }
    }
    if (excess != blue_branch_excess_ || branches != blue_branch_count_)
      throw std::logic_error("blue branch counters drifted");
    // connectivity from A_0 over blue edges
    const VertexId a0 = tree_.leaf_order()[0];
    const VertexId a1 = tree_.leaf_order()[1];
    if (!vertex_blue_[a0] || !vertex_blue_[a1])
      throw std::logic_error("A_0 and A_1 must stay blue");
    std::vector<std::uint8_t> vis(nv, 0);
    std::vector<VertexId> stack = {a0};
    vis[a0] = 1;
    std::uint64_t seen = 1;
    while (!stack.empty()) {
      const VertexId v = stack.back();
      stack.pop_back();
      for (VertexId w : adj[v])
        if (!vis[w]) {
          vis[w] = 1;
          ++seen;
          stack.push_back(w);
        }
    }
    if (seen != blue_vertex_count) throw std::logic_error("blue subtree disconnected");
    // blue leaf bookkeeping: exactly the blue entries of leaf_order, ascending
    std::vector<std::uint32_t> expect;
    for (std::size_t i = 0; i < tree_.leaf_order().size(); ++i)
      if (vertex_blue_[tree_.leaf_order()[i]]) expect.push_back(static_cast<std::uint32_t>(i));
    if (expect != blue_leaf_indices_) throw std::logic_error("blue leaf index list drifted");
    for (VertexId v = 0; v < nv; ++v)
      if (vertex_blue_[v] && deg[v] == 1 && !tree_.is_leaf(v))
        throw std::logic_error("blue-degree-1 vertex that is not a tree leaf");
    const double gap = blue_weight_gap();
    if (std::abs(gap) > 1e-9)
      throw std::logic_error("blue weight identity violated, gap " + std::to_string(gap));
  }

  friend CoupledRecord coupled_step(ColoredTree&, WeightIndex&, RngStream&, RngStream&);

 private:
  GrowthTree tree_;
  double alpha_prime_;
  std::vector<std::uint8_t> edge_blue_;    // parallel to edge ids
  std::vector<std::uint8_t> vertex_blue_;  // parallel to vertex ids
  std::vector<std::uint32_t> blue_degree_;
  std::vector<std::uint32_t> blue_leaf_indices_;
  std::uint64_t blue_edges_ = 0;
  std::uint64_t blue_branch_excess_ = 0;  // sum of (blue degree - 1) over blue-degree >= 3
  std::uint64_t blue_branch_count_ = 0;
};

// One coupled move. The per-leaf decision variable U_i is read at index
// i = new leaf index on every step, even when the step splits an edge or the
// decision is degenerate; this keeps the stream aligned with a later replay.
// A leaf attached at a vertex goes blue iff U_i < p(d, d') with d the full
// degree and d' the blue degree (0 at a red vertex); strict `<` so that p = 0
// can never accept.
inline CoupledRecord coupled_step(ColoredTree& s, WeightIndex& weights, RngStream& u_stream,
                                  RngStream& select) {
  const std::uint32_t i = s.tree_.step() + 1;
  const double u = u_stream.unit_at(i);
  const auto pick = weights.sample(select);

  CoupledRecord rec{};
  rec.step.step = i;
  rec.step.edge_selected = pick.is_edge;
  rec.step.item_id = pick.id;

  if (pick.is_edge) {
    const bool blue = s.edge_blue_[pick.id] != 0;
    const auto split = s.tree_.split_edge(pick.id);
    weights.register_edge(split.edge_mid_b);
    weights.register_edge(split.edge_mid_leaf);
    weights.register_branch_vertex(split.middle);
    rec.step.degree_before = 2;
    rec.step.middle = split.middle;
    rec.step.leaf = split.leaf;
    rec.new_leaf_blue = blue;
    const std::uint8_t c = blue ? 1 : 0;
    s.edge_blue_.push_back(c);  // (middle, old b)
    s.edge_blue_.push_back(c);  // (middle, leaf)
    s.vertex_blue_.push_back(c);
    s.vertex_blue_.push_back(c);
    s.blue_degree_.push_back(blue ? 3u : 0u);
    s.blue_degree_.push_back(blue ? 1u : 0u);
    if (blue) {
      s.blue_edges_ += 2;
      s.blue_branch_excess_ += 2;  // the middle vertex enters at blue degree 3
      s.blue_branch_count_ += 1;
      s.blue_leaf_indices_.push_back(i);
    }
  } else {
    const VertexId v = pick.id;
    const std::uint32_t d = s.tree_.degree(v);
    const std::uint32_t d_prime = s.vertex_blue_[v] ? s.blue_degree_[v] : 0;
    const AcceptanceTable table(s.alpha(), s.alpha_prime_);
    const bool blue = u < table(d, d_prime);
    const VertexId leaf = s.tree_.attach_leaf(v);
    weights.register_edge(static_cast<std::uint32_t>(s.tree_.edge_count() - 1));
    weights.bump_branch_vertex(v);
    rec.step.degree_before = d;
    rec.step.middle = kNoVertex;
    rec.step.leaf = leaf;
    rec.new_leaf_blue = blue;
    s.edge_blue_.push_back(blue ? 1 : 0);
    s.vertex_blue_.push_back(blue ? 1 : 0);
    s.blue_degree_.push_back(blue ? 1u : 0u);
    if (blue) {
      s.blue_degree_[v] += 1;
      s.blue_edges_ += 1;
      s.blue_branch_excess_ += 1;  // v was already a blue branch vertex (d' >= 3)
      s.blue_leaf_indices_.push_back(i);
    }
  }
  return rec;
}

// Blue-increment probability at the current step, computed two ways: the
// closed form (L*a'-1)(a-1)/((a'-1)(n*a-1)) and a direct sweep over item
// weights times acceptance probabilities. Disagreement beyond 1e-9 signals a
// coloring bug and throws.
inline double blue_step_probability(const ColoredTree& s) {
  const double a = s.alpha();
  const double ap = s.alpha_prime();
  const double n = static_cast<double>(s.tree().step());
  const double closed =
      (static_cast<double>(s.L()) * ap - 1.0) * (a - 1.0) / ((ap - 1.0) * (n * a - 1.0));
  const AcceptanceTable table(a, ap);
  long double direct = static_cast<long double>(s.blue_edge_count()) * (a - 1.0);
  for (VertexId v = 0; v < s.tree().vertex_count(); ++v) {
    const std::uint32_t d = s.tree().degree(v);
    if (d < 3) continue;
    const std::uint32_t d_prime = s.vertex_is_blue(v) ? s.blue_degree(v) : 0;
    direct += static_cast<long double>((d - 1.0) - a) * table(d, d_prime);
  }
  const double swept = static_cast<double>(direct / (n * a - 1.0));
  if (std::abs(swept - closed) > 1e-9)
    throw std::logic_error("blue step probability mismatch: closed " + std::to_string(closed) +
                           " vs direct " + std::to_string(swept));
  return closed;
}

// Coupled chain driver with the same drift policy as grow().
class CoupledChain {
 public:
  CoupledChain(double alpha, double alpha_prime, std::uint32_t target_n, std::uint64_t seed,
               std::uint64_t replica = 0)
      : state_(alpha, alpha_prime, target_n),
        weights_(alpha, 3 * std::size_t{target_n} + 8),
        select_(make_stream(seed, replica, kSelectLabel)),
        u_(make_stream(seed, replica, kULabel)) {
    weights_.register_edge(0);
  }

  CoupledRecord step() {
    auto rec = coupled_step(state_, weights_, u_, select_);
    if (state_.tree().step() % kDriftCheckPeriod == 0)
      check_weight_invariant(state_.tree(), weights_);
    return rec;
  }

  void run_to(std::uint32_t n) {
    while (state_.tree().step() < n) step();
  }

  const ColoredTree& state() const noexcept { return state_; }
  ColoredTree& state() noexcept { return state_; }
  const GrowthTree& tree() const noexcept { return state_.tree(); }
  WeightIndex& weights() noexcept { return weights_; }
  RngStream& select_stream() noexcept { return select_; }
  RngStream& u_stream() noexcept { return u_; }

 private:
  ColoredTree state_;
  WeightIndex weights_;
  RngStream select_;
  RngStream u_;
};

struct LeafCountTrace {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> counts;  // counts[m-1] = L(m), m = 1..n
};

// L(m) for m = 1..n from one coupled run. L(1) = 1, increments are 0/1.
inline LeafCountTrace leaf_count_trace(double alpha, double alpha_prime, std::uint32_t n,
                                       std::uint64_t seed, std::uint64_t replica = 0) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  CoupledChain chain(alpha, alpha_prime, n, seed, replica);
  LeafCountTrace trace;
  trace.alpha = alpha;
  trace.alpha_prime = alpha_prime;
  trace.seed = seed;
  trace.counts.reserve(n);
  trace.counts.push_back(chain.state().L());
  while (chain.tree().step() < n) {
    chain.step();
    trace.counts.push_back(chain.state().L());
  }
  return trace;
}

}  // namespace nst
