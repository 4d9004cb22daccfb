#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nst/coupling.hpp"
#include "nst/rng.hpp"
#include "nst/tree.hpp"

namespace nst {

struct PruneResult {
  std::vector<VertexId> blue_vertices;          // kept subtree, ascending arena ids
  std::vector<std::uint32_t> kept_leaf_indices; // i with A_i kept, ascending; 0 and 1 always
  std::vector<VertexId> kept_leaves;            // arena ids of the kept A_i, index order
};

// Standalone pruning of a finished tree over its first k+1 leaves. Walks the
// leaf list once: tau starts as the A_0..A_1 path; leaf A_i joins iff
// U_i < p(d_i, d'_i) where d_i is the degree of its attachment point in the
// degree-2-retaining span of A_0..A_{i-1} and d'_i the degree in tau so far
// (0 if absent). U_i is read at index i from the same leaf-indexed stream the
// coupled chain uses, and is consumed on every step, so a prune pass replays
// a coupled run exactly.
inline PruneResult prune(const GrowthTree& t, std::uint32_t k, const AcceptanceTable& table,
                         RngStream& u_stream) {
  detail::require_finalized(t);
  if (k < 1 || k > t.step()) throw std::invalid_argument("leaf prefix out of range");
  const auto& leaves = t.leaf_order();
  const VertexId a0 = leaves[0];
  const auto parent = bfs_parents(t, a0);

  const std::size_t nv = t.vertex_count();
  std::vector<std::uint8_t> in_span(nv, 0), in_tau(nv, 0);
  std::vector<std::uint32_t> span_deg(nv, 0), tau_deg(nv, 0);

  // seed both structures with the A_0..A_1 path
  for (VertexId v = leaves[1];; v = parent[v]) {
    in_span[v] = in_tau[v] = 1;
    const std::uint32_t d = (v == leaves[1] || v == a0) ? 1 : 2;
    span_deg[v] = tau_deg[v] = d;
    if (v == a0) break;
  }

  PruneResult res;
  res.kept_leaf_indices = {0, 1};
  std::vector<VertexId> climb;
  for (std::uint32_t i = 2; i <= k; ++i) {
    const VertexId ai = leaves[i];
    climb.clear();
    VertexId gate = ai;
    while (!in_span[gate]) {
      climb.push_back(gate);
      gate = parent[gate];
    }
    // the geodesic can never first meet the span at a span leaf
    const std::uint32_t d = span_deg[gate];
    const std::uint32_t d_prime = in_tau[gate] ? tau_deg[gate] : 0;
    for (VertexId v : climb) {
      in_span[v] = 1;
      span_deg[v] = (v == ai) ? 1 : 2;
    }
    span_deg[gate] += 1;
    const double u = u_stream.unit_at(i);
    if (u < table(d, d_prime)) {
      for (VertexId v : climb) {
        in_tau[v] = 1;
        tau_deg[v] = (v == ai) ? 1 : 2;
      }
      tau_deg[gate] += 1;
      res.kept_leaf_indices.push_back(i);
    }
  }

  for (VertexId v = 0; v < nv; ++v)
    if (in_tau[v]) res.blue_vertices.push_back(v);
  res.kept_leaves.reserve(res.kept_leaf_indices.size());
  for (std::uint32_t i : res.kept_leaf_indices) res.kept_leaves.push_back(leaves[i]);
  return res;
}

// Runs the coupled chain to step n, then replays the pruning recursion on the
// finished uncolored tree with an identical U stream; the blue vertex set and
// the kept-leaf list must come out the same.
inline bool coupling_equality_check(double alpha, double alpha_prime, std::uint32_t n,
                                    std::uint64_t seed, std::uint64_t replica = 0) {
  CoupledChain chain(alpha, alpha_prime, n, seed, replica);
  chain.run_to(n);
  chain.state().finalize();
  RngStream u = make_stream(seed, replica, kULabel);
  const AcceptanceTable table(alpha, alpha_prime);
  const PruneResult res = prune(chain.tree(), n, table, u);
  return res.blue_vertices == chain.state().blue_vertices() &&
         res.kept_leaf_indices == chain.state().blue_leaf_indices();
}

// Prunes once per alpha_prime with shared U values; results must be nested,
// the largest alpha_prime keeping the least.
inline std::vector<PruneResult> nested_prune(const GrowthTree& t, std::uint32_t k, double alpha,
                                             const std::vector<double>& alpha_primes,
                                             RngStream& u_stream) {
  if (alpha_primes.empty()) throw std::invalid_argument("need at least one alpha_prime");
  for (std::size_t j = 0; j < alpha_primes.size(); ++j) {
    const double lo = j == 0 ? alpha : alpha_primes[j - 1];
    if (!(alpha_primes[j] > lo) || !(alpha_primes[j] <= 2.0))
      throw std::invalid_argument("alpha_prime list must increase within (alpha, 2]");
  }
  std::vector<PruneResult> out;
  out.reserve(alpha_primes.size());
  for (double ap : alpha_primes)
    out.push_back(prune(t, k, AcceptanceTable(alpha, ap), u_stream));
  for (std::size_t j = 1; j < out.size(); ++j)
    if (!std::includes(out[j - 1].blue_vertices.begin(), out[j - 1].blue_vertices.end(),
                       out[j].blue_vertices.begin(), out[j].blue_vertices.end()))
      throw std::logic_error("nested prune inclusion violated between alpha_prime " +
                             std::to_string(alpha_primes[j - 1]) + " and " +
                             std::to_string(alpha_primes[j]));
  return out;
}

// Lift a prune result to a colored tree. The blue set of a full-length prune
// is connected, so an edge is blue exactly when both endpoints are; the
// validating constructor rejects anything that breaks the weight identity.
inline ColoredTree colored_from_prune(const GrowthTree& t, double alpha_prime,
                                      const PruneResult& res) {
  detail::require_finalized(t);
  std::vector<std::uint8_t> vertex_blue(t.vertex_count(), 0);
  for (VertexId v : res.blue_vertices) vertex_blue[v] = 1;
  std::vector<std::uint8_t> edge_blue(t.edge_count(), 0);
  for (std::size_t e = 0; e < t.edge_count(); ++e)
    edge_blue[e] = vertex_blue[t.edges()[e].a] && vertex_blue[t.edges()[e].b];
  return ColoredTree(t, alpha_prime, std::move(edge_blue), std::move(vertex_blue));
}

struct LipschitzBound {
  double hausdorff = 0.0;
  double radius = 0.0;
};

// Hausdorff gap between the k-leaf and n-leaf prunes of one tree, against the
// covering radius of the first k+1 leaves; the gap never exceeds the radius.
inline LipschitzBound lipschitz_bound_check(const GrowthTree& t, std::uint32_t k, std::uint32_t n,
                                            const AcceptanceTable& table, RngStream& u_stream) {
  if (k > n) throw std::invalid_argument("k must not exceed n");
  const PruneResult small = prune(t, k, table, u_stream);
  const PruneResult big = prune(t, n, table, u_stream);
  LipschitzBound out;
  out.hausdorff = hausdorff_distance(t, small.blue_vertices, big.blue_vertices);
  std::vector<VertexId> centers(t.leaf_order().begin(), t.leaf_order().begin() + k + 1);
  out.radius = covering_radius(t, centers);
  return out;
}

}  // namespace nst
