#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nst {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();
inline constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

struct Edge {
  VertexId a;
  VertexId b;
};

// Arena tree grown by leaf attachment. Ids are dense and append-only; an edge
// split rewrites the old edge to (a, middle) and appends the two new edges, so
// edge ids stay valid for color bookkeeping. Adjacency is materialized once by
// finalize(); growth itself only needs the edge list and the degree counters.
class GrowthTree {
 public:
  explicit GrowthTree(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0) || !(alpha <= 2.0))
      throw std::invalid_argument("alpha must be in (1,2]");
    degree_ = {1, 1};
    edges_ = {{0, 1}};
    leaf_order_ = {0, 1};
  }

  // Reconstruction from parts (deserialization); validates all invariants.
  GrowthTree(double alpha, std::uint32_t n, std::vector<Edge> edges,
             std::vector<VertexId> leaf_order)
      : alpha_(alpha), step_(n), edges_(std::move(edges)), leaf_order_(std::move(leaf_order)) {
    if (!(alpha > 1.0) || !(alpha <= 2.0))
      throw std::invalid_argument("alpha must be in (1,2]");
    std::size_t nv = 0;
    for (const Edge& e : edges_) {
      if (e.a == e.b) throw std::invalid_argument("self-loop edge");
      nv = std::max<std::size_t>(nv, std::max(e.a, e.b) + std::size_t{1});
    }
    degree_.assign(nv, 0);
    for (const Edge& e : edges_) {
      ++degree_[e.a];
      ++degree_[e.b];
    }
    validate();
  }

  double alpha() const noexcept { return alpha_; }
  std::uint32_t step() const noexcept { return step_; }
  std::size_t vertex_count() const noexcept { return degree_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::uint32_t degree(VertexId v) const {
    check_vertex(v);
    return degree_[v];
  }
  bool is_leaf(VertexId v) const { return degree(v) == 1; }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<VertexId>& leaf_order() const noexcept { return leaf_order_; }

  void reserve(std::uint32_t target_step) {
    std::size_t nv = 2 * std::size_t{target_step} + 2;
    degree_.reserve(nv);
    edges_.reserve(nv - 1);
    leaf_order_.reserve(target_step + 1);
  }

  struct SplitResult {
    VertexId middle;
    VertexId leaf;
    std::uint32_t edge_mid_b;   // id of the new (middle, old b) edge
    std::uint32_t edge_mid_leaf;
  };

  // Marchal edge move: (a,b) -> (a,m), (m,b), plus leaf hanging on m.
  SplitResult split_edge(std::uint32_t eid) {
    if (eid >= edges_.size()) throw std::out_of_range("edge id out of range");
    const VertexId m = new_vertex();
    const VertexId l = new_vertex();
    const VertexId b = edges_[eid].b;
    edges_[eid].b = m;
    const auto e1 = static_cast<std::uint32_t>(edges_.size());
    edges_.push_back({m, b});
    edges_.push_back({m, l});
    degree_[m] = 3;
    degree_[l] = 1;
    ++step_;
    leaf_order_.push_back(l);
    finalized_ = false;
    return {m, l, e1, static_cast<std::uint32_t>(e1 + 1)};
  }

  // Marchal vertex move: new leaf hanging on v.
  VertexId attach_leaf(VertexId v) {
    check_vertex(v);
    if (degree_[v] < 3) throw std::invalid_argument("attach_leaf target must have degree >= 3");
    const VertexId l = new_vertex();
    edges_.push_back({v, l});
    ++degree_[v];
    degree_[l] = 1;
    ++step_;
    leaf_order_.push_back(l);
    finalized_ = false;
    return l;
  }

  bool finalized() const noexcept { return finalized_; }

  // Builds CSR adjacency with each neighbor row sorted ascending, so every
  // BFS visits vertices in arena-id order.
  void finalize() {
    if (finalized_) return;
    const std::size_t nv = degree_.size();
    csr_off_.assign(nv + 1, 0);
    for (std::size_t v = 0; v < nv; ++v) csr_off_[v + 1] = csr_off_[v] + degree_[v];
    csr_adj_.assign(csr_off_[nv], 0);
    std::vector<std::uint32_t> fill(csr_off_.begin(), csr_off_.end() - 1);
    for (const Edge& e : edges_) {
      csr_adj_[fill[e.a]++] = e.b;
      csr_adj_[fill[e.b]++] = e.a;
    }
    for (std::size_t v = 0; v < nv; ++v)
      std::sort(csr_adj_.begin() + csr_off_[v], csr_adj_.begin() + csr_off_[v + 1]);
    finalized_ = true;
  }

  std::span<const VertexId> neighbors(VertexId v) const {
    check_vertex(v);
    if (!finalized_) throw std::logic_error("neighbors() requires finalize()");
    return {csr_adj_.data() + csr_off_[v], csr_off_[v + 1] - csr_off_[v]};
  }

  // Full invariant sweep: tree shape, degree profile, leaf bookkeeping.
  void validate() const {
    const std::size_t nv = degree_.size();
    if (nv < 2) throw std::invalid_argument("tree needs at least two vertices");
    if (edges_.size() != nv - 1) throw std::invalid_argument("edge count != vertex count - 1");
    if (leaf_order_.size() != std::size_t{step_} + 1)
      throw std::invalid_argument("leaf_order length != step_count + 1");
    std::size_t leaves = 0;
    for (std::size_t v = 0; v < nv; ++v) {
      if (degree_[v] == 0 || degree_[v] == 2)
        throw std::invalid_argument("vertex " + std::to_string(v) + " has degree " +
                                    std::to_string(degree_[v]));
      if (degree_[v] == 1) ++leaves;
    }
    if (leaves != leaf_order_.size())
      throw std::invalid_argument("leaf_order does not list every leaf");
    std::vector<std::uint8_t> seen(nv, 0);
    for (VertexId l : leaf_order_) {
      if (l >= nv || degree_[l] != 1) throw std::invalid_argument("leaf_order entry is not a leaf");
      if (seen[l]) throw std::invalid_argument("duplicate leaf_order entry");
      seen[l] = 1;
    }
    // connectivity + parallel-edge check via adjacency walk
    std::vector<std::vector<VertexId>> adj(nv);
    for (const Edge& e : edges_) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    for (std::size_t v = 0; v < nv; ++v) {
      std::sort(adj[v].begin(), adj[v].end());
      if (std::adjacent_find(adj[v].begin(), adj[v].end()) != adj[v].end())
        throw std::invalid_argument("parallel edge at vertex " + std::to_string(v));
    }
    std::vector<std::uint8_t> vis(nv, 0);
    std::vector<VertexId> stack = {0};
    vis[0] = 1;
    std::size_t cnt = 1;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (VertexId w : adj[v])
        if (!vis[w]) {
          vis[w] = 1;
          ++cnt;
          stack.push_back(w);
        }
    }
    if (cnt != nv) throw std::invalid_argument("tree is disconnected");
  }

 private:
  VertexId new_vertex() {
    degree_.push_back(0);
    return static_cast<VertexId>(degree_.size() - 1);
  }
  void check_vertex(VertexId v) const {
    if (v >= degree_.size()) throw std::out_of_range("vertex id out of range");
  }

  double alpha_;
  std::uint32_t step_ = 1;
  std::vector<std::uint32_t> degree_;
  std::vector<Edge> edges_;
  std::vector<VertexId> leaf_order_;
  std::vector<std::uint32_t> csr_off_;
  std::vector<VertexId> csr_adj_;
  bool finalized_ = false;
};

namespace detail {
inline void require_finalized(const GrowthTree& t) {
  if (!t.finalized()) throw std::logic_error("operation requires a finalized tree");
}
}  // namespace detail

// Single-source BFS distances (arena-id visit order).
inline std::vector<std::uint32_t> bfs_distances(const GrowthTree& t, VertexId src) {
  detail::require_finalized(t);
  std::vector<std::uint32_t> dist(t.vertex_count(), kUnreached);
  std::vector<VertexId> queue;
  queue.reserve(t.vertex_count());
  dist[src] = 0;
  queue.push_back(src);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    for (VertexId w : t.neighbors(v))
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

// Multi-source BFS: distance to the nearest source.
inline std::vector<std::uint32_t> bfs_distances(const GrowthTree& t,
                                                std::span<const VertexId> sources) {
  detail::require_finalized(t);
  if (sources.empty()) throw std::invalid_argument("bfs_distances: no sources");
  std::vector<std::uint32_t> dist(t.vertex_count(), kUnreached);
  std::vector<VertexId> queue;
  queue.reserve(t.vertex_count());
  for (VertexId s : sources)
    if (dist.at(s) == kUnreached) {
      dist[s] = 0;
      queue.push_back(s);
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    for (VertexId w : t.neighbors(v))
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
  }
  return dist;
}

// BFS parent pointers toward root (root's parent is kNoVertex).
inline std::vector<VertexId> bfs_parents(const GrowthTree& t, VertexId root) {
  detail::require_finalized(t);
  std::vector<VertexId> parent(t.vertex_count(), kNoVertex);
  std::vector<std::uint8_t> vis(t.vertex_count(), 0);
  std::vector<VertexId> queue;
  queue.reserve(t.vertex_count());
  vis.at(root) = 1;
  queue.push_back(root);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    for (VertexId w : t.neighbors(v))
      if (!vis[w]) {
        vis[w] = 1;
        parent[w] = v;
        queue.push_back(w);
      }
  }
  return parent;
}

inline std::uint32_t graph_distance(const GrowthTree& t, VertexId u, VertexId v) {
  return bfs_distances(t, u).at(v);
}

struct DistanceMatrix {
  std::size_t size = 0;
  std::vector<double> entries;  // row-major size*size

  double at(std::size_t i, std::size_t j) const { return entries.at(i * size + j); }
  double& at(std::size_t i, std::size_t j) { return entries.at(i * size + j); }
};

inline DistanceMatrix distance_matrix(const GrowthTree& t, std::span<const VertexId> points,
                                      double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  DistanceMatrix m;
  m.size = points.size();
  m.entries.assign(m.size * m.size, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto dist = bfs_distances(t, points[i]);
    for (std::size_t j = 0; j < points.size(); ++j)
      m.at(i, j) = static_cast<double>(dist.at(points[j])) / scale;
  }
  return m;
}

// Max |d1(i,j) - d2(i,j)| under the index-matching correspondence.
inline double distortion(const DistanceMatrix& d1, const DistanceMatrix& d2) {
  if (d1.size != d2.size) throw std::invalid_argument("distortion: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < d1.entries.size(); ++k)
    worst = std::max(worst, std::abs(d1.entries[k] - d2.entries[k]));
  return worst;
}

// Smallest eps such that the centers form an eps-net of the whole tree.
inline double covering_radius(const GrowthTree& t, std::span<const VertexId> centers) {
  if (centers.empty()) throw std::invalid_argument("covering_radius: no centers");
  auto dist = bfs_distances(t, centers);
  std::uint32_t worst = 0;
  for (std::uint32_t d : dist) worst = std::max(worst, d);
  return static_cast<double>(worst);
}

inline double hausdorff_distance(const GrowthTree& t, std::span<const VertexId> s1,
                                 std::span<const VertexId> s2) {
  if (s1.empty() || s2.empty()) throw std::invalid_argument("hausdorff_distance: empty set");
  auto d1 = bfs_distances(t, s1);
  auto d2 = bfs_distances(t, s2);
  std::uint32_t worst = 0;
  for (VertexId v : s2) worst = std::max(worst, d1.at(v));
  for (VertexId v : s1) worst = std::max(worst, d2.at(v));
  return static_cast<double>(worst);
}

// Union of pairwise geodesics between the given leaves, degree-2 vertices
// retained. Vertices keep their original arena ids; parent points along the
// geodesic toward leaves[0].
struct SpanTree {
  std::vector<VertexId> vertices;  // ascending
  std::vector<VertexId> parent;    // parallel to vertices; kNoVertex at the root leaf
  std::vector<std::uint32_t> degree;

  bool contains(VertexId v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
  }
  std::size_t index_of(VertexId v) const {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || *it != v) throw std::out_of_range("vertex not in span");
    return static_cast<std::size_t>(it - vertices.begin());
  }
  std::uint32_t degree_of(VertexId v) const { return degree[index_of(v)]; }
};

inline SpanTree span(const GrowthTree& t, std::span<const VertexId> leaves) {
  detail::require_finalized(t);
  if (leaves.empty()) throw std::invalid_argument("span: empty leaf list");
  std::vector<std::uint8_t> dup(t.vertex_count(), 0);
  for (VertexId l : leaves) {
    if (!t.is_leaf(l)) throw std::invalid_argument("span: input must be leaves");
    if (dup[l]++) throw std::invalid_argument("span: duplicate leaf");
  }
  auto parent = bfs_parents(t, leaves[0]);
  std::vector<std::uint8_t> mark(t.vertex_count(), 0);
  mark[leaves[0]] = 1;
  for (VertexId l : leaves.subspan(1))
    for (VertexId v = l; !mark[v]; v = parent[v]) mark[v] = 1;

  SpanTree s;
  for (VertexId v = 0; v < t.vertex_count(); ++v)
    if (mark[v]) s.vertices.push_back(v);
  s.parent.resize(s.vertices.size());
  s.degree.assign(s.vertices.size(), 0);
  for (std::size_t i = 0; i < s.vertices.size(); ++i) {
    const VertexId v = s.vertices[i];
    const VertexId p = (v == leaves[0]) ? kNoVertex : parent[v];
    s.parent[i] = p;
    if (p != kNoVertex) {
      ++s.degree[i];
      ++s.degree[s.index_of(p)];
    }
  }
  return s;
}

// Unique vertex where the geodesic from x first meets the subtree, plus that
// vertex's degree measured inside the subtree.
inline std::pair<VertexId, std::uint32_t> attachment_point(const GrowthTree& t,
                                                           std::span<const VertexId> subtree,
                                                           VertexId x) {
  detail::require_finalized(t);
  if (subtree.empty()) throw std::invalid_argument("attachment_point: empty subtree");
  std::vector<std::uint8_t> in_set(t.vertex_count(), 0);
  for (VertexId v : subtree) {
    if (v >= t.vertex_count()) throw std::out_of_range("attachment_point: bad subtree id");
    in_set[v] = 1;
  }
  if (x >= t.vertex_count()) throw std::out_of_range("attachment_point: bad query id");
  if (in_set[x]) throw std::invalid_argument("attachment_point: x already in subtree");
  // connectivity of the induced set
  {
    std::vector<VertexId> stack = {subtree[0]};
    std::vector<std::uint8_t> vis(t.vertex_count(), 0);
    vis[subtree[0]] = 1;
    std::size_t cnt = 1;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (VertexId w : t.neighbors(v))
        if (in_set[w] && !vis[w]) {
          vis[w] = 1;
          ++cnt;
          stack.push_back(w);
        }
    }
    if (cnt != subtree.size()) throw std::invalid_argument("attachment_point: subtree disconnected");
  }
  // BFS outward from x until the set is hit; the hit is unique in a tree.
  std::vector<std::uint8_t> vis(t.vertex_count(), 0);
  std::vector<VertexId> queue = {x};
  vis[x] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    if (in_set[v]) {
      std::uint32_t d = 0;
      for (VertexId w : t.neighbors(v)) d += in_set[w];
      return {v, d};
    }
    for (VertexId w : t.neighbors(v))
      if (!vis[w]) {
        vis[w] = 1;
        queue.push_back(w);
      }
  }
  throw std::logic_error("attachment_point: unreachable subtree");
}

}  // namespace nst
