#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nst/tree.hpp"

namespace nst {

// Arena-independent canonical form of a leaf-labeled tree. Encoding: root at
// leaf 0, walk through degree-2 vertices, children ordered by the minimum leaf
// label in their subtree. Label-preserving isomorphic trees encode equal.
struct LabeledShape {
  std::string code;
  std::vector<std::uint32_t> internal_degrees;  // after degree-2 contraction
  std::uint32_t leaf_count = 0;

  friend bool operator==(const LabeledShape& a, const LabeledShape& b) {
    return a.code == b.code;
  }
  friend auto operator<=>(const LabeledShape& a, const LabeledShape& b) {
    return a.code <=> b.code;
  }
};

namespace detail {

// NbrFn: (VertexId) -> iterable of VertexId restricted to the encoded subset.
template <class NbrFn>
struct ShapeEncoder {
  const NbrFn& nbrs;
  const std::vector<std::int64_t>& label_of;  // -1 if unlabeled
  LabeledShape out;

  struct Enc {
    std::uint32_t min_label;
    std::string code;
  };

  Enc encode(VertexId v, VertexId parent) {
    // walk through unlabeled pass-through vertices
    for (;;) {
      std::vector<VertexId> ch;
      for (VertexId w : nbrs(v))
        if (w != parent) ch.push_back(w);
      if (label_of[v] >= 0) {
        if (!ch.empty())
          throw std::invalid_argument("labeled vertex is not a leaf of the encoded subset");
        const auto lab = static_cast<std::uint32_t>(label_of[v]);
        return {lab, std::to_string(lab)};
      }
      if (ch.empty()) throw std::invalid_argument("unlabeled leaf in encoded subset");
      if (ch.size() == 1) {  // degree-2 contraction
        parent = v;
        v = ch[0];
        continue;
      }
      std::vector<Enc> sub;
      sub.reserve(ch.size());
      for (VertexId w : ch) sub.push_back(encode(w, v));
      std::sort(sub.begin(), sub.end(),
                [](const Enc& x, const Enc& y) { return x.min_label < y.min_label; });
      std::string code = "(";
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (i) code += ',';
        code += sub[i].code;
      }
      code += ')';
      out.internal_degrees.push_back(static_cast<std::uint32_t>(ch.size()) + 1);
      return {sub.front().min_label, std::move(code)};
    }
  }
};

template <class NbrFn>
LabeledShape encode_shape(std::size_t num_vertices, const NbrFn& nbrs,
                          std::span<const VertexId> labeled_leaves) {
  if (labeled_leaves.size() < 2) throw std::invalid_argument("need at least two labeled leaves");
  std::vector<std::int64_t> label_of(num_vertices, -1);
  for (std::size_t i = 0; i < labeled_leaves.size(); ++i) {
    if (labeled_leaves[i] >= num_vertices) throw std::out_of_range("bad leaf id");
    if (label_of[labeled_leaves[i]] >= 0) throw std::invalid_argument("duplicate labeled leaf");
    label_of[labeled_leaves[i]] = static_cast<std::int64_t>(i);
  }
  ShapeEncoder<NbrFn> enc{nbrs, label_of, {}};
  const VertexId root = labeled_leaves[0];
  VertexId start = kNoVertex;
  for (VertexId w : nbrs(root)) {
    if (start != kNoVertex) throw std::invalid_argument("root label must be a leaf");
    start = w;
  }
  if (start == kNoVertex) throw std::invalid_argument("root leaf is isolated");
  enc.out.code = enc.encode(start, root).code;
  enc.out.leaf_count = static_cast<std::uint32_t>(labeled_leaves.size());
  std::sort(enc.out.internal_degrees.begin(), enc.out.internal_degrees.end());
  return std::move(enc.out);
}

}  // namespace detail

// Shape of the whole tree, leaves labeled by their position in leaf_order.
inline LabeledShape shape_of(const GrowthTree& t) {
  detail::require_finalized(t);
  auto nbrs = [&](VertexId v) { return t.neighbors(v); };
  return detail::encode_shape(t.vertex_count(), nbrs, t.leaf_order());
}

// Shape of a connected vertex subset; labeled_leaves[i] gets label i, every
// in-subset leaf must be labeled, unlabeled degree-2 vertices are contracted.
inline LabeledShape shape_of_subset(const GrowthTree& t, std::span<const VertexId> subset,
                                    std::span<const VertexId> labeled_leaves) {
  detail::require_finalized(t);
  std::vector<std::uint8_t> in_set(t.vertex_count(), 0);
  for (VertexId v : subset) {
    if (v >= t.vertex_count()) throw std::out_of_range("bad subset id");
    in_set[v] = 1;
  }
  for (VertexId l : labeled_leaves)
    if (l >= t.vertex_count() || !in_set[l])
      throw std::invalid_argument("labeled leaf not in subset");
  std::vector<VertexId> buf;
  auto nbrs = [&](VertexId v) -> const std::vector<VertexId>& {
    buf.clear();
    for (VertexId w : t.neighbors(v))
      if (in_set[w]) buf.push_back(w);
    return buf;
  };
  return detail::encode_shape(t.vertex_count(), nbrs, labeled_leaves);
}

// All distinct labeled trees with leaves 0..num_leaves-1 and no degree-2
// vertices, each exactly once. Generated by leaf insertion: removing the
// highest leaf (and contracting) is a bijection onto smaller shapes, so no
// isomorphism reduction is needed.
inline std::vector<LabeledShape> enumerate_labeled_shapes(int num_leaves) {
  if (num_leaves < 2 || num_leaves > 6)
    throw std::invalid_argument("enumerate_labeled_shapes supports 2..6 leaves");
  std::vector<LabeledShape> out;
  GrowthTree seed(2.0);  // alpha is irrelevant to structure
  auto emit = [&](auto&& self, const GrowthTree& t) -> void {
    if (t.leaf_order().size() == static_cast<std::size_t>(num_leaves)) {
      GrowthTree copy = t;
      copy.finalize();
      out.push_back(shape_of(copy));
      return;
    }
    for (std::uint32_t eid = 0; eid < t.edge_count(); ++eid) {
      GrowthTree next = t;
      next.split_edge(eid);
      self(self, next);
    }
    for (VertexId v = 0; v < t.vertex_count(); ++v)
      if (t.degree(v) >= 3) {
        GrowthTree next = t;
        next.attach_leaf(v);
        self(self, next);
      }
  };
  emit(emit, seed);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace nst
