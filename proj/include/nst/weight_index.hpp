#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nst/rng.hpp"
#include "nst/tree.hpp"

namespace nst {

// Prefix-sum (Fenwick) index over the chain's selectable items: every edge
// with weight alpha-1, every branch vertex of degree d >= 3 with weight
// d-1-alpha. Update and sample are O(log n). Items are append-only; an edge
// split keeps the old edge's slot (its weight never changes) and appends
// slots for the two new pieces.
class WeightIndex {
 public:
  struct Pick {
    bool is_edge;
    std::uint32_t id;  // edge id or vertex id
  };

  explicit WeightIndex(double alpha, std::size_t capacity_hint = 64) : alpha_(alpha) {
    if (!(alpha > 1.0) || !(alpha <= 2.0))
      throw std::invalid_argument("alpha must be in (1,2]");
    cap_ = std::max<std::size_t>(capacity_hint, 8);
    bit_.assign(cap_ + 1, 0.0);
    weights_.reserve(cap_);
    items_.reserve(cap_);
  }

  // Builds the index for an existing chain state (edges first, then branch
  // vertices in id order).
  static WeightIndex for_tree(const GrowthTree& t) {
    WeightIndex w(t.alpha(), 3 * t.edge_count() + 8);
    for (std::uint32_t eid = 0; eid < t.edge_count(); ++eid) w.register_edge(eid);
    for (VertexId v = 0; v < t.vertex_count(); ++v) {
      const std::uint32_t d = t.degree(v);
      if (d >= 3) {
        w.register_branch_vertex(v);
        for (std::uint32_t k = 3; k < d; ++k) w.bump_branch_vertex(v);
      }
    }
    return w;
  }

  void register_edge(std::uint32_t eid) { append((std::uint64_t{1} << 32) | eid, alpha_ - 1.0); }

  void register_branch_vertex(VertexId v) {
    if (v >= vertex_slot_.size()) vertex_slot_.resize(v + 1, kNoSlot);
    if (vertex_slot_[v] != kNoSlot) throw std::logic_error("vertex already registered");
    vertex_slot_[v] = static_cast<std::uint32_t>(weights_.size());
    append(v, 2.0 - alpha_);
  }

  // Degree increment: the vertex weight d-1-alpha grows by exactly 1.
  void bump_branch_vertex(VertexId v) {
    const std::uint32_t slot = slot_of(v);
    weights_[slot] += 1.0;
    add(slot + 1, 1.0);
  }

  std::size_t item_count() const noexcept { return weights_.size(); }
  double total() const { return prefix(weights_.size()); }

  // Kahan-free long-double rescan of item weights; drift oracle.
  double recompute_total() const {
    long double s = 0.0L;
    for (double w : weights_) s += w;
    return static_cast<double>(s);
  }

  // Rebuild prefix sums from the raw weights, killing accumulated drift.
  void rebuild() {
    for (std::size_t i = 1; i <= weights_.size(); ++i) bit_[i] = weights_[i - 1];
    for (std::size_t i = weights_.size() + 1; i <= cap_; ++i) bit_[i] = 0.0;
    for (std::size_t i = 1; i <= weights_.size(); ++i) {
      const std::size_t j = i + (i & (~i + 1));
      if (j <= weights_.size()) bit_[j] += bit_[i];
    }
  }

  // First item whose cumulative weight exceeds u, u uniform on [0, total);
  // zero-weight items are never selected by this rule.
  Pick sample(RngStream& rng) const {
    const double tot = total();
    if (!(tot > 0.0)) throw std::logic_error("sample on empty index");
    for (;;) {
      const double u = rng.next_unit() * tot;
      if (u < tot) return unpack(locate(u));
      // u == tot can occur after rounding; redraw
    }
  }

  Pick at(std::size_t slot) const { return unpack(slot); }
  double weight(std::size_t slot) const { return weights_.at(slot); }

 private:
  static constexpr std::uint32_t kNoSlot = 0xffffffffu;

  std::uint32_t slot_of(VertexId v) const {
    if (v >= vertex_slot_.size() || vertex_slot_[v] == kNoSlot)
      throw std::logic_error("vertex has no weight slot");
    return vertex_slot_[v];
  }

  Pick unpack(std::size_t slot) const {
    const std::uint64_t item = items_[slot];
    return {(item >> 32) != 0, static_cast<std::uint32_t>(item & 0xffffffffu)};
  }

  void append(std::uint64_t item, double w) {
    if (weights_.size() == cap_) {
      cap_ *= 2;
      bit_.assign(cap_ + 1, 0.0);
      weights_.push_back(w);
      items_.push_back(item);
      rebuild();
      return;
    }
    weights_.push_back(w);
    items_.push_back(item);
    // O(log) append: bit_[i] spans (i - lowbit(i), i]
    const std::size_t i = weights_.size();
    double s = w;
    const std::size_t low = i & (~i + 1);
    for (std::size_t j = i - 1; j > i - low; j -= j & (~j + 1)) s += bit_[j];
    bit_[i] = s;
  }

  void add(std::size_t i, double delta) {  // 1-based
    for (; i <= weights_.size(); i += i & (~i + 1)) bit_[i] += delta;
  }

  double prefix(std::size_t i) const {  // sum of first i items
    double s = 0.0;
    for (; i > 0; i -= i & (~i + 1)) s += bit_[i];
    return s;
  }

  std::size_t locate(double u) const {  // index of first cumulative > u
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(weights_.size());
    for (; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= weights_.size() && bit_[next] <= u) {
        pos = next;
        u -= bit_[next];
      }
    }
    return pos;  // 0-based item index
  }

  double alpha_;
  std::size_t cap_;
  std::vector<double> bit_;        // 1-based
  std::vector<double> weights_;    // raw item weights, slot order
  std::vector<std::uint64_t> items_;
  std::vector<std::uint32_t> vertex_slot_;
};

}  // namespace nst
