#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "nst/coupling.hpp"
#include "nst/rng.hpp"
#include "nst/stats.hpp"
#include "nst/tree.hpp"

namespace nst {

// masses sorted decreasing on construction; total may fall short of 1
// (dissipative outputs) but never exceeds it beyond rounding
class MassPartition {
 public:
  MassPartition() = default;

  explicit MassPartition(std::vector<double> masses) : masses_(std::move(masses)) {
    for (double m : masses_)
      if (!(m >= 0.0)) throw std::invalid_argument("negative fragment mass");
    std::sort(masses_.begin(), masses_.end(), std::greater<>());
    double total = 0.0;
    for (double m : masses_) total += m;
    if (total > 1.0 + 1e-12) throw std::invalid_argument("fragment masses exceed 1");
  }

  const std::vector<double>& values() const noexcept { return masses_; }
  std::size_t size() const noexcept { return masses_.size(); }
  double operator[](std::size_t i) const { return masses_.at(i); }

  double total() const noexcept {
    double t = 0.0;
    for (double m : masses_) t += m;
    return t;
  }

  std::size_t positive_count() const noexcept {
    std::size_t c = 0;
    for (double m : masses_)
      if (m > 0.0) ++c;
    return c;
  }

 private:
  std::vector<double> masses_;
};

struct FragRow {
  double threshold;
  MassPartition masses;
};

using FragProfile = std::vector<FragRow>;

// Connected components of { v : dist(v, root)/scale > t }, each sorted
// ascending, listed by smallest member. The root always drops out.
inline std::vector<std::vector<VertexId>> height_components(const GrowthTree& t,
                                                            VertexId root, double threshold,
                                                            double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  const auto dist = bfs_distances(t, root);
  const std::uint32_t nv = t.vertex_count();
  std::vector<char> alive(nv, 0);
  for (VertexId v = 0; v < nv; ++v)
    alive[v] = static_cast<double>(dist[v]) / scale > threshold ? 1 : 0;

  std::vector<std::vector<VertexId>> out;
  std::vector<char> seen(nv, 0);
  for (VertexId s = 0; s < nv; ++s) {
    if (!alive[s] || seen[s]) continue;
    std::vector<VertexId> comp;
    std::queue<VertexId> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const VertexId v = q.front();
      q.pop();
      comp.push_back(v);
      for (VertexId w : t.neighbors(v)) {
        if (!alive[w] || seen[w]) continue;
        seen[w] = 1;
        q.push(w);
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

// Component masses above each threshold. A component weighs the number of
// tree leaves it holds over n+1, so the full-mass row at t=0 reads n/(n+1):
// the root leaf sits at height 0 and is gone from every row.
inline FragProfile frag_profile(const GrowthTree& t, VertexId root,
                                const std::vector<double>& thresholds, double scale) {
  if (root >= t.vertex_count() || !t.is_leaf(root))
    throw std::invalid_argument("root must be a leaf");
  const double denom = static_cast<double>(t.step()) + 1.0;
  FragProfile profile;
  profile.reserve(thresholds.size());
  for (double th : thresholds) {
    std::vector<double> masses;
    for (const auto& comp : height_components(t, root, th, scale)) {
      std::uint32_t leaves = 0;
      for (VertexId v : comp)
        if (t.is_leaf(v)) ++leaves;
      if (leaves > 0) masses.push_back(static_cast<double>(leaves) / denom);
    }
    profile.push_back({th, MassPartition(std::move(masses))});
  }
  return profile;
}

// Fraction of all n+1 leaves whose closest kept vertex lies in the given
// connected piece of the kept subtree. Ties go to the vertex a breadth-first
// search from all kept vertices, seeded and expanded in arena-id order,
// reaches first; any fixed rule keeps the pieces summing to 1.
inline double projected_mass(const ColoredTree& colored,
                             const std::vector<VertexId>& component) {
  const GrowthTree& t = colored.tree();
  detail::require_finalized(t);
  if (component.empty()) throw std::invalid_argument("empty component");
  std::vector<VertexId> sorted = component;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] >= t.vertex_count() || !colored.vertex_is_blue(sorted[i]))
      throw std::invalid_argument("component must consist of kept vertices");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw std::invalid_argument("duplicate vertex in component");
  }

  const std::uint32_t nv = t.vertex_count();
  // connectivity inside the kept subtree; tree paths between kept vertices stay kept
  {
    std::vector<char> in_comp(nv, 0);
    for (VertexId v : sorted) in_comp[v] = 1;
    std::vector<char> seen(nv, 0);
    std::queue<VertexId> q;
    q.push(sorted.front());
    seen[sorted.front()] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
      const VertexId v = q.front();
      q.pop();
      for (VertexId w : t.neighbors(v)) {
        if (!in_comp[w] || seen[w]) continue;
        seen[w] = 1;
        ++reached;
        q.push(w);
      }
    }
    if (reached != sorted.size()) throw std::invalid_argument("component is not connected");
  }

  std::vector<VertexId> gate(nv, kNoVertex);
  std::queue<VertexId> q;
  for (VertexId v : colored.blue_vertices()) {  // ascending
    gate[v] = v;
    q.push(v);
  }
  while (!q.empty()) {
    const VertexId v = q.front();
    q.pop();
    for (VertexId w : t.neighbors(v)) {
      if (gate[w] != kNoVertex) continue;
      gate[w] = gate[v];
      q.push(w);
    }
  }

  std::vector<char> in_comp(nv, 0);
  for (VertexId v : sorted) in_comp[v] = 1;
  std::uint32_t count = 0;
  for (VertexId l : t.leaf_order())
    if (in_comp[gate[l]]) ++count;
  return static_cast<double>(count) / (static_cast<double>(t.step()) + 1.0);
}

// Indices of s drawn without replacement, each step proportional to the
// remaining masses; zero entries trail in index order.
inline std::vector<std::uint32_t> size_biased_reorder(const MassPartition& s, RngStream& rng) {
  if (s.positive_count() == 0) throw std::invalid_argument("nothing to reorder");
  const auto& v = s.values();
  std::vector<std::uint32_t> remaining(v.size());
  for (std::uint32_t i = 0; i < v.size(); ++i) remaining[i] = i;
  std::vector<std::uint32_t> order;
  order.reserve(v.size());
  double total = s.total();
  while (!remaining.empty()) {
    if (total <= 0.0) {
      for (std::uint32_t i : remaining) order.push_back(i);
      break;
    }
    double u = rng.next_unit() * total;
    std::size_t pick = remaining.size() - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      acc += v[remaining[j]];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    const std::uint32_t idx = remaining[pick];
    order.push_back(idx);
    total -= v[idx];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return order;
}

// Size-biased reorder of the positive entries, unconditional keep of the
// first two, then entry k survives w.p. accept(k, kept+1). At the upper
// boundary that probability is 0 for every k >= 3: two fragments remain.
inline MassPartition dissipative_extract(const MassPartition& s, double alpha,
                                         double alpha_prime, RngStream& rng) {
  const AcceptanceTable table(alpha, alpha_prime);
  std::vector<double> positives;
  for (double m : s.values())
    if (m > 0.0) positives.push_back(m);
  if (positives.size() <= 2) return MassPartition(std::move(positives));

  const auto order = size_biased_reorder(MassPartition(positives), rng);
  std::vector<double> kept;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const double value = positives[order[pos]];
    if (pos < 2) {
      kept.push_back(value);
      continue;
    }
    const auto d = static_cast<std::uint32_t>(pos + 1);
    const auto d_prime = static_cast<std::uint32_t>(kept.size() + 1);
    if (rng.next_unit() < table(d, d_prime)) kept.push_back(value);
  }
  return MassPartition(std::move(kept));
}

struct MalthusReport {
  double alpha;
  double alpha_prime;
  double target;  // ratio of the two growth exponents
  double mean_slope;
  double slope_sd;
  double stderr_;
  std::size_t replicas;
  std::vector<std::uint32_t> checkpoints;
};

namespace detail {

inline std::vector<std::uint32_t> geometric_checkpoints(std::uint32_t lo, std::uint32_t hi,
                                                        std::size_t points) {
  std::vector<std::uint32_t> out;
  const double llo = std::log(static_cast<double>(lo));
  const double lhi = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto c = static_cast<std::uint32_t>(std::lround(std::exp(llo + f * (lhi - llo))));
    if (out.empty() || c > out.back()) out.push_back(c);
  }
  return out;
}

}  // namespace detail

// One replica's fitted slope of log kept-leaf count against log tree size.
inline double malthus_slope(double alpha, double alpha_prime,
                            const std::vector<std::uint32_t>& checkpoints, std::uint64_t seed,
                            std::uint64_t replica) {
  CoupledChain chain(alpha, alpha_prime, checkpoints.back(), seed, replica);
  std::vector<double> xs(checkpoints.begin(), checkpoints.end());
  std::vector<double> ys;
  ys.reserve(checkpoints.size());
  for (std::uint32_t c : checkpoints) {
    chain.run_to(c);
    ys.push_back(static_cast<double>(chain.state().L()));
  }
  return fit_loglog(xs, ys).slope;
}

// Fits per replica over a geometric grid from 10^3 to n and averages.
inline MalthusReport malthus_diagnostic(double alpha, double alpha_prime, std::uint32_t n,
                                        std::size_t replicas, std::uint64_t seed) {
  if (n < 2000) throw std::invalid_argument("need n >= 2000 for the log-log fit");
  if (replicas < 2) throw std::invalid_argument("need >= 2 replicas");
  const auto checkpoints = detail::geometric_checkpoints(1000, n, 12);
  std::vector<double> slopes;
  slopes.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r)
    slopes.push_back(malthus_slope(alpha, alpha_prime, checkpoints, seed, r));
  const auto ms = mean_stderr(slopes);
  const double ab = 1.0 - 1.0 / alpha;
  const double abp = 1.0 - 1.0 / alpha_prime;
  return {alpha,
          alpha_prime,
          ab / abp,
          ms.mean,
          ms.stderr_ * std::sqrt(static_cast<double>(replicas)),
          ms.stderr_,
          replicas,
          checkpoints};
}

}  // namespace nst
