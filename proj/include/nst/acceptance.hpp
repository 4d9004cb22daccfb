#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nst/distributions.hpp"
#include "nst/experiment.hpp"
#include "nst/fragmentation.hpp"
#include "nst/marchal.hpp"
#include "nst/parallel.hpp"
#include "nst/pruning.hpp"
#include "nst/shape.hpp"
#include "nst/stats.hpp"

namespace nst {

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

namespace acceptance {

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// 1. Exact shape-law normalization at four and five leaves.
inline CriterionResult exact_normalization() {
  double worst = 0.0;
  for (double alpha : {1.3, 1.5, 1.9, 2.0}) {
    for (std::uint32_t leaves : {4u, 5u}) {
      double sum = 0.0;
      for (const auto& shape : enumerate_labeled_shapes(leaves))
        sum += tree_probability(shape, alpha);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {1, "exact-normalization", worst < 1e-12, "max |sum-1| = " + fmt(worst)};
}

// 2. Empirical four-leaf frequencies against the exact law.
inline CriterionResult growth_law_frequencies(unsigned workers) {
  const double alpha = 1.5;
  const std::size_t replicas = 100000;
  const std::uint64_t seed = 1002;
  auto codes = parallel_map(replicas, workers, [&](std::size_t r) {
    auto t = grow(alpha, 3, seed, r);
    t.finalize();
    return shape_of(t).code;
  });
  std::map<std::string, std::uint64_t> counts;
  for (const auto& c : codes) ++counts[c];
  double worst_z = 0.0;
  for (const auto& shape : enumerate_labeled_shapes(4)) {
    const double p = tree_probability(shape, alpha);  // 0.25 for each of the four
    const double sd = std::sqrt(static_cast<double>(replicas) * p * (1.0 - p));
    const auto it = counts.find(shape.code);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    worst_z = std::max(worst_z, std::abs(c - replicas * p) / sd);
  }
  return {2, "growth-law-frequencies", worst_z < 4.0, "max |z| = " + fmt(worst_z)};
}

// 3. Running total weight stays n*alpha - 1 along million-step runs.
inline CriterionResult weight_invariant() {
  double worst = 0.0;
  for (double alpha : {1.2, 1.7, 2.0}) {
    GrowthTree tree(alpha);
    tree.reserve(1000000);
    WeightIndex weights(alpha, 3000008);
    weights.register_edge(0);
    RngStream select = make_stream(1003, 0, kSelectLabel);
    while (tree.step() < 1000000) {
      marchal_step(tree, weights, select);
      if (tree.step() % 65536 == 0 || tree.step() == 1000000) {
        const double expected = static_cast<double>(tree.step()) * alpha - 1.0;
        const double rel = std::abs(weights.recompute_total() - expected) / expected;
        worst = std::max(worst, rel);
      }
    }
  }
  return {3, "weight-invariant", worst < 1e-9, "max rel drift = " + fmt(worst)};
}

// 4. After-the-fact pruning reproduces the grown coloring exactly.
inline CriterionResult prune_equals_coupling(unsigned workers) {
  const std::size_t seeds = 1000;
  bool all = true;
  for (auto [alpha, alpha_prime] : std::vector<std::pair<double, double>>{{1.3, 1.6},
                                                                          {1.5, 2.0}}) {
    auto ok = parallel_map(seeds, workers, [&, a = alpha, ap = alpha_prime](std::size_t r) {
      return static_cast<std::uint8_t>(coupling_equality_check(a, ap, 200, 1004, r));
    });
    for (auto v : ok) all = all && v != 0;
  }
  return {4, "prune-equals-coupling", all,
          all ? "2000/2000 colorings identical" : "mismatch found"};
}

// 5. The kept-subtree weight identity balances at every step.
inline CriterionResult kept_weight_identity(unsigned workers) {
  auto gaps = parallel_map(100, workers, [](std::size_t r) {
    CoupledChain chain(1.5, 1.8, 1000, 1005, r);
    double worst = 0.0;
    while (chain.state().tree().step() < 1000) {
      chain.step();
      worst = std::max(worst, std::abs(chain.state().blue_weight_gap()));
    }
    chain.state().validate();
    return worst;
  });
  double worst = 0.0;
  for (double g : gaps) worst = std::max(worst, g);
  return {5, "kept-weight-identity", worst < 1e-9, "max |gap| = " + fmt(worst)};
}

// 6. Kept-leaf counts match the seating-process oracle in distribution.
inline CriterionResult seating_oracle(unsigned workers) {
  const double alpha = 1.5, alpha_prime = 1.8;
  const double ab = 1.0 - 1.0 / alpha, abp = 1.0 - 1.0 / alpha_prime;
  const std::uint32_t customers = 50;
  const std::size_t samples = 100000;
  const std::uint64_t seed = 1006;

  auto chain = parallel_map(samples, workers, [&](std::size_t r) {
    CoupledChain c(alpha, alpha_prime, customers + 1, seed, r);
    c.run_to(customers + 1);
    return static_cast<std::uint32_t>(c.state().L() - 1);
  });
  auto crp = parallel_map(samples, workers, [&](std::size_t r) {
    RngStream rng(derive_seed(seed, r, "crp"), "crp");
    return crp_tables(ab / abp, ab, customers, rng);
  });
  auto repeat = parallel_map(samples, workers, [&](std::size_t r) {
    RngStream rng(derive_seed(seed, r, "crp-floor"), "crp-floor");
    return crp_tables(ab / abp, ab, customers, rng);
  });
  const double tv_cross = total_variation(chain, crp);
  const double tv_floor = total_variation(crp, repeat);
  return {6, "seating-oracle", tv_cross < 0.02,
          "tv = " + fmt(tv_cross) + ", self-comparison floor = " + fmt(tv_floor)};
}

// 7. Closed-form moment identities across an admissible parameter grid.
inline CriterionResult moment_identities() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.5 * i);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double alpha = 1.15 + 0.15 * i;
    for (int j = 1; j <= 5; ++j) {
      const double alpha_prime = alpha + (2.0 - alpha) * j / 5.0;
      worst = std::max(worst, max_abs_z(identity_suite(alpha, alpha_prime, grid)));
    }
  }
  return {7, "moment-identities", worst < 1e-10, "max rel err = " + fmt(worst)};
}

// 8. Mean of the renormalized kept-leaf count against its analytic limit,
//    with the finite-size drift measured rather than assumed.
inline CriterionResult kept_count_mean(unsigned workers) {
  const double alpha = 1.5, alpha_prime = 2.0;
  const std::size_t replicas = 10000;
  const std::uint64_t seed = 1008;
  const double exponent = (1.0 - 1.0 / alpha) / (1.0 - 1.0 / alpha_prime);  // 2/3

  struct Pair {
    double at_mid;
    double at_end;
  };
  auto values = parallel_map(replicas, workers, [&](std::size_t r) {
    CoupledChain chain(alpha, alpha_prime, 100000, seed, r);
    chain.run_to(10000);
    const double mid = static_cast<double>(chain.state().L()) / std::pow(10000.0, exponent);
    chain.run_to(100000);
    const double end = static_cast<double>(chain.state().L()) / std::pow(100000.0, exponent);
    return Pair{mid, end};
  });
  std::vector<double> mids, ends;
  mids.reserve(replicas);
  ends.reserve(replicas);
  for (const auto& v : values) {
    mids.push_back(v.at_mid);
    ends.push_back(v.at_end);
  }
  const auto mid = mean_stderr(mids);
  const auto end = mean_stderr(ends);
  const double drift = std::abs(mid.mean - end.mean);
  const double target = 0.5 * std::tgamma(1.0 / 3.0);
  const double err = std::abs(end.mean - target);
  const double budget = 3.0 * end.stderr_ + drift;
  return {8, "kept-count-mean", err < budget,
          "mean = " + fmt(end.mean) + ", target = " + fmt(target) + ", |err| = " + fmt(err) +
              ", budget = " + fmt(budget) + " (3se + drift " + fmt(drift) + ")"};
}

// 9. Fitted growth exponent of the kept-leaf count.
inline CriterionResult growth_exponent(unsigned workers) {
  const std::size_t replicas = 200;
  const std::uint64_t seed = 1009;
  const auto checkpoints = detail::geometric_checkpoints(1000, 100000, 12);
  bool ok = true;
  std::string detail_text;
  for (auto [alpha, alpha_prime] : std::vector<std::pair<double, double>>{{1.5, 2.0},
                                                                          {1.2, 1.6}}) {
    auto slopes = parallel_map(replicas, workers, [&, a = alpha, ap = alpha_prime](std::size_t r) {
      return malthus_slope(a, ap, checkpoints, seed, r);
    });
    const auto ms = mean_stderr(slopes);
    const double target = (1.0 - 1.0 / alpha) / (1.0 - 1.0 / alpha_prime);
    ok = ok && std::abs(ms.mean - target) < 0.05;
    if (!detail_text.empty()) detail_text += "; ";
    detail_text += "slope(" + fmt(alpha) + "," + fmt(alpha_prime) + ") = " + fmt(ms.mean) +
                   " vs " + fmt(target);
  }
  return {9, "growth-exponent", ok, detail_text};
}

// 10. Renormalized two-leaf distances contract and match the endpoint moment.
inline CriterionResult distance_scaling(unsigned workers) {
  const double alpha = 1.5;
  const double ab = 1.0 - 1.0 / alpha;
  const std::size_t replicas = 500;
  const std::uint64_t seed = 1010;
  const std::vector<std::uint32_t> checkpoints{1000, 4000, 10000, 40000, 100000};

  auto traces = parallel_map(replicas, workers, [&](std::size_t r) {
    return endpoint_distance_trace(alpha, checkpoints, seed, r);
  });
  auto scaled = [&](std::uint64_t h, std::uint32_t n) {
    return static_cast<double>(h) / std::pow(static_cast<double>(n), ab);
  };
  std::vector<double> diff_small, diff_large, renorm_end;
  for (const auto& tr : traces) {
    diff_small.push_back(std::abs(scaled(tr[1], 4000) - scaled(tr[0], 1000)));
    diff_large.push_back(std::abs(scaled(tr[3], 40000) - scaled(tr[2], 10000)));
    renorm_end.push_back(scaled(tr[4], 100000) / alpha);
  }
  const auto small = mean_stderr(diff_small);
  const auto large = mean_stderr(diff_large);
  const auto end = mean_stderr(renorm_end);
  const double target = i_moment(alpha, 1.0);
  const bool cauchy = large.mean < small.mean;
  const bool mean_ok = std::abs(end.mean - target) < 3.0 * end.stderr_;
  return {10, "distance-scaling", cauchy && mean_ok,
          "mean |step| " + fmt(small.mean) + " -> " + fmt(large.mean) + "; mean = " +
              fmt(end.mean) + " vs " + fmt(target) + " (3se = " + fmt(3.0 * end.stderr_) + ")"};
}

// 11. Pruned subtrees sit within the covering radius of the early leaves.
inline CriterionResult graft_distance_bound(unsigned workers) {
  const std::size_t instances = 500;
  auto ok = parallel_map(instances, workers, [](std::size_t r) {
    auto t = grow(1.5, 300, 1011, r);
    t.finalize();
    AcceptanceTable table(1.5, 1.8);
    auto u = make_stream(1011, r, kULabel);
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(r % 300);
    const auto b = lipschitz_bound_check(t, k, 300, table, u);
    return static_cast<std::uint8_t>(b.hausdorff <= b.radius);
  });
  bool all = true;
  for (auto v : ok) all = all && v != 0;
  return {11, "graft-distance-bound", all,
          all ? "500/500 bounded" : "bound violated"};
}

// 12. Tighter thresholds prune nested subsets; the boundary one is binary.
inline CriterionResult threshold_nesting(unsigned workers) {
  const std::size_t seeds = 500;
  auto ok = parallel_map(seeds, workers, [](std::size_t r) {
    auto t = grow(1.3, 500, 1012, r);
    t.finalize();
    auto u = make_stream(1012, r, kULabel);
    auto rs = nested_prune(t, 500, 1.3, {1.5, 1.8, 2.0}, u);  // throws if inclusion breaks
    const auto& last = rs.back();
    auto shape = shape_of_subset(t, last.blue_vertices, last.kept_leaves);
    for (std::uint32_t d : shape.internal_degrees)
      if (d != 3) return static_cast<std::uint8_t>(0);
    return static_cast<std::uint8_t>(1);
  });
  bool all = true;
  for (auto v : ok) all = all && v != 0;
  return {12, "threshold-nesting", all,
          all ? "500/500 nested, boundary member binary" : "violation found"};
}

// 13. Fragment masses book-keep exactly; the dissipative step keeps the
//     third fragment at its formula rate.
inline CriterionResult fragmentation_bookkeeping() {
  bool ok = true;
  std::string why;

  for (std::uint64_t r = 0; r < 20 && ok; ++r) {
    auto t = grow(1.5, 300, 1013, r);
    t.finalize();
    const double scale = std::pow(300.0, 1.0 / 3.0);
    const std::vector<double> ts{0.0, 0.5, 1.0, 1.5, 2.0};
    auto profile = frag_profile(t, t.leaf_order()[0], ts, scale);
    if (profile[0].masses.total() != 300.0 / 301.0) {
      ok = false;
      why = "t=0 mass off";
    }
    double prev = 2.0;
    for (const auto& row : profile) {
      if (row.masses.total() > prev + 1e-15) {
        ok = false;
        why = "mass grew with the threshold";
      }
      prev = row.masses.total();
    }
    for (std::size_t i = 1; i < ts.size() && ok; ++i) {
      auto coarse = height_components(t, t.leaf_order()[0], ts[i - 1], scale);
      for (const auto& f : height_components(t, t.leaf_order()[0], ts[i], scale)) {
        int parents = 0;
        for (const auto& c : coarse)
          if (std::includes(c.begin(), c.end(), f.begin(), f.end())) ++parents;
        if (parents != 1) {
          ok = false;
          why = "fragment not nested in one parent";
        }
      }
    }
  }

  auto rng = make_stream(1013, 0, "dissipative");
  for (int i = 0; i < 2000 && ok; ++i) {
    auto out = dissipative_extract(MassPartition({0.3, 0.3, 0.2, 0.2}), 1.5, 2.0, rng);
    if (out.size() != 2) {
      ok = false;
      why = "boundary extraction kept != 2";
    }
  }
  std::size_t kept3 = 0;
  const std::size_t draws = 100000;
  MassPartition s({0.4, 0.3, 0.3});
  for (std::size_t i = 0; i < draws; ++i)
    if (dissipative_extract(s, 1.5, 1.8, rng).size() == 3) ++kept3;
  const double rate = static_cast<double>(kept3) / static_cast<double>(draws);
  const double band = 3.0 * std::sqrt(0.25 * 0.75 / static_cast<double>(draws));
  if (std::abs(rate - 0.25) >= band) {
    ok = false;
    why = "third-keep rate " + fmt(rate) + " outside 0.25 +- " + fmt(band);
  }
  return {13, "fragmentation-bookkeeping", ok,
          ok ? "exact masses, nested refinement, keep rate " + fmt(rate) : why};
}

// 14. Same seed, different worker counts, byte-identical data files.
inline CriterionResult byte_determinism(const std::string& out_dir) {
  namespace fs = std::filesystem;
  bool ok = true;
  std::string detail_text;
  std::vector<ExperimentConfig> configs;
  {
    ExperimentConfig c;
    c.experiment = "coupling-equality";
    c.alpha = 1.5;
    c.alpha_prime = 1.8;
    c.n = 150;
    c.replicas = 50;
    c.seed = 1014;
    configs.push_back(c);
    c.experiment = "moment-identities";
    configs.push_back(c);
    c.experiment = "crp-compare";
    c.n = 20;
    c.replicas = 500;
    configs.push_back(c);
    c.experiment = "frag-profile";
    c.n = 200;
    c.replicas = 5;
    configs.push_back(c);
  }
  for (auto cfg : configs) {
    cfg.out = (fs::path(out_dir) / (cfg.experiment + "-w1")).string();
    const auto m1 = run_experiment(cfg, 1);
    cfg.out = (fs::path(out_dir) / (cfg.experiment + "-w3")).string();
    const auto m3 = run_experiment(cfg, 3);
    const bool same = m1.file_digests == m3.file_digests;
    ok = ok && same && m1.invariants_passed && m3.invariants_passed;
    if (!detail_text.empty()) detail_text += ", ";
    detail_text += cfg.experiment + (same ? " ok" : " DIFFERS");
  }
  return {14, "byte-determinism", ok, detail_text};
}

}  // namespace acceptance

inline std::vector<CriterionResult> run_acceptance(unsigned workers, const std::string& out_dir,
                                                   std::ostream& log) {
  std::vector<CriterionResult> results;
  auto record = [&](CriterionResult r) {
    log << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail
        << "\n";
    log.flush();
    results.push_back(std::move(r));
  };
  record(acceptance::exact_normalization());
  record(acceptance::growth_law_frequencies(workers));
  record(acceptance::weight_invariant());
  record(acceptance::prune_equals_coupling(workers));
  record(acceptance::kept_weight_identity(workers));
  record(acceptance::seating_oracle(workers));
  record(acceptance::moment_identities());
  record(acceptance::kept_count_mean(workers));
  record(acceptance::growth_exponent(workers));
  record(acceptance::distance_scaling(workers));
  record(acceptance::graft_distance_bound(workers));
  record(acceptance::threshold_nesting(workers));
  record(acceptance::fragmentation_bookkeeping());
  record(acceptance::byte_determinism(out_dir));
  return results;
}

inline bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return results.size() == 14;
}

}  // namespace nst
