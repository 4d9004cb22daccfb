#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nst/distributions.hpp"
#include "nst/stats.hpp"

using namespace nst;

TEST_CASE("parameter domains", "[distributions]") {
  REQUIRE_THROWS(MLParams(0.0, 0.5));
  REQUIRE_THROWS(MLParams(1.0, 0.5));
  REQUIRE_THROWS(MLParams(0.5, -0.5));
  REQUIRE_NOTHROW(MLParams(0.5, -0.4));
  REQUIRE_THROWS(ml_moment(MLParams(0.5, 0.5), -1.0));
  REQUIRE_THROWS(j_moment(1.0, 1.0));
  REQUIRE_THROWS(j_moment(2.1, 1.0));
  REQUIRE_THROWS(q_moment(1.8, 1.5, 1.0));
  REQUIRE_THROWS(q_moment(1.5, 1.5, 1.0));
  REQUIRE_THROWS(i_moment(0.9, 1.0));
  REQUIRE_THROWS(gamma_moment(0.0, 1.0));
}

TEST_CASE("pinned moment values", "[distributions]") {
  using Catch::Matchers::WithinRel;
  REQUIRE(ml_moment(MLParams(0.5, 0.5), 0.0) == 1.0);
  REQUIRE_THAT(ml_moment(MLParams(0.5, 0.5), 2.0), WithinRel(4.0, 1e-13));
  REQUIRE_THAT(ml_moment(MLParams(1.0 / 3.0, 1.0 / 3.0), 1.0),
               WithinRel(1.9783642596467901, 1e-13));
  REQUIRE_THAT(j_moment(2.0, 1.0), WithinRel(2.2567583341910251, 1e-13));
  REQUIRE_THAT(j_moment(1.5, 1.0), WithinRel(1.5164042644682678, 1e-13));
  REQUIRE(j_moment(1.7, 0.0) == 1.0);
  REQUIRE(q_moment(1.5, 1.8, 0.0) == 1.0);
  REQUIRE_THAT(i_moment(1.5, 1.0), WithinRel(1.3189095064311934, 1e-13));
  REQUIRE_THAT(i_moment(2.0, 1.0), WithinRel(0.8862269254527580, 1e-13));
  REQUIRE_THAT(gamma_moment(2.0, 1.0), WithinRel(2.0, 1e-14));
  REQUIRE_THAT(gamma_moment(2.0, 2.0), WithinRel(6.0, 1e-14));
  // the kept-fraction mean that multiplies the n^(2/3) growth law
  REQUIRE_THAT(ml_moment(MLParams(2.0 / 3.0, 1.0 / 3.0), 1.0),
               WithinRel(1.3394692673538738, 1e-13));
}

TEST_CASE("closed-form identity grid", "[distributions]") {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.5 * i);
  auto reports = identity_suite(1.4, 1.7, grid);
  REQUIRE(reports.size() == 80);
  REQUIRE(max_abs_z(reports) < 1e-10);
  for (const auto& r : reports) {
    REQUIRE(r.replicas == 0);
    REQUIRE(r.stderr_ == 0.0);
  }
  // order zero reads 1 = 1
  auto zero = identity_suite(1.2, 1.9, {0.0});
  for (const auto& r : zero) {
    REQUIRE(r.analytic == 1.0);
    REQUIRE_THAT(r.estimate, Catch::Matchers::WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("log-moments are nondecreasing and convex on a grid", "[distributions]") {
  for (auto params : {MLParams(0.5, 0.5), MLParams(1.0 / 3.0, 1.0 / 3.0),
                      MLParams(2.0 / 3.0, 1.0 / 3.0)}) {
    double prev = std::log(ml_moment(params, 0.0));
    std::vector<double> logs{prev};
    for (int i = 1; i <= 12; ++i) {
      const double cur = std::log(ml_moment(params, 0.5 * i));
      REQUIRE(cur >= prev - 1e-12);
      logs.push_back(cur);
      prev = cur;
    }
    for (size_t i = 1; i + 1 < logs.size(); ++i)
      REQUIRE(2.0 * logs[i] <= logs[i - 1] + logs[i + 1] + 1e-12);
  }
}

TEST_CASE("gamma sampler matches gamma moments", "[distributions]") {
  auto rng = make_stream(2024, 0, "gamma-test");
  const int draws = 200000;
  std::vector<double> xs(draws);
  for (auto& x : xs) x = gamma_sample(2.0, rng);
  for (double p : {1.0, 2.0, 3.0}) {
    auto report = monte_carlo_report("gamma2", p, gamma_moment(2.0, p), xs);
    CAPTURE(p, report.estimate, report.z);
    REQUIRE(std::abs(report.z) < 4.0);
  }
  // boosted branch below parameter one
  for (auto& x : xs) x = gamma_sample(0.5, rng);
  auto mean = monte_carlo_report("gamma-half", 1.0, 0.5, xs);
  auto second = monte_carlo_report("gamma-half", 2.0, 0.75, xs);
  REQUIRE(std::abs(mean.z) < 4.0);
  REQUIRE(std::abs(second.z) < 4.0);
  REQUIRE_THROWS(gamma_sample(0.0, rng));
}

TEST_CASE("height factor sampler agrees with its moment formula", "[distributions]") {
  // J = alpha * G^(1-1/alpha) with G gamma of parameter 2-1/alpha
  const double alpha = 1.5;
  const double ab = 1.0 - 1.0 / alpha;
  auto rng = make_stream(7, 0, "j-test");
  std::vector<double> xs(100000);
  for (auto& x : xs) x = alpha * std::pow(gamma_sample(1.0 + ab, rng), ab);
  for (double p : {1.0, 2.0}) {
    auto report = monte_carlo_report("j-sample", p, j_moment(alpha, p), xs);
    CAPTURE(p, report.estimate, report.z);
    REQUIRE(std::abs(report.z) < 4.0);
  }
}

TEST_CASE("chain sampler approaches the stick-law mean", "[distributions]") {
  const int replicas = 200;
  std::vector<double> xs(replicas);
  for (int r = 0; r < replicas; ++r)
    xs[r] = ml_sample_via_chain(1.5, 2.0, 2000, 31, static_cast<uint64_t>(r));
  auto ms = mean_stderr(xs);
  const double target = ml_moment(MLParams(2.0 / 3.0, 1.0 / 3.0), 1.0);
  CAPTURE(ms.mean, ms.stderr_, target);
  REQUIRE(std::abs(ms.mean - target) < 4.0 * ms.stderr_ + 0.02);  // 0.02 finite-size allowance
}

TEST_CASE("seating process basics", "[distributions]") {
  auto rng = make_stream(5, 0, "crp-test");
  REQUIRE(crp_tables(0.75, 1.0 / 3.0, 1, rng) == 1);
  REQUIRE_THROWS(crp_tables(1.5, 0.5, 10, rng));
  REQUIRE_THROWS(crp_tables(0.5, -0.6, 10, rng));
  REQUIRE_THROWS(crp_tables(0.5, 0.5, 0, rng));
  for (int i = 0; i < 50; ++i) {
    const uint32_t k = crp_tables(0.75, 1.0 / 3.0, 20, rng);
    REQUIRE(k >= 1);
    REQUIRE(k <= 20);
  }
}

TEST_CASE("seating process and kept-leaf counts agree in law", "[distributions]") {
  // both should draw the same integer law; the pinned run uses m=50 and 1e5 samples
  const double alpha = 1.5, alpha_prime = 1.8;
  const double ab = 1.0 - 1.0 / alpha, abp = 1.0 - 1.0 / alpha_prime;
  const uint32_t m = 20;
  const int samples = 20000;
  std::vector<uint32_t> from_crp(samples), from_chain(samples);
  auto rng = make_stream(99, 0, "crp-vs-chain");
  for (int i = 0; i < samples; ++i)
    from_crp[i] = crp_tables(ab / abp, ab, m, rng) + 1;
  for (int i = 0; i < samples; ++i) {
    auto trace = leaf_count_trace(alpha, alpha_prime, m + 1, 400000 + static_cast<uint64_t>(i));
    from_chain[i] = trace.counts[m];
  }
  const double tv = total_variation(from_crp, from_chain);
  CAPTURE(tv);
  REQUIRE(tv < 0.05);
}
