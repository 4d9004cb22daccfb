#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nst/coupling.hpp"
#include "nst/rng.hpp"
#include "nst/stats.hpp"

namespace nst {

// moment index of the size-biased stick family; beta in (0,1), theta > -beta
struct MLParams {
  double beta;
  double theta;

  MLParams(double beta_, double theta_) : beta(beta_), theta(theta_) {
    if (!(beta > 0.0) || !(beta < 1.0)) throw std::invalid_argument("beta outside (0,1)");
    if (!(theta > -beta)) throw std::invalid_argument("theta must exceed -beta");
  }
};

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 1.0) || !(alpha <= 2.0)) throw std::invalid_argument("alpha outside (1,2]");
}

inline void check_order(double p) {
  if (!(p >= 0.0)) throw std::invalid_argument("moment order must be >= 0");
}

inline double alpha_bar(double alpha) { return 1.0 - 1.0 / alpha; }

}  // namespace detail

inline double ml_moment(const MLParams& params, double p) {
  detail::check_order(p);
  const double b = params.beta, t = params.theta;
  return std::exp(std::lgamma(t + 1.0) + std::lgamma(t / b + p + 1.0) -
                  std::lgamma(t / b + 1.0) - std::lgamma(t + p * b + 1.0));
}

inline double gamma_moment(double a, double p) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma parameter must be > 0");
  detail::check_order(p);
  return std::exp(std::lgamma(a + p) - std::lgamma(a));
}

inline double j_moment(double alpha, double p) {
  detail::check_alpha(alpha);
  detail::check_order(p);
  const double ab = detail::alpha_bar(alpha);
  return std::pow(alpha, p) * std::exp(std::lgamma((p + 1.0) * ab + 1.0) - std::lgamma(ab + 1.0));
}

inline double q_moment(double alpha, double alpha_prime, double p) {
  detail::check_alpha(alpha);
  detail::check_alpha(alpha_prime);
  if (!(alpha < alpha_prime)) throw std::invalid_argument("need alpha < alpha_prime");
  detail::check_order(p);
  const double ab = detail::alpha_bar(alpha);
  const double abp = detail::alpha_bar(alpha_prime);
  return std::pow(alpha_prime / alpha, p) * ml_moment(MLParams(ab / abp, ab), p * abp);
}

inline double i_moment(double alpha, double p) {
  detail::check_alpha(alpha);
  detail::check_order(p);
  const double ab = detail::alpha_bar(alpha);
  return ml_moment(MLParams(ab, ab), p) / std::pow(alpha, p);
}

struct MomentReport {
  std::string label;
  double p;
  double analytic;
  double estimate;
  double stderr_;      // 0 for closed-form rows
  std::size_t replicas;
  double z;            // sampled rows: (estimate-analytic)/stderr; closed-form rows: relative error
};

namespace detail {

inline MomentReport closed_form_report(std::string label, double p, double lhs, double rhs) {
  return {std::move(label), p, lhs, rhs, 0.0, 0, (rhs - lhs) / std::abs(lhs)};
}

}  // namespace detail

inline MomentReport monte_carlo_report(std::string label, double p, double analytic,
                                       const std::vector<double>& draws) {
  if (draws.size() < 2) throw std::invalid_argument("need >= 2 draws");
  std::vector<double> powered(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) powered[i] = std::pow(draws[i], p);
  const auto ms = mean_stderr(powered);
  const double z = ms.stderr_ > 0.0 ? (ms.mean - analytic) / ms.stderr_
                                    : (ms.mean == analytic ? 0.0 : std::numeric_limits<double>::infinity());
  return {std::move(label), p, analytic, ms.mean, ms.stderr_, ms.count, z};
}

// Four closed-form cross-checks per order p. The labels name the relation:
// composition of the two-step stick law, transport of the endpoint factor,
// transport of the height factor, and the height-times-endpoint product.
inline std::vector<MomentReport> identity_suite(double alpha, double alpha_prime,
                                                const std::vector<double>& p_grid) {
  detail::check_alpha(alpha);
  detail::check_alpha(alpha_prime);
  if (!(alpha < alpha_prime)) throw std::invalid_argument("need alpha < alpha_prime");
  const double a = detail::alpha_bar(alpha);
  const double b = detail::alpha_bar(alpha_prime);
  std::vector<MomentReport> out;
  out.reserve(4 * p_grid.size());
  for (double p : p_grid) {
    out.push_back(detail::closed_form_report(
        "ml-compose", p, ml_moment(MLParams(a, a), p),
        ml_moment(MLParams(a / b, a), p * b) * ml_moment(MLParams(b, b), p)));
    out.push_back(detail::closed_form_report(
        "i-transport", p, i_moment(alpha, p),
        q_moment(alpha, alpha_prime, p) * i_moment(alpha_prime, p)));
    out.push_back(detail::closed_form_report(
        "j-transport", p, j_moment(alpha, p) * q_moment(alpha, alpha_prime, p),
        j_moment(alpha_prime, p)));
    out.push_back(detail::closed_form_report(
        "ji-product", p, j_moment(alpha, p) * i_moment(alpha, p), gamma_moment(2.0, p)));
  }
  return out;
}

inline double max_abs_z(const std::vector<MomentReport>& reports) {
  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, std::abs(r.z));
  return worst;
}

inline double normal_sample(RngStream& rng) {
  double u1;
  do {
    u1 = rng.next_unit();
  } while (u1 <= 0.0);
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Marsaglia-Tsang squeeze; the a < 1 boost costs one extra uniform
inline double gamma_sample(double a, RngStream& rng) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma parameter must be > 0");
  if (a < 1.0) {
    double u;
    do {
      u = rng.next_unit();
    } while (u <= 0.0);
    return gamma_sample(a + 1.0, rng) * std::pow(u, 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal_sample(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u;
    do {
      u = rng.next_unit();
    } while (u <= 0.0);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// One approximate draw of the renormalized kept-leaf count; bias decays with n
// (no closed-form sampler exists for this law, the chain is its construction).
inline double ml_sample_via_chain(double alpha, double alpha_prime, std::uint32_t n,
                                  std::uint64_t seed, std::uint64_t replica = 0) {
  CoupledChain chain(alpha, alpha_prime, n, seed, replica);
  chain.run_to(n);
  const double exponent =
      detail::alpha_bar(alpha) / detail::alpha_bar(alpha_prime);
  return static_cast<double>(chain.state().L()) / std::pow(static_cast<double>(n), exponent);
}

// Seating process: customer m+1 opens table k+1 w.p. (theta+k*beta)/(theta+m).
inline std::uint32_t crp_tables(double beta, double theta, std::uint32_t customers,
                                RngStream& rng) {
  if (!(beta > 0.0) || !(beta < 1.0)) throw std::invalid_argument("beta outside (0,1)");
  if (!(theta > -beta)) throw std::invalid_argument("theta must exceed -beta");
  if (customers < 1) throw std::invalid_argument("need at least one customer");
  std::uint32_t k = 1;
  for (std::uint32_t m = 1; m < customers; ++m) {
    const double p = (theta + k * beta) / (theta + m);
    if (rng.next_unit() < p) ++k;
  }
  return k;
}

}  // namespace nst
