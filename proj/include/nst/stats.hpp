#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nst {

struct MeanStderr {
  double mean;
  double stderr_;  // 0 when count < 2
  std::size_t count;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of nothing");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0, xs.size()};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size())), xs.size()};
}

struct LogLogFit {
  double slope;
  double intercept;  // of log y on log x
};

inline LogLogFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("need >= 2 points");
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] <= 0.0 || ys[i] <= 0.0) throw std::domain_error("log-log needs positive data");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::domain_error("degenerate abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

struct ExponentFit {
  double slope;
  double intercept;
  double residual;  // root mean square in log space
};

// Least squares for value ~ c * n^slope; needs three points to say anything
// about the residual.
inline ExponentFit estimate_exponent(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 3) throw std::invalid_argument("need >= 3 points");
  std::vector<double> xs, ys;
  xs.reserve(series.size());
  ys.reserve(series.size());
  for (const auto& [n, value] : series) {
    xs.push_back(n);
    ys.push_back(value);
  }
  const auto fit = fit_loglog(xs, ys);
  double ss = 0.0;
  for (const auto& [n, value] : series) {
    const double r = std::log(value) - (fit.intercept + fit.slope * std::log(n));
    ss += r * r;
  }
  return {fit.slope, fit.intercept, std::sqrt(ss / static_cast<double>(series.size()))};
}

// Total variation between the empirical laws of two integer samples,
// on the exact histogram (values are small, no binning).
inline double total_variation(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  std::map<std::uint32_t, double> pa, pb;
  for (std::uint32_t x : a) pa[x] += 1.0 / static_cast<double>(a.size());
  for (std::uint32_t x : b) pb[x] += 1.0 / static_cast<double>(b.size());
  double tv = 0.0;
  for (const auto& [value, p] : pa) {
    auto it = pb.find(value);
    tv += std::abs(p - (it == pb.end() ? 0.0 : it->second));
  }
  for (const auto& [value, q] : pb)
    if (pa.find(value) == pa.end()) tv += q;
  return 0.5 * tv;
}

struct ValueCounts {
  std::uint32_t value;
  std::uint64_t count_a;
  std::uint64_t count_b;
};

struct DistributionComparison {
  double tv;
  std::vector<ValueCounts> rows;  // ascending by value
};

inline DistributionComparison compare_distributions(const std::vector<std::uint32_t>& a,
                                                    const std::vector<std::uint32_t>& b) {
  const double tv = total_variation(a, b);
  std::map<std::uint32_t, ValueCounts> merged;
  for (std::uint32_t x : a) {
    auto& row = merged.try_emplace(x, ValueCounts{x, 0, 0}).first->second;
    ++row.count_a;
  }
  for (std::uint32_t x : b) {
    auto& row = merged.try_emplace(x, ValueCounts{x, 0, 0}).first->second;
    ++row.count_b;
  }
  DistributionComparison out{tv, {}};
  out.rows.reserve(merged.size());
  for (const auto& [value, row] : merged) out.rows.push_back(row);
  return out;
}

}  // namespace nst
