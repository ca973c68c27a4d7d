#include "gridsched/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace gridsched {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double nearest_rank_quantile(std::vector<double> xs, double c) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  auto rank = static_cast<std::size_t>(std::ceil(c * n));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

double normal_critical(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must be in (0,1)");
  }
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 * (1.0 + confidence));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double skewness(std::span<const double> xs) {
  if (xs.size() < 3) return 0.0;
  const double m = mean(xs);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const auto n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

double autocorrelation(std::span<const double> xs, int lag) {
  const auto n = xs.size();
  if (lag < 0 || static_cast<std::size_t>(lag) >= n) throw std::invalid_argument("bad lag");
  const double m = mean(xs);
  double c0 = 0.0;
  double ck = 0.0;
  for (std::size_t t = 0; t < n; ++t) c0 += (xs[t] - m) * (xs[t] - m);
  for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
    ck += (xs[t] - m) * (xs[t - lag] - m);
  }
  return c0 > 0.0 ? ck / c0 : 0.0;
}

}  // namespace gridsched
