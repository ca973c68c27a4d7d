#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gridsched/anomaly.hpp"

namespace gridsched {

void LowessConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0,1]");
  if (robustness_iters < 0) throw std::invalid_argument("robustness_iters must be >= 0");
  if (degree != 0 && degree != 1) throw std::invalid_argument("degree must be 0 or 1");
}

namespace {

double tricube(double u) {
  if (u >= 1.0) return 0.0;
  const double c = 1.0 - u * u * u;
  return c * c * c;
}

double bisquare(double u) {
  if (u >= 1.0) return 0.0;
  const double c = 1.0 - u * u;
  return c * c;
}

std::size_t neighbourhood_size(std::size_t n, const LowessConfig& cfg) {
  auto q = static_cast<std::size_t>(std::ceil(cfg.fraction * static_cast<double>(n)));
  q = std::max<std::size_t>(q, static_cast<std::size_t>(cfg.degree) + 1);
  q = std::max<std::size_t>(q, 2);
  return std::min(q, n);
}

// Distance to the q-th nearest index from i (self included) among 0..n-1.
std::size_t bandwidth(std::size_t i, std::size_t n, std::size_t q) {
  const std::size_t left = i;
  const std::size_t right = n - 1 - i;
  std::size_t h = 0;
  while (std::min(h, left) + std::min(h, right) + 1 < q) ++h;
  return h;
}

double fit_point(std::size_t i, std::span<const double> y, std::span<const double> robust,
                 std::size_t q, int degree) {
  const std::size_t n = y.size();
  const std::size_t h = bandwidth(i, n, q);
  const double hd = static_cast<double>(h);
  const std::size_t lo = i >= h ? i - h : 0;
  const std::size_t hi = std::min(n - 1, i + h);

  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double dist = static_cast<double>(j > i ? j - i : i - j);
    const double w = tricube(dist / hd) * robust[j];
    sw += w;
    sx += w * static_cast<double>(j);
    sy += w * y[j];
  }
  if (!(sw > 0.0)) return y[i];
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  if (degree == 0) return ybar;

  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double dist = static_cast<double>(j > i ? j - i : i - j);
    const double w = tricube(dist / hd) * robust[j];
    const double dx = static_cast<double>(j) - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (y[j] - ybar);
  }
  // Degenerate neighbourhood: fall back to the weighted mean.
  if (!(sxx > 1e-10 * sw * hd * hd)) return ybar;
  return ybar + (sxy / sxx) * (static_cast<double>(i) - xbar);
}

bool update_robustness(std::span<const double> y, std::span<const double> fitted,
                       std::vector<double>& robust) {
  const std::size_t n = y.size();
  std::vector<double> abs_resid(n);
  for (std::size_t j = 0; j < n; ++j) abs_resid[j] = std::abs(y[j] - fitted[j]);
  std::vector<double> sorted = abs_resid;
  std::sort(sorted.begin(), sorted.end());
  const double med = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  if (!(med > 0.0)) return false;
  const double scale = 6.0 * med;
  for (std::size_t j = 0; j < n; ++j) robust[j] = bisquare(abs_resid[j] / scale);
  return true;
}

template <bool Parallel>
std::vector<double> lowess_impl(std::span<const double> y, const LowessConfig& cfg) {
  cfg.validate();
  const std::size_t n = y.size();
  if (n < 2) throw std::invalid_argument("lowess needs at least two points");
  const std::size_t q = neighbourhood_size(n, cfg);
  std::vector<double> robust(n, 1.0);
  std::vector<double> fitted(n, 0.0);
  for (int iter = 0; iter <= cfg.robustness_iters; ++iter) {
    if (iter > 0 && !update_robustness(y, fitted, robust)) break;
    const auto count = static_cast<std::int64_t>(n);
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < count; ++i) {
        fitted[static_cast<std::size_t>(i)] =
            fit_point(static_cast<std::size_t>(i), y, robust, q, cfg.degree);
      }
    } else {
      for (std::int64_t i = 0; i < count; ++i) {
        fitted[static_cast<std::size_t>(i)] =
            fit_point(static_cast<std::size_t>(i), y, robust, q, cfg.degree);
      }
    }
  }
  return fitted;
}

}  // namespace

std::vector<double> lowess_smooth(std::span<const double> series, const LowessConfig& cfg) {
  return lowess_impl<true>(series, cfg);
}

std::vector<double> lowess_smooth_serial(std::span<const double> series,
                                         const LowessConfig& cfg) {
  return lowess_impl<false>(series, cfg);
}

}  // namespace gridsched
