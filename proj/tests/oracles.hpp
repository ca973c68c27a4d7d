#pragma once

// Independent reference computations used as test oracles. Deliberately
// written from the textbook definitions, not from the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// Gaussian elimination with partial pivoting, long double accumulators.
inline std::vector<double> solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    if (a[c][c] == 0) throw std::runtime_error("singular system");
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return {x.begin(), x.end()};
}

// Sample autocovariance with 1/n normalisation.
inline long double autocov(const std::vector<double>& x, std::size_t lag) {
  const long double m = std::accumulate(x.begin(), x.end(), 0.0L) / x.size();
  long double s = 0;
  for (std::size_t t = lag; t < x.size(); ++t) s += (x[t] - m) * (x[t - lag] - m);
  return s / x.size();
}

// Yule-Walker: full Toeplitz system R phi = r.
inline std::vector<double> yule_walker(const std::vector<double>& x, int p) {
  std::vector<std::vector<long double>> r(p, std::vector<long double>(p));
  std::vector<long double> rhs(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) r[i][j] = autocov(x, static_cast<std::size_t>(std::abs(i - j)));
    rhs[i] = autocov(x, static_cast<std::size_t>(i + 1));
  }
  return solve(r, rhs);
}

// Ordinary least squares polynomial via normal equations.
inline std::vector<double> poly_fit(const std::vector<double>& xs, const std::vector<double>& ys, int order) {
  const int k = order + 1;
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k, 0));
  std::vector<long double> b(k, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (int r = 0; r < k; ++r) {
      b[r] += std::pow(static_cast<long double>(xs[i]), r) * ys[i];
      for (int c = 0; c < k; ++c) a[r][c] += std::pow(static_cast<long double>(xs[i]), r + c);
    }
  }
  return solve(a, b);
}

inline double tricube(double u) { return u >= 1 ? 0.0 : std::pow(1 - u * u * u, 3); }
inline double bisquare(double u) { return u >= 1 ? 0.0 : std::pow(1 - u * u, 2); }

// Brute-force robust lowess over x = 0..n-1: neighbourhood size
// q = max(ceil(f n), degree+1, 2) capped at n, bandwidth = q-th smallest
// distance, local weighted line solved by Cramer's rule on raw moments.
inline std::vector<double> lowess(const std::vector<double>& y, double f, int iters, int degree) {
  const std::size_t n = y.size();
  std::size_t q = static_cast<std::size_t>(std::ceil(f * n));
  q = std::min(std::max<std::size_t>({q, static_cast<std::size_t>(degree + 1), 2}), n);
  std::vector<double> rob(n, 1.0), fit(n);
  for (int it = 0; it <= iters; ++it) {
    if (it > 0) {
      std::vector<double> res(n);
      for (std::size_t j = 0; j < n; ++j) res[j] = std::fabs(y[j] - fit[j]);
      std::vector<double> s = res;
      std::sort(s.begin(), s.end());
      const double med = n % 2 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2;
      if (med <= 0) break;
      for (std::size_t j = 0; j < n; ++j) rob[j] = bisquare(res[j] / (6 * med));
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> d(n);
      for (std::size_t j = 0; j < n; ++j) d[j] = std::fabs(double(j) - double(i));
      std::vector<double> sd = d;
      std::sort(sd.begin(), sd.end());
      const double h = sd[q - 1];
      long double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const long double w = tricube(d[j] / h) * rob[j];
        s0 += w;
        s1 += w * j;
        s2 += w * j * j;
        t0 += w * y[j];
        t1 += w * j * y[j];
      }
      if (s0 <= 0) {
        fit[i] = y[i];
        continue;
      }
      const long double det = s0 * s2 - s1 * s1;
      if (degree == 0 || det <= 1e-10L * s0 * s0 * h * h) {
        fit[i] = static_cast<double>(t0 / s0);
        continue;
      }
      const long double b0 = (t0 * s2 - s1 * t1) / det;
      const long double b1 = (s0 * t1 - s1 * t0) / det;
      fit[i] = static_cast<double>(b0 + b1 * i);
    }
  }
  return fit;
}

// Sort-and-index quantile, 1-based rank ceil(c n).
inline double nearest_rank(std::vector<double> xs, double c) {
  std::sort(xs.begin(), xs.end());
  std::size_t k = static_cast<std::size_t>(std::ceil(c * xs.size()));
  k = std::clamp<std::size_t>(k, 1, xs.size());
  return xs[k - 1];
}

struct SingleSlotJob {
  double release;
  double length;
  double deadline;
};

// Best deadline-hit count over every non-preemptive order on one slot; each job
// starts at max(release, previous end).
inline int best_permutation_hits(std::vector<SingleSlotJob> jobs) {
  std::vector<std::size_t> idx(jobs.size());
  std::iota(idx.begin(), idx.end(), 0);
  int best = 0;
  do {
    double t = -1e300;
    int hits = 0;
    for (auto i : idx) {
      const double s = std::max(t, jobs[i].release);
      t = s + jobs[i].length;
      if (t <= jobs[i].deadline) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace oracle
