#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "gridsched/errors.hpp"
#include "gridsched/forecasters.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

namespace {

constexpr int kMaxP = 5;
constexpr int kMaxQ = 5;
constexpr int kMaxLongAr = 20;

std::vector<double> autocovariances(std::span<const double> x, double m, int max_lag) {
  const auto n = x.size();
  std::vector<double> c(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) {
      acc += (x[t] - m) * (x[t - static_cast<std::size_t>(k)] - m);
    }
    c[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
  }
  return c;
}

// Levinson-Durbin recursion on autocovariances, no minimum-length rule.
ArFit yule_walker(std::span<const double> series, int p) {
  if (p < 1) throw std::invalid_argument("AR order must be >= 1");
  if (series.size() <= static_cast<std::size_t>(p)) throw NeedMoreData("series too short");
  ArFit fit;
  fit.mean = mean(series);
  const auto c = autocovariances(series, fit.mean, p);
  const double c0 = c[0];
  if (!(c0 > 1e-12 * std::max(1.0, fit.mean * fit.mean))) {
    throw FitFailed("singular autocovariance matrix (constant series)");
  }
  std::vector<double> phi(static_cast<std::size_t>(p), 0.0);
  std::vector<double> prev;
  double err = c0;
  for (int k = 1; k <= p; ++k) {
    double acc = c[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) {
      acc -= prev[static_cast<std::size_t>(j - 1)] * c[static_cast<std::size_t>(k - j)];
    }
    const double reflection = acc / err;
    std::vector<double> next(static_cast<std::size_t>(k));
    next[static_cast<std::size_t>(k - 1)] = reflection;
    for (int j = 1; j < k; ++j) {
      next[static_cast<std::size_t>(j - 1)] =
          prev[static_cast<std::size_t>(j - 1)] -
          reflection * prev[static_cast<std::size_t>(k - j - 1)];
    }
    err *= (1.0 - reflection * reflection);
    if (!(err > 0.0)) throw FitFailed("singular autocovariance matrix");
    prev = std::move(next);
  }
  phi = prev;
  // sigma2 = c0 * (1 - sum phi_k r_k)
  double s = 0.0;
  for (int k = 1; k <= p; ++k) s += phi[static_cast<std::size_t>(k - 1)] * c[static_cast<std::size_t>(k)] / c0;
  fit.phi = std::move(phi);
  fit.sigma2 = c0 * (1.0 - s);
  return fit;
}

// All roots of 1 - sum a_k z^k lie outside the unit circle.
bool roots_outside_unit_circle(const std::vector<double>& a) {
  const auto p = static_cast<Eigen::Index>(a.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) companion(0, k) = a[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
  const Eigen::VectorXcd eig = companion.eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (std::abs(eig(i)) >= 1.0 - 1e-9) return false;
  }
  return true;
}

void validate_order(const ArmaOrder& o) {
  if (o.p < 0 || o.p > kMaxP || o.q < 0 || o.q > kMaxQ || o.d < 0 || o.d > 1) {
    throw std::invalid_argument("ARMA order outside p<=5, d<=1, q<=5");
  }
  if (o.p + o.q < 1 && o.d < 1) throw std::invalid_argument("empty ARMA order");
}

template <typename Deque>
void push_bounded(Deque& dq, double v, int cap) {
  if (cap <= 0) return;
  dq.push_back(v);
  while (static_cast<int>(dq.size()) > cap) dq.pop_front();
}

}  // namespace

ArFit fit_ar_yule_walker(std::span<const double> series, int p) {
  if (p < 1) throw std::invalid_argument("AR order must be >= 1");
  if (series.size() < static_cast<std::size_t>(10 * p)) {
    throw NeedMoreData("Yule-Walker needs at least 10*p observations");
  }
  return yule_walker(series, p);
}

std::vector<double> difference(std::span<const double> series, int d) {
  std::vector<double> out(series.begin(), series.end());
  for (int k = 0; k < d; ++k) {
    if (out.empty()) break;
    std::vector<double> next;
    next.reserve(out.size() - 1);
    for (std::size_t t = 1; t < out.size(); ++t) next.push_back(out[t] - out[t - 1]);
    out = std::move(next);
  }
  return out;
}

double ARMAModel::aic() const {
  return static_cast<double>(n_obs) * std::log(sigma2) + 2.0 * (order.p + order.q + 1);
}

double ARMAModel::next_differenced() const {
  double pred = intercept;
  const auto hp = history.size();
  for (std::size_t k = 0; k < phi.size() && k < hp; ++k) pred += phi[k] * history[hp - 1 - k];
  const auto rq = residuals.size();
  for (std::size_t j = 0; j < theta.size() && j < rq; ++j) pred += theta[j] * residuals[rq - 1 - j];
  return pred;
}

void ARMAModel::update(double raw) {
  const double w = order.d == 1 ? raw - last_raw : raw;
  const double e = w - next_differenced();
  push_bounded(history, w, order.p);
  push_bounded(residuals, e, order.q);
  last_raw = raw;
}

ARMAModel fit_arma(std::span<const double> series, ArmaOrder order) {
  validate_order(order);
  const auto w = difference(series, order.d);
  const auto n = w.size();
  const int p = order.p;
  const int q = order.q;
  const std::size_t needed = std::max<std::size_t>(30, static_cast<std::size_t>(10 * (p + q)));
  if (n < needed) {
    throw NeedMoreData("ARMA(" + std::to_string(p) + "," + std::to_string(order.d) + "," +
                       std::to_string(q) + ") needs " + std::to_string(needed) +
                       " differenced observations, have " + std::to_string(n));
  }

  ARMAModel m;
  m.order = order;
  m.n_obs = n;
  m.last_raw = series.back();

  if (p == 0 && q == 0) {
    // Random walk without drift.
    double ss = 0.0;
    for (double v : w) ss += v * v;
    m.sigma2 = ss / static_cast<double>(n);
    if (!(m.sigma2 > 0.0)) throw FitFailed("zero innovation variance");
    return m;
  }

  // Stage 1: residual proxies from a long autoregression.
  std::vector<double> proxy(n, 0.0);
  std::size_t start = static_cast<std::size_t>(p);
  if (q > 0) {
    const int long_order = static_cast<int>(
        std::ceil(std::min(static_cast<double>(n) / 10.0, static_cast<double>(kMaxLongAr))));
    const auto ar = yule_walker(w, long_order);
    for (std::size_t t = static_cast<std::size_t>(long_order); t < n; ++t) {
      double e = w[t] - ar.mean;
      for (int k = 1; k <= long_order; ++k) {
        e -= ar.phi[static_cast<std::size_t>(k - 1)] * (w[t - static_cast<std::size_t>(k)] - ar.mean);
      }
      proxy[t] = e;
    }
    start = std::max(start, static_cast<std::size_t>(long_order + q));
  }

  // Stage 2: regress w_t on its own lags and lagged residual proxies.
  const auto rows = static_cast<Eigen::Index>(n - start);
  const Eigen::Index cols = 1 + p + q;
  if (rows <= cols) throw NeedMoreData("too few regression rows");
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = start + static_cast<std::size_t>(r);
    x(r, 0) = 1.0;
    for (int k = 1; k <= p; ++k) x(r, k) = w[t - static_cast<std::size_t>(k)];
    for (int j = 1; j <= q; ++j) x(r, p + j) = proxy[t - static_cast<std::size_t>(j)];
    y(r) = w[t];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw FitFailed("singular Hannan-Rissanen regression");
  const Eigen::VectorXd beta = qr.solve(y);
  if (!beta.allFinite()) throw FitFailed("non-finite ARMA coefficients");

  m.intercept = beta(0);
  for (int k = 1; k <= p; ++k) m.phi.push_back(beta(k));
  for (int j = 1; j <= q; ++j) m.theta.push_back(beta(p + j));
  const Eigen::VectorXd resid = y - x * beta;
  m.sigma2 = resid.squaredNorm() / static_cast<double>(rows);
  if (!(m.sigma2 > 0.0)) throw FitFailed("zero innovation variance");
  m.residual_skewness =
      skewness(std::span<const double>(resid.data(), static_cast<std::size_t>(resid.size())));

  if (!roots_outside_unit_circle(m.phi)) throw FitRejected("non-stationary AR estimate");
  std::vector<double> neg_theta(m.theta.size());
  std::transform(m.theta.begin(), m.theta.end(), neg_theta.begin(), [](double t) { return -t; });
  if (!roots_outside_unit_circle(neg_theta)) throw FitRejected("non-invertible MA estimate");

  // Prime the lag buffers by filtering the fitting series.
  std::vector<double> e(n, 0.0);
  for (std::size_t t = static_cast<std::size_t>(p); t < n; ++t) {
    double pred = m.intercept;
    for (int k = 1; k <= p; ++k) pred += m.phi[static_cast<std::size_t>(k - 1)] * w[t - static_cast<std::size_t>(k)];
    for (int j = 1; j <= q && static_cast<std::size_t>(j) <= t; ++j) {
      pred += m.theta[static_cast<std::size_t>(j - 1)] * e[t - static_cast<std::size_t>(j)];
    }
    e[t] = w[t] - pred;
  }
  for (std::size_t t = n - std::min<std::size_t>(n, static_cast<std::size_t>(p)); t < n; ++t) {
    m.history.push_back(w[t]);
  }
  for (std::size_t t = n - std::min<std::size_t>(n, static_cast<std::size_t>(q)); t < n; ++t) {
    m.residuals.push_back(e[t]);
  }
  return m;
}

std::vector<double> psi_weights(const ARMAModel& m, int h) {
  std::vector<double> psi(static_cast<std::size_t>(std::max(h, 0)), 0.0);
  if (h <= 0) return psi;
  psi[0] = 1.0;
  for (int j = 1; j < h; ++j) {
    double v = j <= static_cast<int>(m.theta.size()) ? m.theta[static_cast<std::size_t>(j - 1)] : 0.0;
    for (int k = 1; k <= std::min<int>(j, static_cast<int>(m.phi.size())); ++k) {
      v += m.phi[static_cast<std::size_t>(k - 1)] * psi[static_cast<std::size_t>(j - k)];
    }
    psi[static_cast<std::size_t>(j)] = v;
  }
  if (m.order.d == 1) {
    for (std::size_t j = 1; j < psi.size(); ++j) psi[j] += psi[j - 1];
  }
  return psi;
}

Forecast forecast_arma(const ARMAModel& m, int horizon, double confidence, int max_horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  bool clamped = false;
  if (horizon > max_horizon) {
    horizon = max_horizon;
    clamped = true;
  }
  ARMAModel sim = m;
  double level = m.last_raw;
  double point = 0.0;
  for (int step = 1; step <= horizon; ++step) {
    const double w = sim.next_differenced();
    push_bounded(sim.history, w, m.order.p);
    push_bounded(sim.residuals, 0.0, m.order.q);
    if (m.order.d == 1) {
      level += w;
      point = level;
    } else {
      point = w;
    }
  }
  double var = 0.0;
  for (double psi : psi_weights(m, horizon)) var += psi * psi;
  var *= m.sigma2;
  auto f = make_forecast(point, std::sqrt(var), confidence, horizon);
  f.horizon_clamped = clamped;
  f.gaussian = std::abs(m.residual_skewness) <= 2.0;
  return f;
}

std::vector<ArmaOrder> OrderGrid::members() const {
  std::vector<ArmaOrder> out;
  for (int d = 0; d <= max_d; ++d) {
    for (int p = 0; p <= max_p; ++p) {
      for (int q = 0; q <= max_q; ++q) {
        if (p + q == 0 && d == 0) continue;
        out.push_back({p, d, q});
      }
    }
  }
  return out;
}

namespace {

struct Candidate {
  bool ok = false;
  double aic = 0.0;
  ARMAModel model;
};

Candidate try_fit(std::span<const double> series, ArmaOrder order) {
  Candidate c;
  try {
    c.model = fit_arma(series, order);
    c.aic = c.model.aic();
    c.ok = std::isfinite(c.aic);
  } catch (const Error&) {
    c.ok = false;
  }
  return c;
}

bool better(const Candidate& a, const ArmaOrder& ao, const Candidate& b, const ArmaOrder& bo) {
  if (a.aic != b.aic) return a.aic < b.aic;
  if (ao.p + ao.q != bo.p + bo.q) return ao.p + ao.q < bo.p + bo.q;
  if (ao.d != bo.d) return ao.d < bo.d;
  return ao.p < bo.p;
}

OrderSelection reduce(const std::vector<ArmaOrder>& members, std::vector<Candidate>& fits) {
  std::size_t best = members.size();
  std::size_t fitted = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!fits[i].ok) continue;
    ++fitted;
    if (best == members.size() || better(fits[i], members[i], fits[best], members[best])) best = i;
  }
  if (best == members.size()) throw SelectionFailed("no ARMA grid member could be fitted");
  return {members[best], fits[best].aic, std::move(fits[best].model), fitted};
}

}  // namespace

OrderSelection select_order(std::span<const double> series, const OrderGrid& grid) {
  const auto members = grid.members();
  std::vector<Candidate> fits(members.size());
  const auto count = static_cast<std::int64_t>(members.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    fits[static_cast<std::size_t>(i)] = try_fit(series, members[static_cast<std::size_t>(i)]);
  }
  return reduce(members, fits);
}

OrderSelection select_order_serial(std::span<const double> series, const OrderGrid& grid) {
  const auto members = grid.members();
  std::vector<Candidate> fits(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) fits[i] = try_fit(series, members[i]);
  return reduce(members, fits);
}

}  // namespace gridsched
