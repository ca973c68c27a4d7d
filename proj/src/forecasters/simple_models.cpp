#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "gridsched/errors.hpp"
#include "gridsched/forecasters.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

Forecast make_forecast(double point, double std_error, double confidence, int horizon) {
  Forecast f;
  f.point = point;
  f.std_error = std::max(0.0, std_error);
  f.confidence = confidence;
  f.horizon = horizon;
  const double half = normal_critical(confidence) * f.std_error;
  f.lo = point - half;
  f.hi = point + half;
  return f;
}

double PolyTrendModel::predict(double x) const {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
  return acc;
}

PolyTrendModel fit_poly_trend(std::span<const Point> points, int order) {
  if (order < 0) throw std::invalid_argument("polynomial order must be >= 0");
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index cols = order + 1;
  if (n < cols) throw std::invalid_argument("need at least order+1 points");

  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (Eigen::Index k = 0; k < cols; ++k) {
      design(i, k) = pw;
      pw *= points[static_cast<std::size_t>(i)].x;
    }
    y(i) = points[static_cast<std::size_t>(i)].y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) throw FitFailed("polynomial design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  if (!beta.allFinite()) throw FitFailed("non-finite polynomial coefficients");

  PolyTrendModel m;
  m.order = order;
  m.window = static_cast<int>(n);
  m.coefficients.assign(beta.data(), beta.data() + beta.size());
  const double ssr = (y - design * beta).squaredNorm();
  m.residual_rms = std::sqrt(ssr / static_cast<double>(n));
  m.residual_sd = n > cols ? std::sqrt(ssr / static_cast<double>(n - cols)) : m.residual_rms;
  m.last_x = points.back().x;
  return m;
}

Forecast poly_forecast(const PolyTrendModel& m, int horizon, double confidence) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  return make_forecast(m.predict(m.last_x + horizon),
                       m.residual_sd * std::sqrt(static_cast<double>(horizon)), confidence,
                       horizon);
}

void SmoothingModel::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  if (kind == SmoothingKind::holt && !(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must be in (0,1)");
  }
}

SmoothingModel smoothing_update(SmoothingModel m, double obs) {
  if (m.kind == SmoothingKind::ses) {
    m.level = m.alpha * obs + (1.0 - m.alpha) * m.level;
    return m;
  }
  const double prev = m.level;
  m.level = m.alpha * obs + (1.0 - m.alpha) * (m.level + m.trend);
  m.trend = m.beta * (m.level - prev) + (1.0 - m.beta) * m.trend;
  return m;
}

Forecast smoothing_forecast(const SmoothingModel& m, int horizon, double confidence) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const bool holt = m.kind == SmoothingKind::holt;
  const double point = m.level + (holt ? horizon * m.trend : 0.0);
  // Variance multiplier of the equivalent ARIMA representation.
  double mult = 1.0;
  for (int j = 1; j < horizon; ++j) {
    const double c = m.alpha * (1.0 + (holt ? j * m.beta : 0.0));
    mult += c * c;
  }
  return make_forecast(point, m.residual_rms * std::sqrt(mult), confidence, horizon);
}

Forecast baseline_estimate(std::span<const double> window, BaselineKind kind,
                           double confidence) {
  if (window.empty()) throw std::invalid_argument("baseline window is empty");
  const double point = kind == BaselineKind::mean
                           ? mean(window)
                           : median(std::vector<double>(window.begin(), window.end()));
  return make_forecast(point, sample_stddev(window), confidence, 1);
}

}  // namespace gridsched
