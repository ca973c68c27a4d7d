#pragma once

#include <compare>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace gridsched {

inline constexpr int kDefaultMaxHorizon = 10;

// Point prediction with a symmetric interval at `confidence`.
struct Forecast {
  double point = 0.0;
  double std_error = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double confidence = 0.9;
  int horizon = 1;
  bool horizon_clamped = false;
  // False when residual diagnostics reject normality; callers should then
  // prefer empirical error quantiles over [lo, hi].
  bool gaussian = true;
};

Forecast make_forecast(double point, double std_error, double confidence, int horizon = 1);

// ---------------------------------------------------------------------------
// Polynomial trend over a sliding window.

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct PolyTrendModel {
  int order = 3;
  int window = 10;
  std::vector<double> coefficients;  // ascending powers
  double residual_rms = 0.0;
  double residual_sd = 0.0;  // sqrt(SSR / (n - order - 1)), residual_rms when no dof left
  double last_x = 0.0;

  double predict(double x) const;
};

// Ordinary least squares of y on 1, x, ..., x^order. Throws FitFailed when the
// design is rank deficient (e.g. duplicate x) and std::invalid_argument when
// fewer than order+1 points are given.
PolyTrendModel fit_poly_trend(std::span<const Point> points, int order);

Forecast poly_forecast(const PolyTrendModel& m, int horizon, double confidence);

// ---------------------------------------------------------------------------
// Exponential smoothing.

enum class SmoothingKind { ses, holt };

struct SmoothingModel {
  SmoothingKind kind = SmoothingKind::ses;
  double alpha = 0.3;
  double beta = 0.1;
  double level = 0.0;
  double trend = 0.0;
  double residual_rms = 0.0;

  void validate() const;
};

// ses:  level' = a*obs + (1-a)*level
// holt: level' = a*obs + (1-a)*(level+trend); trend' = b*(level'-level) + (1-b)*trend
SmoothingModel smoothing_update(SmoothingModel m, double obs);

Forecast smoothing_forecast(const SmoothingModel& m, int horizon, double confidence);

// ---------------------------------------------------------------------------
// Mean / median of a window.

enum class BaselineKind { mean, median };

struct BaselineModel {
  BaselineKind kind = BaselineKind::median;
  int window = 10;
};

Forecast baseline_estimate(std::span<const double> window, BaselineKind kind,
                           double confidence = 0.9);

// ---------------------------------------------------------------------------
// Autoregressive and ARMA/ARIMA models.

struct ArFit {
  std::vector<double> phi;
  double sigma2 = 0.0;
  double mean = 0.0;
};

// Yule-Walker via Levinson-Durbin on the demeaned series. Requires
// series.size() >= 10*p (NeedMoreData) and a non-constant series (FitFailed).
ArFit fit_ar_yule_walker(std::span<const double> series, int p);

struct ArmaOrder {
  int p = 0;
  int d = 0;
  int q = 0;

  auto operator<=>(const ArmaOrder&) const = default;
};

// w_t = intercept + sum phi_k w_{t-k} + e_t + sum theta_j e_{t-j}, where w is the
// d-times differenced series.
struct ARMAModel {
  ArmaOrder order;
  std::vector<double> phi;
  std::vector<double> theta;
  double intercept = 0.0;
  double sigma2 = 0.0;
  std::size_t n_obs = 0;  // length of the differenced fitting series
  double residual_skewness = 0.0;

  std::deque<double> history;    // last p differenced values, newest at back
  std::deque<double> residuals;  // last q innovations, newest at back
  double last_raw = 0.0;

  double aic() const;

  // Conditional mean of the next differenced value.
  double next_differenced() const;

  // Feed one new raw observation (residual = realised - predicted).
  void update(double raw);
};

std::vector<double> difference(std::span<const double> series, int d);

// Hannan-Rissanen two-stage least squares.
//   NeedMoreData  if fewer than max(30, 10(p+q)) differenced points
//   FitFailed     on singular regressions or zero innovation variance
//   FitRejected   if the AR part is non-stationary or the MA part non-invertible
ARMAModel fit_arma(std::span<const double> series, ArmaOrder order);

// Psi weights of the (integrated) model, psi_0 = 1, length h.
std::vector<double> psi_weights(const ARMAModel& m, int h);

// h-step forecast with zero future innovations; horizons above max_horizon are
// clamped and flagged.
Forecast forecast_arma(const ARMAModel& m, int horizon, double confidence,
                       int max_horizon = kDefaultMaxHorizon);

struct OrderGrid {
  int max_p = 5;
  int max_d = 1;
  int max_q = 5;

  std::vector<ArmaOrder> members() const;
};

struct OrderSelection {
  ArmaOrder order;
  double aic = 0.0;
  ARMAModel model;
  std::size_t fitted = 0;  // grid members that produced a model
};

// argmin AIC over the grid, ties to smaller p+q, then d, then p. Grid members are
// fitted in parallel; throws SelectionFailed when nothing fits.
OrderSelection select_order(std::span<const double> series, const OrderGrid& grid = {});
OrderSelection select_order_serial(std::span<const double> series, const OrderGrid& grid = {});

// Model state documents: kind, p, d, q, phi, theta, intercept, sigma2, alpha,
// beta, level, trend, order, window, coefficients (only the keys that apply).
void to_json(nlohmann::json& j, const PolyTrendModel& m);
void from_json(const nlohmann::json& j, PolyTrendModel& m);
void to_json(nlohmann::json& j, const SmoothingModel& m);
void from_json(const nlohmann::json& j, SmoothingModel& m);
void to_json(nlohmann::json& j, const BaselineModel& m);
void from_json(const nlohmann::json& j, BaselineModel& m);
void to_json(nlohmann::json& j, const ARMAModel& m);
void from_json(const nlohmann::json& j, ARMAModel& m);

}  // namespace gridsched
