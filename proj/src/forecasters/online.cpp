#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gridsched/errors.hpp"
#include "gridsched/online_forecasters.hpp"

namespace gridsched {

namespace {

void push_bounded(std::deque<double>& dq, double v, std::size_t cap) {
  dq.push_back(v);
  while (dq.size() > cap) dq.pop_front();
}

}  // namespace

// --- baseline ---------------------------------------------------------------

BaselineForecaster::BaselineForecaster(BaselineModel cfg) : cfg_(cfg) {
  if (cfg_.window < 1) throw std::invalid_argument("baseline window must be >= 1");
}

std::string BaselineForecaster::name() const {
  return std::string(cfg_.kind == BaselineKind::mean ? "mean" : "median") +
         std::to_string(cfg_.window);
}

void BaselineForecaster::observe(double value) {
  push_bounded(window_, value, static_cast<std::size_t>(cfg_.window));
}

std::optional<Forecast> BaselineForecaster::forecast(int horizon, double confidence) const {
  if (window_.empty()) return std::nullopt;
  const std::vector<double> w(window_.begin(), window_.end());
  auto f = baseline_estimate(w, cfg_.kind, confidence);
  f.horizon = horizon;
  return f;
}

std::unique_ptr<Forecaster> BaselineForecaster::clone() const {
  return std::make_unique<BaselineForecaster>(*this);
}

std::unique_ptr<Forecaster> BaselineForecaster::fresh() const {
  return std::make_unique<BaselineForecaster>(cfg_);
}

nlohmann::json BaselineForecaster::state() const { return cfg_; }

// --- polynomial trend ---------------------------------------------------------

PolyTrendForecaster::PolyTrendForecaster(int order, int window)
    : order_(order), window_size_(window) {
  if (order < 0) throw std::invalid_argument("polynomial order must be >= 0");
  if (window < order + 1) throw std::invalid_argument("window must be >= order+1");
}

std::string PolyTrendForecaster::name() const {
  return "poly" + std::to_string(order_) + "w" + std::to_string(window_size_);
}

void PolyTrendForecaster::observe(double value) {
  push_bounded(window_, value, static_cast<std::size_t>(window_size_));
  if (window_.size() < static_cast<std::size_t>(window_size_)) return;
  std::vector<Point> pts;
  pts.reserve(window_.size());
  for (std::size_t i = 0; i < window_.size(); ++i) pts.push_back({static_cast<double>(i), window_[i]});
  try {
    model_ = fit_poly_trend(pts, order_);
  } catch (const FitFailed&) {
    model_.reset();
  }
}

std::optional<Forecast> PolyTrendForecaster::forecast(int horizon, double confidence) const {
  if (!model_) return std::nullopt;
  return poly_forecast(*model_, horizon, confidence);
}

std::unique_ptr<Forecaster> PolyTrendForecaster::clone() const {
  return std::make_unique<PolyTrendForecaster>(*this);
}

std::unique_ptr<Forecaster> PolyTrendForecaster::fresh() const {
  return std::make_unique<PolyTrendForecaster>(order_, window_size_);
}

nlohmann::json PolyTrendForecaster::state() const {
  if (model_) return *model_;
  return {{"kind", "poly"}, {"order", order_}, {"window", window_size_}};
}

// --- exponential smoothing ----------------------------------------------------

SmoothingForecaster::SmoothingForecaster(SmoothingModel cfg) : cfg_(cfg), model_(cfg) {
  cfg_.validate();
}

std::string SmoothingForecaster::name() const {
  return cfg_.kind == SmoothingKind::ses ? "ses" : "holt";
}

void SmoothingForecaster::observe(double value) {
  if (seen_ == 0) {
    model_.level = value;
    model_.trend = 0.0;
  } else {
    const double predicted = model_.level + (model_.kind == SmoothingKind::holt ? model_.trend : 0.0);
    const double e = value - predicted;
    sq_err_sum_ += e * e;
    model_.residual_rms = std::sqrt(sq_err_sum_ / static_cast<double>(seen_));
    model_ = smoothing_update(model_, value);
  }
  ++seen_;
}

std::optional<Forecast> SmoothingForecaster::forecast(int horizon, double confidence) const {
  if (seen_ == 0) return std::nullopt;
  return smoothing_forecast(model_, horizon, confidence);
}

std::unique_ptr<Forecaster> SmoothingForecaster::clone() const {
  return std::make_unique<SmoothingForecaster>(*this);
}

std::unique_ptr<Forecaster> SmoothingForecaster::fresh() const {
  return std::make_unique<SmoothingForecaster>(cfg_);
}

nlohmann::json SmoothingForecaster::state() const { return model_; }

// --- ARMA -----------------------------------------------------------------------

ArmaForecaster::ArmaForecaster(ArmaConfig cfg) : cfg_(cfg) {
  if (cfg_.refit_every < 1) throw std::invalid_argument("refit_every must be >= 1");
  if (cfg_.fit_window < 30) throw std::invalid_argument("fit_window must be >= 30");
}

std::string ArmaForecaster::name() const {
  if (cfg_.auto_order) return "arma_auto";
  return "arma" + std::to_string(cfg_.order.p) + std::to_string(cfg_.order.d) +
         std::to_string(cfg_.order.q);
}

std::size_t ArmaForecaster::min_history() const {
  if (cfg_.auto_order) return 30;
  const auto pq = static_cast<std::size_t>(cfg_.order.p + cfg_.order.q);
  return std::max<std::size_t>(30, 10 * pq) + static_cast<std::size_t>(cfg_.order.d);
}

void ArmaForecaster::refit() {
  since_attempt_ = 0;
  attempted_ = true;
  const std::vector<double> series(history_.begin(), history_.end());
  try {
    if (cfg_.auto_order) {
      model_ = select_order(series, cfg_.grid).model;
    } else {
      model_ = fit_arma(series, cfg_.order);
    }
  } catch (const Error&) {
    // keep the previous model, if any
  }
}

void ArmaForecaster::observe(double value) {
  push_bounded(history_, value, cfg_.fit_window);
  if (model_) model_->update(value);
  ++since_attempt_;
  if (history_.size() < min_history()) return;
  // Without a model, retry at a fifth of the normal cadence.
  const auto cadence = static_cast<std::size_t>(model_ ? cfg_.refit_every
                                                       : std::max(1, cfg_.refit_every / 5));
  if (!attempted_ || since_attempt_ >= cadence) refit();
}

std::optional<Forecast> ArmaForecaster::forecast(int horizon, double confidence) const {
  if (!model_) return std::nullopt;
  return forecast_arma(*model_, horizon, confidence, cfg_.max_horizon);
}

std::unique_ptr<Forecaster> ArmaForecaster::clone() const {
  return std::make_unique<ArmaForecaster>(*this);
}

std::unique_ptr<Forecaster> ArmaForecaster::fresh() const {
  return std::make_unique<ArmaForecaster>(cfg_);
}

nlohmann::json ArmaForecaster::state() const {
  if (model_) return *model_;
  return {{"kind", "arma"}, {"p", cfg_.order.p}, {"d", cfg_.order.d}, {"q", cfg_.order.q}};
}

// --- log transform ----------------------------------------------------------------

LogTransformForecaster::LogTransformForecaster(std::unique_ptr<Forecaster> inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw std::invalid_argument("null inner forecaster");
}

std::string LogTransformForecaster::name() const { return "log_" + inner_->name(); }

void LogTransformForecaster::observe(double value) {
  inner_->observe(std::log(std::max(value, 1e-9)));
}

std::optional<Forecast> LogTransformForecaster::forecast(int horizon, double confidence) const {
  auto f = inner_->forecast(horizon, confidence);
  if (!f) return std::nullopt;
  Forecast out = *f;
  out.point = std::exp(f->point);
  out.lo = std::exp(f->lo);
  out.hi = std::exp(f->hi);
  out.std_error = out.point * f->std_error;
  return out;
}

std::unique_ptr<Forecaster> LogTransformForecaster::clone() const {
  return std::make_unique<LogTransformForecaster>(inner_->clone());
}

std::unique_ptr<Forecaster> LogTransformForecaster::fresh() const {
  return std::make_unique<LogTransformForecaster>(inner_->fresh());
}

nlohmann::json LogTransformForecaster::state() const {
  return {{"kind", "log"}, {"inner", inner_->state()}};
}

}  // namespace gridsched
