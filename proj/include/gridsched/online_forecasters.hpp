#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridsched/forecasters.hpp"

namespace gridsched {

// A streaming one-class forecaster: observe() each realised value, then ask for
// the next forecast. forecast() is nullopt until the model has enough history.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual std::string name() const = 0;
  virtual void observe(double value) = 0;
  virtual std::optional<Forecast> forecast(int horizon, double confidence) const = 0;
  virtual std::unique_ptr<Forecaster> clone() const = 0;
  // Same configuration, no history.
  virtual std::unique_ptr<Forecaster> fresh() const = 0;
  virtual nlohmann::json state() const = 0;
};

class BaselineForecaster final : public Forecaster {
 public:
  explicit BaselineForecaster(BaselineModel cfg = {});

  std::string name() const override;
  void observe(double value) override;
  std::optional<Forecast> forecast(int horizon, double confidence) const override;
  std::unique_ptr<Forecaster> clone() const override;
  std::unique_ptr<Forecaster> fresh() const override;
  nlohmann::json state() const override;

 private:
  BaselineModel cfg_;
  std::deque<double> window_;
};

// Refits the polynomial over the trailing window at every step.
class PolyTrendForecaster final : public Forecaster {
 public:
  PolyTrendForecaster(int order = 3, int window = 10);

  std::string name() const override;
  void observe(double value) override;
  std::optional<Forecast> forecast(int horizon, double confidence) const override;
  std::unique_ptr<Forecaster> clone() const override;
  std::unique_ptr<Forecaster> fresh() const override;
  nlohmann::json state() const override;

 private:
  int order_;
  int window_size_;
  std::deque<double> window_;
  std::optional<PolyTrendModel> model_;
};

class SmoothingForecaster final : public Forecaster {
 public:
  explicit SmoothingForecaster(SmoothingModel cfg);

  std::string name() const override;
  void observe(double value) override;
  std::optional<Forecast> forecast(int horizon, double confidence) const override;
  std::unique_ptr<Forecaster> clone() const override;
  std::unique_ptr<Forecaster> fresh() const override;
  nlohmann::json state() const override;

 private:
  SmoothingModel cfg_;
  SmoothingModel model_;
  std::size_t seen_ = 0;
  double sq_err_sum_ = 0.0;
};

struct ArmaConfig {
  bool auto_order = true;
  ArmaOrder order{4, 0, 4};  // used when auto_order is false
  OrderGrid grid;
  int refit_every = 50;
  std::size_t fit_window = 600;
  int max_horizon = kDefaultMaxHorizon;
};

// ARMA/ARIMA refitted every refit_every observations over the trailing
// fit_window; between refits the fitted model is filtered forward. A failed
// refit keeps the previous model.
class ArmaForecaster final : public Forecaster {
 public:
  explicit ArmaForecaster(ArmaConfig cfg = {});

  std::string name() const override;
  void observe(double value) override;
  std::optional<Forecast> forecast(int horizon, double confidence) const override;
  std::unique_ptr<Forecaster> clone() const override;
  std::unique_ptr<Forecaster> fresh() const override;
  nlohmann::json state() const override;

  const std::optional<ARMAModel>& model() const { return model_; }

 private:
  void refit();
  std::size_t min_history() const;

  ArmaConfig cfg_;
  std::deque<double> history_;
  std::optional<ARMAModel> model_;
  std::size_t since_attempt_ = 0;
  bool attempted_ = false;
};

// Runs the inner model on log(value) and maps the forecast back with exp.
class LogTransformForecaster final : public Forecaster {
 public:
  explicit LogTransformForecaster(std::unique_ptr<Forecaster> inner);

  std::string name() const override;
  void observe(double value) override;
  std::optional<Forecast> forecast(int horizon, double confidence) const override;
  std::unique_ptr<Forecaster> clone() const override;
  std::unique_ptr<Forecaster> fresh() const override;
  nlohmann::json state() const override;

 private:
  std::unique_ptr<Forecaster> inner_;
};

}  // namespace gridsched
