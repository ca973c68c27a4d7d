#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridsched/anomaly.hpp"
#include "gridsched/job_classing.hpp"
#include "gridsched/online_forecasters.hpp"

namespace gridsched {

struct ModelScore {
  double ewma_abs_pct_error = 0.0;
  std::size_t n_updates = 0;
  double lambda = 0.8;
};

// ewma' = lambda*ewma + (1-lambda)*err; the first update sets ewma = err.
ModelScore score_update(ModelScore s, double abs_pct_err);

struct ModelSlot {
  std::unique_ptr<Forecaster> model;
  ModelScore score;
  std::optional<Forecast> pending;  // one-step forecast awaiting its observation

  ModelSlot() = default;
  ModelSlot(std::unique_ptr<Forecaster> m, double lambda);
  ModelSlot(const ModelSlot& other);
  ModelSlot& operator=(const ModelSlot& other);
  ModelSlot(ModelSlot&&) noexcept = default;
  ModelSlot& operator=(ModelSlot&&) noexcept = default;
};

// Minimal ewma among models with n_updates >= min_warmup and a pending
// forecast; ties go to the lower registration index. Falls back to the first
// median baseline (or index 0) when nothing is eligible.
std::size_t select_active(const std::vector<ModelSlot>& models, std::size_t min_warmup);

struct ConfidenceReport {
  double level = 0.0;
  int horizon = 1;
  bool degraded = false;
};

// level = requested * horizon / max_horizon when horizon < max_horizon.
ConfidenceReport effective_confidence(int horizon, int max_horizon, double requested);

struct ModelSetConfig {
  std::vector<std::string> models{"median", "poly", "holt", "arma"};
  int baseline_window = 10;
  int poly_order = 3;
  int poly_window = 10;
  double ses_alpha = 0.3;
  double holt_alpha = 0.3;
  double holt_beta = 0.1;
  ArmaConfig arma;
  bool log_transform = false;

  void validate() const;
};

// Names: median, mean, poly, ses, holt, arma (auto order), armaPDQ (fixed, e.g. arma404).
std::vector<std::unique_ptr<Forecaster>> make_model_set(const ModelSetConfig& cfg);

struct EnsembleConfig {
  int max_horizon = kDefaultMaxHorizon;
  std::size_t min_warmup = 8;
  double lambda = 0.8;
  double confidence = 0.9;
  std::size_t challenger_ttl = 40;
  std::size_t onset_window = 6;  // recent observations kept for seeding challengers
  std::size_t error_memory = 100;

  void validate() const;
};

struct Challenger {
  std::vector<ModelSlot> models;
  std::size_t warmup_count = 0;
  std::size_t spawned_at = 0;
};

// Per-class expert system: all models forecast every step, are scored on
// realised values, and the best becomes active. A mode-change candidate spawns a
// challenger set trained on post-change data only, promoted once it beats the
// incumbent.
class EnsembleState {
 public:
  using Factory = std::function<std::vector<std::unique_ptr<Forecaster>>()>;

  EnsembleState(ClassKey key, Factory factory, EnsembleConfig cfg = {});

  // Scores and updates every model with obs, handles challenger lifecycle and
  // horizon, and returns the active model's next-step forecast.
  Forecast advance(double obs, const AnomalyFlag& flag);

  ConfidenceReport effective_confidence(double requested) const;

  const ClassKey& class_key() const { return key_; }
  const std::vector<ModelSlot>& models() const { return models_; }
  const std::optional<Challenger>& challenger() const { return challenger_; }
  std::size_t active_index() const { return active_; }
  const ModelSlot& active() const { return models_[active_]; }
  int horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t switches() const { return switches_; }
  std::optional<std::size_t> last_switch_step() const { return last_switch_; }
  const std::optional<Forecast>& current_forecast() const { return current_; }
  const EnsembleConfig& config() const { return cfg_; }

 private:
  void update_set(std::vector<ModelSlot>& set, double obs);
  void spawn_challenger();

  ClassKey key_;
  Factory factory_;
  EnsembleConfig cfg_;
  std::vector<ModelSlot> models_;
  std::optional<Challenger> challenger_;
  std::size_t active_ = 0;
  int horizon_;
  std::size_t steps_ = 0;
  std::size_t switches_ = 0;
  std::optional<std::size_t> last_switch_;
  std::deque<std::pair<double, AnomalyFlag>> recent_;
  std::deque<double> active_errors_;
  std::optional<Forecast> current_;
};

// One row of a class replay.
struct StepRecord {
  std::size_t step = 0;
  double actual = 0.0;
  std::optional<double> forecast;
  std::optional<double> pct_error;
  double smoothed = 0.0;
  AnomalyFlag flag;
  std::string active_model;
  double ewma_active = 0.0;
  int horizon = 1;
};

struct ClassPipelineConfig {
  ModelSetConfig models;
  EnsembleConfig ensemble;
  Thresholds thresholds;
  LowessConfig lowess;
  std::size_t lowess_window = kLowessTrailingWindow;
  std::size_t margin_memory = 100;
};

// Monitoring feedback loop for one class: forecast, observe, detect, advance.
// After a pred_error flag the detector keeps judging the next sustain_n-1
// observations against the forecast issued before that flag.
class ClassPipeline {
 public:
  ClassPipeline(ClassKey key, const ClassPipelineConfig& cfg);

  StepRecord step(double obs);

  const std::optional<Forecast>& next_forecast() const { return ensemble_.current_forecast(); }
  const EnsembleState& ensemble() const { return ensemble_; }
  std::size_t observations() const { return ensemble_.steps(); }
  // |actual - forecast| / forecast of recent one-step forecasts (forecast floored at 1).
  const std::deque<double>& inflation_errors() const { return inflation_errors_; }

 private:
  ClassPipelineConfig cfg_;
  AnomalyDetector detector_;
  EnsembleState ensemble_;
  std::deque<double> inflation_errors_;
  std::optional<double> reference_;
  std::size_t reference_age_ = 0;
};

}  // namespace gridsched
