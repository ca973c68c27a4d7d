#include "gridsched/expert_selector.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "gridsched/errors.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

ModelScore score_update(ModelScore s, double abs_pct_err) {
  if (abs_pct_err < 0.0) throw std::invalid_argument("absolute error must be >= 0");
  s.ewma_abs_pct_error = s.n_updates == 0
                             ? abs_pct_err
                             : s.lambda * s.ewma_abs_pct_error + (1.0 - s.lambda) * abs_pct_err;
  ++s.n_updates;
  return s;
}

ModelSlot::ModelSlot(std::unique_ptr<Forecaster> m, double lambda) : model(std::move(m)) {
  score.lambda = lambda;
}

ModelSlot::ModelSlot(const ModelSlot& other)
    : model(other.model ? other.model->clone() : nullptr),
      score(other.score),
      pending(other.pending) {}

ModelSlot& ModelSlot::operator=(const ModelSlot& other) {
  if (this != &other) {
    model = other.model ? other.model->clone() : nullptr;
    score = other.score;
    pending = other.pending;
  }
  return *this;
}

std::size_t select_active(const std::vector<ModelSlot>& models, std::size_t min_warmup) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& s = models[i];
    if (!s.pending || s.score.n_updates < min_warmup) continue;
    if (!best || s.score.ewma_abs_pct_error < models[*best].score.ewma_abs_pct_error) best = i;
  }
  if (best) return *best;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].model && models[i].model->name().rfind("median", 0) == 0) return i;
  }
  return 0;
}

ConfidenceReport effective_confidence(int horizon, int max_horizon, double requested) {
  if (!(requested > 0.0 && requested < 1.0)) {
    throw std::invalid_argument("requested confidence must be in (0,1)");
  }
  ConfidenceReport r;
  r.horizon = horizon;
  r.degraded = horizon < max_horizon;
  r.level = r.degraded ? requested * static_cast<double>(horizon) / static_cast<double>(max_horizon)
                       : requested;
  return r;
}

void ModelSetConfig::validate() const {
  if (models.empty()) throw ConfigInvalid("model set is empty");
  (void)make_model_set(*this);
}

std::vector<std::unique_ptr<Forecaster>> make_model_set(const ModelSetConfig& cfg) {
  std::vector<std::unique_ptr<Forecaster>> out;
  for (const auto& name : cfg.models) {
    std::unique_ptr<Forecaster> m;
    if (name == "median") {
      m = std::make_unique<BaselineForecaster>(BaselineModel{BaselineKind::median, cfg.baseline_window});
    } else if (name == "mean") {
      m = std::make_unique<BaselineForecaster>(BaselineModel{BaselineKind::mean, cfg.baseline_window});
    } else if (name == "poly") {
      m = std::make_unique<PolyTrendForecaster>(cfg.poly_order, cfg.poly_window);
    } else if (name == "ses") {
      m = std::make_unique<SmoothingForecaster>(
          SmoothingModel{SmoothingKind::ses, cfg.ses_alpha, 0.1, 0.0, 0.0, 0.0});
    } else if (name == "holt") {
      m = std::make_unique<SmoothingForecaster>(
          SmoothingModel{SmoothingKind::holt, cfg.holt_alpha, cfg.holt_beta, 0.0, 0.0, 0.0});
    } else if (name == "arma") {
      auto a = cfg.arma;
      a.auto_order = true;
      m = std::make_unique<ArmaForecaster>(a);
    } else if (name.size() == 7 && name.rfind("arma", 0) == 0 &&
               std::all_of(name.begin() + 4, name.end(),
                           [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      auto a = cfg.arma;
      a.auto_order = false;
      a.order = {name[4] - '0', name[5] - '0', name[6] - '0'};
      if (a.order.p > 5 || a.order.d > 1 || a.order.q > 5 || (a.order.p + a.order.q == 0 && a.order.d == 0)) {
        throw ConfigInvalid("unsupported ARMA order in model name '" + name + "'");
      }
      m = std::make_unique<ArmaForecaster>(a);
    } else {
      throw ConfigInvalid("unknown model '" + name + "'");
    }
    if (cfg.log_transform) m = std::make_unique<LogTransformForecaster>(std::move(m));
    out.push_back(std::move(m));
  }
  return out;
}

void EnsembleConfig::validate() const {
  if (max_horizon < 1) throw ConfigInvalid("max_horizon must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigInvalid("lambda must be in (0,1)");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigInvalid("confidence must be in (0,1)");
  if (onset_window < 1) throw ConfigInvalid("onset_window must be >= 1");
}

EnsembleState::EnsembleState(ClassKey key, Factory factory, EnsembleConfig cfg)
    : key_(std::move(key)), factory_(std::move(factory)), cfg_(cfg), horizon_(cfg.max_horizon) {
  cfg_.validate();
  for (auto& m : factory_()) models_.emplace_back(std::move(m), cfg_.lambda);
  if (models_.empty()) throw ConfigInvalid("ensemble needs at least one model");
}

void EnsembleState::update_set(std::vector<ModelSlot>& set, double obs) {
  for (auto& slot : set) {
    if (slot.pending) {
      slot.score = score_update(slot.score, std::abs(percentage_error(slot.pending->point, obs)));
    }
    slot.model->observe(obs);
    slot.pending = slot.model->forecast(1, cfg_.confidence);
  }
}

void EnsembleState::spawn_challenger() {
  Challenger c;
  c.spawned_at = steps_;
  for (auto& m : factory_()) c.models.emplace_back(std::move(m), cfg_.lambda);
  // Train from the onset of the change: the earliest recent pred_error flag.
  auto onset = recent_.size() - 1;
  for (std::size_t i = 0; i < recent_.size(); ++i) {
    if (recent_[i].second.kinds.pred_error) {
      onset = i;
      break;
    }
  }
  for (auto& slot : c.models) {
    for (std::size_t i = onset; i < recent_.size(); ++i) slot.model->observe(recent_[i].first);
    slot.pending = slot.model->forecast(1, cfg_.confidence);
  }
  challenger_ = std::move(c);
}

Forecast EnsembleState::advance(double obs, const AnomalyFlag& flag) {
  if (!(obs > 0.0)) throw std::invalid_argument("observation must be positive");
  ++steps_;
  if (current_) {
    active_errors_.push_back(std::abs(percentage_error(current_->point, obs)));
    while (active_errors_.size() > cfg_.error_memory) active_errors_.pop_front();
  }
  recent_.emplace_back(obs, flag);
  while (recent_.size() > cfg_.onset_window) recent_.pop_front();

  update_set(models_, obs);
  if (challenger_) {
    update_set(challenger_->models, obs);
    ++challenger_->warmup_count;
  }

  const bool mode_change = flag.event == AnomalyEvent::mode_change_candidate;
  if (mode_change && !challenger_) {
    spawn_challenger();
  } else if (challenger_ && challenger_->warmup_count > cfg_.challenger_ttl) {
    challenger_.reset();
  }

  active_ = select_active(models_, cfg_.min_warmup);

  if (challenger_ && challenger_->warmup_count >= cfg_.min_warmup) {
    const auto best = select_active(challenger_->models, cfg_.min_warmup);
    const auto& cand = challenger_->models[best];
    const double incumbent = models_[active_].score.ewma_abs_pct_error;
    if (cand.pending && cand.score.n_updates >= cfg_.min_warmup &&
        cand.score.ewma_abs_pct_error < incumbent) {
      assert(cand.score.ewma_abs_pct_error < incumbent);
      models_ = std::move(challenger_->models);
      active_ = best;
      challenger_.reset();
      ++switches_;
      last_switch_ = steps_;
    }
  }

  horizon_ = mode_change ? 1 : std::min(horizon_ + 1, cfg_.max_horizon);

  if (!models_[active_].pending) {
    for (std::size_t i = 0; i < models_.size(); ++i) {
      if (models_[i].pending) {
        active_ = i;
        break;
      }
    }
  }
  Forecast f = *models_[active_].pending;
  if (!f.gaussian && active_errors_.size() >= 10) {
    const double q = nearest_rank_quantile({active_errors_.begin(), active_errors_.end()},
                                           cfg_.confidence);
    f.lo = f.point * (1.0 - q);
    f.hi = f.point * (1.0 + q);
  }
  current_ = f;
  return f;
}

ConfidenceReport EnsembleState::effective_confidence(double requested) const {
  return gridsched::effective_confidence(horizon_, cfg_.max_horizon, requested);
}

ClassPipeline::ClassPipeline(ClassKey key, const ClassPipelineConfig& cfg)
    : cfg_(cfg),
      detector_(cfg.thresholds, cfg.lowess, cfg.lowess_window),
      ensemble_(std::move(key), [models = cfg.models] { return make_model_set(models); },
                cfg.ensemble) {}

StepRecord ClassPipeline::step(double obs) {
  StepRecord r;
  r.step = ensemble_.steps();
  r.actual = obs;
  const auto prev = ensemble_.current_forecast();
  std::optional<double> prev_point;
  if (prev) {
    prev_point = prev->point;
    r.forecast = prev->point;
    r.pct_error = percentage_error(prev->point, obs);
    const double budget_base = std::max(1.0, prev->point);
    inflation_errors_.push_back(std::abs(obs - budget_base) / budget_base);
    while (inflation_errors_.size() > cfg_.margin_memory) inflation_errors_.pop_front();
  }
  // After a pred_error flag the following observations are judged against the
  // forecast made before it, so "sustained" does not depend on how fast the
  // active model adapts.
  const auto det = detector_.observe(obs, reference_ ? reference_ : prev_point);
  if (reference_) {
    if (det.flag.event == AnomalyEvent::mode_change_candidate ||
        ++reference_age_ >= static_cast<std::size_t>(cfg_.thresholds.sustain_n)) {
      reference_.reset();
    }
  } else if (det.flag.kinds.pred_error && det.flag.event != AnomalyEvent::mode_change_candidate) {
    reference_ = prev_point;
    reference_age_ = 1;
  }
  r.smoothed = det.smoothed;
  r.flag = det.flag;

  const auto idx_before = ensemble_.active_index();
  const auto switches_before = ensemble_.switches();
  r.active_model = ensemble_.active().model->name();
  ensemble_.advance(obs, det.flag);
  if (!prev) r.active_model = ensemble_.active().model->name();
  r.ewma_active = ensemble_.switches() == switches_before && prev
                      ? ensemble_.models()[idx_before].score.ewma_abs_pct_error
                      : ensemble_.active().score.ewma_abs_pct_error;
  r.horizon = ensemble_.horizon();
  return r;
}

}  // namespace gridsched
