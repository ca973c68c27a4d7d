#include "gridsched/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridsched/errors.hpp"

namespace gridsched {

void Thresholds::validate() const {
  if (!(err_threshold > 0.0 && lowess_dev_threshold > 0.0)) {
    throw std::invalid_argument("thresholds must be positive");
  }
  if (!(1 <= sustain_m && sustain_m <= sustain_n)) {
    throw std::invalid_argument("need 1 <= sustain_m <= sustain_n");
  }
}

std::string AnomalyKinds::to_string() const {
  if (pred_error && lowess_dev) return "pred_error+lowess_dev";
  if (pred_error) return "pred_error";
  if (lowess_dev) return "lowess_dev";
  return "";
}

std::string to_string(AnomalyEvent e) {
  switch (e) {
    case AnomalyEvent::none:
      return "none";
    case AnomalyEvent::transient:
      return "transient";
    case AnomalyEvent::mode_change_candidate:
      return "mode_change_candidate";
  }
  return "none";
}

double percentage_error(double forecast_point, double actual) {
  if (!(actual > 0.0)) throw UndefinedError("percentage error needs a positive actual value");
  return (forecast_point - actual) / actual;
}

AnomalyFlag detect_point(std::size_t index, double actual, std::optional<double> forecast_point,
                         double smoothed, const Thresholds& th) {
  AnomalyFlag flag;
  flag.index = index;
  if (forecast_point && actual > 0.0) {
    flag.kinds.pred_error = std::abs(percentage_error(*forecast_point, actual)) > th.err_threshold;
  }
  const double base = std::abs(smoothed);
  if (base > 0.0) {
    flag.kinds.lowess_dev = std::abs(actual - smoothed) / base > th.lowess_dev_threshold;
  }
  return flag;
}

AnomalyEvent classify_event(std::span<const AnomalyFlag> recent, const Thresholds& th) {
  const auto n = std::min(recent.size(), static_cast<std::size_t>(th.sustain_n));
  const auto tail = recent.subspan(recent.size() - n);
  const auto hits = std::count_if(tail.begin(), tail.end(),
                                  [](const AnomalyFlag& f) { return f.kinds.pred_error; });
  return hits >= th.sustain_m ? AnomalyEvent::mode_change_candidate : AnomalyEvent::transient;
}

AnomalyDetector::AnomalyDetector(Thresholds th, LowessConfig lowess, std::size_t window)
    : th_(th), lowess_(lowess), window_(window) {
  th_.validate();
  lowess_.validate();
  if (window_ < 2) throw std::invalid_argument("lowess window must be >= 2");
}

AnomalyDetector::Result AnomalyDetector::observe(double actual,
                                                 std::optional<double> forecast_point) {
  values_.push_back(actual);
  while (values_.size() > window_) values_.pop_front();

  double smoothed = actual;
  if (values_.size() >= 2) {
    const std::vector<double> w(values_.begin(), values_.end());
    smoothed = lowess_smooth_serial(w, lowess_).back();
  }

  Result out;
  out.smoothed = smoothed;
  out.flag = detect_point(count_, actual, forecast_point, smoothed, th_);
  recent_.push_back(out.flag);
  while (recent_.size() > static_cast<std::size_t>(th_.sustain_n)) recent_.pop_front();
  if (out.flag.kinds.any()) {
    const std::vector<AnomalyFlag> r(recent_.begin(), recent_.end());
    out.flag.event = classify_event(r, th_);
    recent_.back().event = out.flag.event;
  }
  ++count_;
  return out;
}

}  // namespace gridsched
