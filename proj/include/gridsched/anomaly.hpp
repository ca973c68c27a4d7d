#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridsched {

struct Thresholds {
  double err_threshold = 0.50;
  double lowess_dev_threshold = 0.25;
  int sustain_m = 4;
  int sustain_n = 6;

  void validate() const;
};

struct LowessConfig {
  double fraction = 0.3;
  int robustness_iters = 2;
  int degree = 1;

  void validate() const;
};

struct AnomalyKinds {
  bool pred_error = false;
  bool lowess_dev = false;

  bool any() const { return pred_error || lowess_dev; }
  // "pred_error+lowess_dev", "pred_error", "lowess_dev" or "".
  std::string to_string() const;
};

enum class AnomalyEvent { none, transient, mode_change_candidate };

std::string to_string(AnomalyEvent e);

struct AnomalyFlag {
  std::size_t index = 0;
  AnomalyKinds kinds;
  AnomalyEvent event = AnomalyEvent::none;
};

// Cleveland's robust locally weighted regression over x = 0..n-1: tricube
// weights on the nearest ceil(fraction*n) points, then robustness_iters passes of
// bisquare down-weighting by residual / (6 * median |residual|). The OpenMP and
// serial versions produce identical output.
std::vector<double> lowess_smooth(std::span<const double> series, const LowessConfig& cfg = {});
std::vector<double> lowess_smooth_serial(std::span<const double> series,
                                         const LowessConfig& cfg = {});

// (forecast - actual) / actual. Throws UndefinedError when actual <= 0.
double percentage_error(double forecast_point, double actual);

// Sets pred_error when |percentage_error| > err_threshold and lowess_dev when
// |actual - smoothed| / smoothed > lowess_dev_threshold. event stays none.
AnomalyFlag detect_point(std::size_t index, double actual, std::optional<double> forecast_point,
                         double smoothed, const Thresholds& th);

// mode_change_candidate iff at least sustain_m of the last sustain_n flags carry pred_error.
AnomalyEvent classify_event(std::span<const AnomalyFlag> recent, const Thresholds& th);

inline constexpr std::size_t kLowessTrailingWindow = 50;

// Streaming detector: Lowess over a trailing window, the smoothed value being
// the window's last fitted point.
class AnomalyDetector {
 public:
  struct Result {
    AnomalyFlag flag;
    double smoothed = 0.0;
  };

  AnomalyDetector(Thresholds th = {}, LowessConfig lowess = {},
                  std::size_t window = kLowessTrailingWindow);

  Result observe(double actual, std::optional<double> forecast_point);

  const Thresholds& thresholds() const { return th_; }
  std::size_t observed() const { return count_; }

 private:
  Thresholds th_;
  LowessConfig lowess_;
  std::size_t window_;
  std::deque<double> values_;
  std::deque<AnomalyFlag> recent_;
  std::size_t count_ = 0;
};

}  // namespace gridsched
