#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gridsched/anomaly.hpp"
#include "gridsched/errors.hpp"
#include "gridsched/expert_selector.hpp"
#include "gridsched/synth_trace.hpp"
#include "oracles.hpp"

using namespace gridsched;
using doctest::Approx;

TEST_CASE("lowess fixed points") {
  std::vector<double> flat{5, 5, 5, 5};
  for (double v : lowess_smooth(flat)) CHECK(v == Approx(5));

  std::vector<double> line;
  for (int i = 0; i < 30; ++i) line.push_back(3 + 2.5 * i);
  LowessConfig cfg;
  cfg.fraction = 1.0;
  cfg.robustness_iters = 0;
  const auto out = lowess_smooth(line, cfg);
  for (std::size_t i = 0; i < line.size(); ++i) CHECK(std::abs(out[i] - line[i]) < 1e-9);
}

TEST_CASE("lowess matches the brute-force reference for both degrees") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> noise(0, 1);
  for (int degree = 0; degree <= 1; ++degree) {
    for (int k = 0; k < 25; ++k) {
      std::vector<double> y(40 + k * 3);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = 50 + 0.3 * i + 4 * noise(gen);
      LowessConfig cfg;
      cfg.degree = degree;
      cfg.robustness_iters = k % 4;
      const auto got = lowess_smooth(y, cfg);
      const auto ref = oracle::lowess(y, cfg.fraction, cfg.robustness_iters, degree);
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(got[i] - ref[i]) <= 1e-9 * std::abs(ref[i]));
    }
  }
}

TEST_CASE("lowess parallel and serial outputs are identical") {
  std::mt19937_64 gen(2);
  std::lognormal_distribution<double> d(6, 0.4);
  std::vector<double> y(3000);
  for (auto& v : y) v = d(gen);
  CHECK(lowess_smooth(y) == lowess_smooth_serial(y));
}

TEST_CASE("lowess down-weights an outlier") {
  std::vector<double> y(50, 100.0);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += (i % 3) - 1.0;
  y[25] = 1000;
  const auto out = lowess_smooth(y);
  CHECK(out[25] < 110);
}

TEST_CASE("lowess config validation") {
  LowessConfig bad;
  bad.fraction = 0;
  CHECK_THROWS(bad.validate());
  std::vector<double> one{1.0};
  CHECK_THROWS(lowess_smooth(one));
}

TEST_CASE("percentage error") {
  CHECK(percentage_error(100, 300) == Approx(-0.6667).epsilon(1e-3));
  CHECK(percentage_error(300, 300) == 0);
  CHECK(percentage_error(150, 100) == Approx(0.5));
  CHECK_THROWS_AS(percentage_error(1, 0), UndefinedError);
}

TEST_CASE("detect_point kinds") {
  Thresholds th;
  CHECK(detect_point(0, 300, 100, 300, th).kinds.pred_error);
  CHECK_FALSE(detect_point(0, 300, 100, 300, th).kinds.lowess_dev);
  CHECK_FALSE(detect_point(0, 110, 110, 100, th).kinds.any());
  const auto f = detect_point(0, 130, 130, 100, th);
  CHECK(f.kinds.lowess_dev);
  CHECK_FALSE(f.kinds.pred_error);
  CHECK(f.event == AnomalyEvent::none);
  CHECK_FALSE(detect_point(0, 130, std::nullopt, 130, th).kinds.any());
}

TEST_CASE("detect_point is monotone in the error size") {
  Thresholds th;
  bool seen = false;
  for (double forecast = 100; forecast < 400; forecast += 0.5) {
    const bool flagged = detect_point(0, 100, forecast, 100, th).kinds.pred_error;
    if (seen) CHECK(flagged);
    seen = seen || flagged;
  }
  CHECK(seen);
}

TEST_CASE("m-of-n classification") {
  Thresholds th;
  auto make = [](std::initializer_list<bool> pe) {
    std::vector<AnomalyFlag> v;
    for (bool b : pe) {
      AnomalyFlag f;
      f.kinds.pred_error = b;
      v.push_back(f);
    }
    return v;
  };
  CHECK(classify_event(make({true, false, true, false, true, true}), th) == AnomalyEvent::mode_change_candidate);
  CHECK(classify_event(make({false, false, false, false, false, true}), th) == AnomalyEvent::transient);
  // Only the last sustain_n entries count.
  CHECK(classify_event(make({true, true, true, false, false, false, false, true, true}), th) ==
        AnomalyEvent::transient);
}

TEST_CASE("thresholds validation") {
  Thresholds t;
  t.sustain_m = 7;
  CHECK_THROWS(t.validate());
  Thresholds z;
  z.err_threshold = 0;
  CHECK_THROWS(z.validate());
}

TEST_CASE("streaming detector events only on flagged points") {
  AnomalyDetector d;
  std::mt19937_64 gen(3);
  std::lognormal_distribution<double> ln(std::log(500.0), 0.3);
  for (int i = 0; i < 300; ++i) {
    const double x = ln(gen);
    const auto r = d.observe(x, 500.0);
    if (r.flag.event != AnomalyEvent::none) CHECK(r.flag.kinds.any());
    CHECK(r.flag.index == static_cast<std::size_t>(i));
  }
}

TEST_CASE("stationary lognormal stream rarely signals a mode change") {
  ClassGenSpec g;
  g.sigma_log = 0.15;
  g.n_jobs = 2000;
  g.seed = 21;
  ClassPipeline p(ClassKey{}, ClassPipelineConfig{});
  std::size_t candidates = 0;
  for (double x : durations_of(gen_class_series(g))) {
    if (p.step(x).flag.event == AnomalyEvent::mode_change_candidate) ++candidates;
  }
  CHECK(static_cast<double>(candidates) / 2000.0 < 0.02);
}

TEST_CASE("3x level shift is signalled within [500, 506]") {
  ClassGenSpec g;
  g.sigma_log = 0.15;
  g.n_jobs = 1000;
  g.seed = 22;
  const auto xs = inject_mode_change(durations_of(gen_class_series(g)), 500, 3.0);
  ClassPipeline p(ClassKey{}, ClassPipelineConfig{});
  std::optional<std::size_t> first;
  for (double x : xs) {
    const auto r = p.step(x);
    if (r.step >= 500 && !first && r.flag.event == AnomalyEvent::mode_change_candidate) first = r.step;
  }
  REQUIRE(first);
  CHECK(*first <= 506);
}
