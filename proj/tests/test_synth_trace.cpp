#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gridsched/errors.hpp"
#include "gridsched/synth_trace.hpp"
#include "gridsched/trace_ingest.hpp"

using namespace gridsched;
using doctest::Approx;

namespace {

double lag1_acf(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i > 0) num += (x[i] - m) * (x[i - 1] - m);
  }
  return num / den;
}

double mean_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  return std::accumulate(x.begin() + lo, x.begin() + hi, 0.0) / static_cast<double>(hi - lo);
}

std::vector<double> wallclocks(const std::vector<JobRecord>& rs) {
  std::vector<double> out;
  for (const auto& r : rs) out.push_back(static_cast<double>(r.end_time - r.start_time));
  return out;
}

}  // namespace

TEST_CASE("degenerate noise returns the base level") {
  ClassGenSpec g;
  g.sigma_log = 1e-12;
  g.base_level = 750;
  g.n_jobs = 200;
  for (double d : durations_of(gen_class_series(g))) CHECK(d == Approx(750));
}

TEST_CASE("AR(1) log deviations carry the requested autocorrelation") {
  ClassGenSpec g;
  g.noise = NoiseKind::ar1;
  g.phi = 0.8;
  g.sigma = 0.2;
  g.n_jobs = 5000;
  g.seed = 3;
  std::vector<double> logs;
  for (double d : durations_of(gen_class_series(g))) logs.push_back(std::log(d));
  const double r = lag1_acf(logs);
  CHECK(r >= 0.75);
  CHECK(r <= 0.85);
}

TEST_CASE("series are a function of the seed") {
  ClassGenSpec g;
  g.seed = 9;
  const auto a = gen_class_series(g), b = gen_class_series(g);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].duration == b[i].duration);
    CHECK(a[i].submit_time == b[i].submit_time);
  }
  g.seed = 10;
  CHECK(gen_class_series(g)[0].duration != a[0].duration);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i].submit_time >= a[i - 1].submit_time);
}

TEST_CASE("interarrival mean") {
  ClassGenSpec g;
  g.n_jobs = 20000;
  g.interarrival_mean = 120;
  const auto s = gen_class_series(g);
  const double span = s.back().submit_time - s.front().submit_time;
  CHECK(span / static_cast<double>(s.size() - 1) == Approx(120).epsilon(0.03));
}

TEST_CASE("inject_mode_change") {
  ClassGenSpec g;
  g.n_jobs = 2000;
  g.seed = 12;
  const auto base = durations_of(gen_class_series(g));
  CHECK(inject_mode_change(base, 700, 1.0) == base);
  const auto shifted = inject_mode_change(base, 1000, 3.0);
  const double ratio = mean_of(shifted, 1000, 2000) / mean_of(shifted, 0, 1000);
  CHECK(ratio == Approx(3.0).epsilon(0.10));
  const auto all = inject_mode_change(base, 0, 2.0);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(all[i] == 2.0 * base[i]);
  CHECK_THROWS(inject_mode_change(base, base.size(), 2.0));
}

TEST_CASE("log-uniform bulk has the geometric-mean median") {
  auto mix = WorkloadMixSpec::defaults(40000, 4);
  mix.short_fail_fraction = 0;
  mix.long_fraction = 0;
  auto d = wallclocks(gen_workload(mix));
  std::sort(d.begin(), d.end());
  CHECK(d.front() >= 50 - 1);
  CHECK(d.back() <= 5000 + 1);
  CHECK(d[d.size() / 2] == Approx(std::sqrt(50.0 * 5000.0)).epsilon(0.06));
}

TEST_CASE("default workload shape") {
  const auto mix = WorkloadMixSpec::defaults(50000, 42);
  const auto recs = gen_workload(mix);
  REQUIRE(recs.size() == 50000);
  std::size_t short_or_failed = 0, long_jobs = 0;
  double lo = 1e300, hi = 0;
  for (const auto& r : recs) {
    const double d = static_cast<double>(r.end_time - r.start_time);
    if (d < 10 || r.failed_code != 0) ++short_or_failed;
    if (d > 1e5) ++long_jobs;
    lo = std::min(lo, std::max(d, 1.0));
    hi = std::max(hi, d);
  }
  CHECK(static_cast<double>(short_or_failed) / 50000 == Approx(0.04).epsilon(0.125));
  CHECK(static_cast<double>(long_jobs) / 50000 == Approx(0.025).epsilon(0.2));
  CHECK(std::log10(hi) - std::log10(lo) >= 5);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].job_number == static_cast<std::int64_t>(i + 1));
    if (i) CHECK(recs[i].submit_time >= recs[i - 1].submit_time);
  }
}

TEST_CASE("serialised traces are byte-identical and parse back") {
  const auto mix = WorkloadMixSpec::defaults(3000, 8);
  const auto a = serialise_trace(mix, gen_workload(mix));
  CHECK(a == serialise_trace(mix, gen_workload(mix)));
  CHECK(a.rfind("#", 0) == 0);
  std::istringstream in(a);
  TraceLoadOptions opts;
  opts.min_duration_filter = 0;
  opts.drop_failed = false;
  const auto loaded = load_trace(in, opts);
  CHECK(loaded.stats.malformed == 0);
  CHECK(loaded.records.size() == 3000);
  CHECK(loaded.stats.comments >= 1);
}

TEST_CASE("mix JSON round trip and validation") {
  auto mix = WorkloadMixSpec::defaults(1000, 3);
  nlohmann::json j = mix;
  const auto back = j.get<WorkloadMixSpec>();
  CHECK(nlohmann::json(back) == j);
  mix.short_fail_fraction = 0.6;
  mix.long_fraction = 0.5;
  CHECK_THROWS_AS(mix.validate(), ConfigInvalid);
  ClassGenSpec g;
  g.base_level = -1;
  CHECK_THROWS_AS(g.validate(), ConfigInvalid);
}

TEST_CASE("records from a series") {
  ClassGenSpec g;
  g.n_jobs = 50;
  const auto s = gen_class_series(g);
  const auto rs = records_from_series(s, "grp", "usr", 100);
  REQUIRE(rs.size() == 50);
  CHECK(rs[0].job_number == 100);
  CHECK(rs[0].group == "grp");
  CHECK(rs[0].owner == "usr");
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK(static_cast<double>(derive_wallclock(rs[i])) == Approx(s[i].duration).epsilon(0.01));
}
