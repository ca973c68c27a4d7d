#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gridsched/errors.hpp"
#include "gridsched/scheduler_sim.hpp"
#include "oracles.hpp"

using namespace gridsched;
using doctest::Approx;

namespace {

JobRequest job(std::int64_t n, double submit, double deadline, double duration) {
  JobRequest r;
  r.job_number = n;
  r.submit_time = submit;
  r.deadline = deadline;
  r.true_duration = duration;
  r.class_key.group = "g";
  return r;
}

std::vector<SimClass> small_mix(std::size_t n) {
  std::vector<SimClass> out;
  const double bases[] = {200, 800};
  for (int i = 0; i < 2; ++i) {
    ClassGenSpec g;
    g.base_level = bases[i];
    g.sigma_log = 0.2;
    g.n_jobs = n;
    g.interarrival_mean = 150;
    g.seed = 40 + static_cast<std::uint64_t>(i);
    g.start_time = 0;
    out.push_back({i == 0 ? "a" : "b", g});
  }
  return out;
}

}  // namespace

TEST_CASE("safety_margin nearest rank") {
  CHECK(safety_margin({0.4, 0.1, 0.3, 0.2}, 0.75) == 0.3);
  CHECK(safety_margin({0.1}, 0.01) == 0.1);
  CHECK(safety_margin({0.1}, 0.99) == 0.1);
  CHECK(safety_margin({0.1, 0.2}, 1.0) == 0.2);
}

TEST_CASE("safety_margin matches sort-and-index on 10000 draws") {
  std::mt19937_64 gen(77);
  std::exponential_distribution<double> d(4.0);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = d(gen);
  for (double c : {0.5, 0.9, 0.95, 0.999}) CHECK(safety_margin(xs, c) == oracle::nearest_rank(xs, c));
}

TEST_CASE("cluster spec") {
  const auto c = ClusterSpec::uniform(3, 4);
  CHECK(c.total_slots() == 12);
  CHECK(c.nodes[0].id == "node1");
  CHECK_THROWS_AS(ClusterSpec::uniform(0, 4).validate(), ConfigInvalid);
  ClusterState st(c);
  CHECK(st.slot_count() == 12);
  CHECK(st.node_of(5) == "node2");
}

TEST_CASE("earliest_fit respects running job and reservations") {
  ClusterState st(ClusterSpec::uniform(1, 1));
  CHECK(st.earliest_fit(0, 0, 10) == 0);
  st.start(0, 1, 0, 20);
  CHECK(st.earliest_fit(0, 5, 10) == 20);
  st.reserve({2, 0, 40, 10, 100});
  CHECK(st.earliest_fit(0, 5, 20) == 20);
  CHECK(st.earliest_fit(0, 5, 21) == 50);
  CHECK_THROWS_AS(st.start(0, 3, 5, 1), std::logic_error);
}

TEST_CASE("admit examples") {
  ClusterState st(ClusterSpec::uniform(1, 1));
  const auto f = make_forecast(100, 0, 0.9);
  auto d = admit(job(1, 0, 200, 100), f, 0.3, st, 0);
  CHECK(d.verdict == Verdict::accepted);
  CHECK(d.budget == Approx(130));
  REQUIRE(d.planned_start);
  CHECK(*d.planned_start == 0);
  CHECK(st.reservations().size() == 1);

  ClusterState st2(ClusterSpec::uniform(1, 1));
  d = admit(job(2, 0, 120, 100), f, 0.3, st2, 0);
  CHECK(d.verdict == Verdict::rejected);
  CHECK(st2.reservations().empty());

  d = admit(job(3, 0, 1e9, 100), std::nullopt, 0.3, st2, 0);
  CHECK(d.verdict == Verdict::unmodellable);
  CHECK_FALSE(d.planned_start);
  CHECK(st2.reservations().empty());

  // Tiny forecasts are floored at one second.
  d = admit(job(4, 0, 1e9, 1), make_forecast(0.01, 0, 0.9), 0.0, st2, 0);
  CHECK(d.budget == 1.0);
}

TEST_CASE("admission queues behind existing reservations") {
  ClusterState st(ClusterSpec::uniform(1, 1));
  const auto f = make_forecast(100, 0, 0.9);
  CHECK(admit(job(1, 0, 150, 100), f, 0.0, st, 0).verdict == Verdict::accepted);
  const auto d = admit(job(2, 0, 250, 100), f, 0.0, st, 0);
  CHECK(d.verdict == Verdict::accepted);
  CHECK(*d.planned_start == 100);
  CHECK(admit(job(3, 0, 250, 100), f, 0.0, st, 0).verdict == Verdict::rejected);
}

TEST_CASE("dispatch EDF among due reservations") {
  ClusterState st(ClusterSpec::uniform(1, 1));
  st.reserve({1, 0, 2, 5, 10});  // A
  st.reserve({2, 0, 7, 4, 8});   // B
  const auto a = dispatch(st, 8);
  REQUIRE(a.size() == 1);
  CHECK(a[0].job_number == 2);
  CHECK_FALSE(a[0].backfilled);
}

TEST_CASE("dispatch conservative backfill") {
  ClusterState st(ClusterSpec::uniform(1, 1));
  st.reserve({1, 0, 10, 11, 21});
  st.reserve({2, 0, 21, 6, 100});
  auto a = dispatch(st, 0);
  REQUIRE(a.size() == 1);
  CHECK(a[0].job_number == 2);
  CHECK(a[0].start == 0);
  CHECK(a[0].backfilled);

  ClusterState st2(ClusterSpec::uniform(1, 1));
  st2.reserve({1, 0, 10, 11, 21});
  st2.reserve({2, 0, 21, 12, 100});
  CHECK(dispatch(st2, 0).empty());
}

TEST_CASE("empty simulation") {
  OracleProvider p;
  const auto r = run_simulation({}, ClusterSpec::uniform(2, 2), p);
  CHECK(r.admitted == 0);
  CHECK(r.deadline_hits == 0);
  CHECK(r.utilisation == 0);
  CHECK(r.jobs.empty());
}

TEST_CASE("single perfectly forecast job") {
  OracleProvider p;
  const auto r = run_simulation({job(1, 0, 1000, 100)}, ClusterSpec::uniform(1, 2), p);
  CHECK(r.admitted == 1);
  CHECK(r.deadline_hits == 1);
  CHECK(r.makespan == Approx(100));
  CHECK(r.utilisation == Approx(100.0 / (2 * r.makespan)));
  REQUIRE(r.jobs.size() == 1);
  CHECK(*r.jobs[0].completion == Approx(100));
  CHECK(*r.jobs[0].hit);
}

TEST_CASE("unknown classes run best effort") {
  EnsembleProvider p(ClassPipelineConfig{});
  std::vector<JobRequest> reqs;
  for (int i = 0; i < 5; ++i) reqs.push_back(job(i + 1, i * 10.0, i * 10.0 + 500, 50));
  const auto r = run_simulation(reqs, ClusterSpec::uniform(1, 1), p);
  CHECK(r.unmodellable == 5);
  CHECK(r.admitted == 0);
  for (const auto& j : r.jobs) CHECK(j.completion);
  CHECK(r.double_booking_violations == 0);
}

TEST_CASE("ensemble driven replay keeps plans and slots consistent") {
  DeadlinePolicy pol;
  const auto reqs = gen_sim_requests(small_mix(300), pol);
  REQUIRE(reqs.size() == 600);
  CHECK(std::is_sorted(reqs.begin(), reqs.end(),
                       [](const auto& a, const auto& b) { return a.submit_time < b.submit_time; }));
  EnsembleProvider p(ClassPipelineConfig{});
  const auto r = run_simulation(reqs, ClusterSpec::uniform(2, 2), p);
  CHECK(r.double_booking_violations == 0);
  CHECK(r.admitted + r.rejected + r.unmodellable == reqs.size());
  CHECK(r.deadline_hits + r.deadline_misses == r.admitted);
  CHECK(r.admitted > 0);
  for (const auto& j : r.jobs) {
    if (j.verdict == Verdict::accepted) {
      CHECK(*j.planned_start + j.budget <= j.deadline + 1e-9);
      CHECK(*j.hit == (*j.completion <= j.deadline));
    }
  }
  CHECK(r.utilisation > 0);
  CHECK(r.utilisation <= 1.0);
}

TEST_CASE("simulation is deterministic") {
  DeadlinePolicy pol;
  const auto reqs = gen_sim_requests(small_mix(200), pol);
  auto once = [&] {
    EnsembleProvider p(ClassPipelineConfig{});
    const auto r = run_simulation(reqs, ClusterSpec::uniform(2, 2), p);
    std::ostringstream os;
    write_job_log_csv(os, r);
    nlohmann::json j = r;
    return os.str() + j.dump();
  };
  CHECK(once() == once());
}

TEST_CASE("report serialisation") {
  OracleProvider p;
  const auto r = run_simulation({job(1, 0, 1000, 100), job(2, 0, 50, 100)}, ClusterSpec::uniform(1, 1), p);
  CHECK(r.rejected == 1);
  nlohmann::json j = r;
  for (const char* k : {"admitted", "rejected", "unmodellable", "deadline_hits", "deadline_misses", "hit_rate",
                        "backfilled", "double_booking_violations", "utilisation", "makespan", "per_class"}) {
    CHECK(j.contains(k));
  }
  std::ostringstream os;
  write_job_log_csv(os, r);
  const auto text = os.str();
  CHECK(text.rfind("job_number,class,verdict,budget,planned_start,actual_start,completion,deadline,hit\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(to_string(Verdict::unmodellable) == "unmodellable");
}

TEST_CASE("EDF hits match the exhaustive best on tiny instances") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> dur(1, 20), sub(0, 30), slack(1, 3);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<JobRequest> reqs;
    const int n = 2 + inst % 5;
    for (int i = 0; i < n; ++i) {
      const double s = std::round(sub(gen)), d = std::round(dur(gen));
      reqs.push_back(job(i + 1, s, s + std::round(slack(gen) * d), d));
    }
    std::stable_sort(reqs.begin(), reqs.end(), [](auto& a, auto& b) { return a.submit_time < b.submit_time; });
    OracleProvider p;
    const auto r = run_simulation(reqs, ClusterSpec::uniform(1, 1), p);
    std::vector<oracle::SingleSlotJob> admitted;
    for (const auto& rq : reqs) {
      const auto it = std::find_if(r.jobs.begin(), r.jobs.end(), [&](auto& j) { return j.job_number == rq.job_number; });
      if (it->verdict == Verdict::accepted) admitted.push_back({rq.submit_time, rq.true_duration, rq.deadline});
    }
    CHECK(static_cast<int>(r.deadline_hits) >= oracle::best_permutation_hits(admitted));
  }
}

TEST_CASE("rejected jobs still report their durations") {
  struct Recorder final : ForecastProvider {
    std::vector<std::pair<std::int64_t, double>> seen;
    std::optional<Prediction> predict(const JobRequest& j) override {
      Prediction p;
      p.forecast = make_forecast(j.true_duration, 0, 0.9);
      return p;
    }
    void observe(const JobRequest& j, double actual) override { seen.emplace_back(j.job_number, actual); }
    double fallback_budget(const JobRequest& j) const override { return j.true_duration; }
  } rec;
  const auto r = run_simulation({job(1, 0, 1000, 100), job(2, 0, 50, 70)}, ClusterSpec::uniform(1, 1), rec);
  CHECK(r.rejected == 1);
  REQUIRE(rec.seen.size() == 2);
  CHECK(rec.seen[0] == std::make_pair(std::int64_t{2}, 70.0));
  CHECK(rec.seen[1] == std::make_pair(std::int64_t{1}, 100.0));
  CHECK_FALSE(r.jobs[1].actual_start);
}
