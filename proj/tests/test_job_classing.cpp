#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "gridsched/errors.hpp"
#include "gridsched/job_classing.hpp"
#include "gridsched/synth_trace.hpp"

using namespace gridsched;

namespace {

// 2004-11-02 is a Tuesday.
constexpr std::int64_t kTuesdayMidnightUtc = 1099353600;
constexpr std::int64_t kHour = 3600;
constexpr std::int64_t kDay = 86400;

JobRecord rec(const std::string& group, const std::string& owner, std::int64_t submit,
              std::int64_t job = 1) {
  JobRecord r;
  r.queue_name = "all.q";
  r.exec_host = "node01";
  r.group = group;
  r.owner = owner;
  r.job_number = job;
  r.submit_time = submit;
  r.start_time = submit;
  r.end_time = submit + 100;
  return r;
}

}  // namespace

TEST_CASE("time window tags") {
  ClassKeySpec spec;
  CHECK(time_window_tag(kTuesdayMidnightUtc + 10 * kHour, spec) == WindowTag::office);
  CHECK(time_window_tag(kTuesdayMidnightUtc + 4 * kDay + 10 * kHour, spec) == WindowTag::offhours);  // Saturday
  CHECK(time_window_tag(kTuesdayMidnightUtc + 3 * kDay + 18 * kHour, spec) == WindowTag::offhours);  // Friday 18:00
  CHECK(time_window_tag(kTuesdayMidnightUtc + 3 * kDay + 17 * kHour, spec) == WindowTag::office);
  CHECK(time_window_tag(kTuesdayMidnightUtc + 8 * kHour + 3599, spec) == WindowTag::offhours);
}

TEST_CASE("utc offset shifts the local clock") {
  ClassKeySpec spec;
  spec.utc_offset_minutes = 120;
  // 08:00 UTC is 10:00 local.
  CHECK(time_window_tag(kTuesdayMidnightUtc + 8 * kHour, spec) == WindowTag::office);
  spec.utc_offset_minutes = -60;
  // Tuesday 00:30 UTC is Monday 23:30 local.
  CHECK(time_window_tag(kTuesdayMidnightUtc + kHour / 2, spec) == WindowTag::offhours);
}

TEST_CASE("make_class_key") {
  const auto r = rec("matsim", "alice", kTuesdayMidnightUtc + 10 * kHour);
  const auto k = make_class_key(r, ClassKeySpec::parse("group"));
  CHECK(k.group == std::optional<std::string>("matsim"));
  CHECK_FALSE(k.owner);
  CHECK_FALSE(k.window);
  CHECK(k.to_string() == "group=matsim");

  const auto k2 = make_class_key(r, ClassKeySpec::parse("owner+window"));
  CHECK(k2.owner == std::optional<std::string>("alice"));
  CHECK(k2.window == WindowTag::office);
  CHECK_FALSE(k2.group);
  CHECK(k2.to_string() == "owner=alice|win=office");

  auto other = r;
  other.queue_name = "long.q";
  CHECK(make_class_key(other, ClassKeySpec::parse("group")) == k);
}

TEST_CASE("class key spec parsing") {
  const auto s = ClassKeySpec::parse("group,host");
  CHECK(s.use_group);
  CHECK(s.use_submit_host);
  CHECK_FALSE(s.use_owner);
  CHECK(ClassKeySpec::parse(s.to_string()).to_string() == s.to_string());
  CHECK_THROWS_AS(ClassKeySpec::parse("colour"), ConfigInvalid);
  CHECK_THROWS_AS(ClassKeySpec::parse(""), ConfigInvalid);
  ClassKeySpec bad;
  bad.office_start_hour = 18;
  bad.office_end_hour = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
}

TEST_CASE("partition groups and preserves order") {
  std::vector<JobRecord> rs{rec("g", "a", 0, 1), rec("g", "a", 10, 2), rec("g", "b", 20, 3)};
  const auto classes = partition(rs, ClassKeySpec::parse("owner"));
  REQUIRE(classes.size() == 2);
  ClassKey ka;
  ka.owner = "a";
  REQUIRE(classes.count(ka) == 1);
  CHECK(classes.at(ka).size() == 2);
  CHECK(classes.at(ka).observations[0].job_number == 1);
  CHECK(classes.at(ka).observations[1].job_number == 2);
  CHECK(partition({}, ClassKeySpec{}).empty());
}

TEST_CASE("partition leaves out failed records") {
  std::vector<JobRecord> rs{rec("g", "a", 0, 1), rec("g", "a", 10, 2)};
  rs[1].failed_code = 3;
  const auto classes = partition(rs, ClassKeySpec{});
  REQUIRE(classes.size() == 1);
  CHECK(classes.begin()->second.size() == 1);
}

TEST_CASE("43,100-record synthetic trace partitions exhaustively") {
  auto mix = WorkloadMixSpec::defaults(43'100, 3);
  const auto records = gen_workload(mix);
  std::map<std::string, std::size_t> tally;
  std::size_t valid = 0;
  for (const auto& r : records) {
    if (r.failed_code != 0 || r.end_time < r.start_time) continue;
    if (r.ru_wallclock <= 0 && r.end_time == r.start_time) continue;
    ++tally[r.group];
    ++valid;
  }
  const auto classes = partition(records, ClassKeySpec{});
  CHECK(classes.size() == 4);
  std::size_t total = 0;
  for (const auto& [key, cls] : classes) {
    CHECK(tally[*key.group] == cls.size());
    total += cls.size();
  }
  CHECK(total == valid);
  CHECK(records.size() == 43'100);
}

TEST_CASE("refinement never merges classes") {
  const auto records = gen_workload(WorkloadMixSpec::defaults(5000, 8));
  const auto coarse = partition(records, ClassKeySpec::parse("group"));
  const auto fine = partition(records, ClassKeySpec::parse("group+window"));
  std::size_t fine_total = 0;
  for (const auto& [key, cls] : fine) {
    ClassKey parent;
    parent.group = key.group;
    REQUIRE(coarse.count(parent) == 1);
    std::set<std::int64_t> parent_jobs;
    for (const auto& o : coarse.at(parent).observations) parent_jobs.insert(o.job_number);
    for (const auto& o : cls.observations) CHECK(parent_jobs.count(o.job_number) == 1);
    fine_total += cls.size();
  }
  std::size_t coarse_total = 0;
  for (const auto& [key, cls] : coarse) coarse_total += cls.size();
  CHECK(fine_total == coarse_total);
}

TEST_CASE("modellable threshold") {
  JobClass c;
  c.observations.resize(19);
  CHECK_FALSE(is_modellable(c));
  c.observations.resize(20);
  CHECK(is_modellable(c));
}
