#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsched/trace_ingest.hpp"

namespace gridsched {

enum class WindowTag { office, offhours };

std::string_view to_string(WindowTag t);

struct ClassKeySpec {
  bool use_group = true;
  bool use_owner = false;
  bool use_submit_host = false;
  bool use_time_window = false;
  int office_start_hour = 9;
  int office_end_hour = 18;
  int utc_offset_minutes = 0;

  void validate() const;

  // Parses "group", "owner+window", "group,host", ... (tokens: group, owner,
  // host, window). Throws ConfigInvalid.
  static ClassKeySpec parse(std::string_view text);
  std::string to_string() const;
};

struct ClassKey {
  std::optional<std::string> group;
  std::optional<std::string> owner;
  std::optional<std::string> submit_host;
  std::optional<WindowTag> window;

  auto operator<=>(const ClassKey&) const = default;
  bool operator==(const ClassKey&) const = default;

  // Canonical "group=<g>|owner=<o>|host=<h>|win=<w>" with absent fields omitted.
  std::string to_string() const;
};

struct Observation {
  std::int64_t end_time = 0;
  double duration = 0.0;
  std::int64_t job_number = 0;
};

struct JobClass {
  ClassKey key;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  std::vector<double> durations() const;
};

inline constexpr std::size_t kDefaultMinClassSize = 20;

// Local Mon-Fri with hour in [start, end) is office time.
WindowTag time_window_tag(std::int64_t epoch_seconds, const ClassKeySpec& spec);

ClassKey make_class_key(const JobRecord& r, const ClassKeySpec& spec);

// Failed records and non-positive durations are left out; class order follows input order.
std::map<ClassKey, JobClass> partition(const std::vector<JobRecord>& records,
                                       const ClassKeySpec& spec);

bool is_modellable(const JobClass& c, std::size_t min_class_size = kDefaultMinClassSize);

}  // namespace gridsched
