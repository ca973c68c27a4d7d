#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsched {

// One entry of a classic Sun Grid Engine accounting file.
struct JobRecord {
  std::string queue_name;
  std::string exec_host;
  std::string group;
  std::string owner;
  std::string job_name;
  std::int64_t job_number = 0;
  std::int64_t submit_time = 0;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;
  std::int64_t failed_code = 0;
  std::int64_t exit_status = 0;
  std::int64_t ru_wallclock = 0;

  bool operator==(const JobRecord&) const = default;
};

struct TraceLoadOptions {
  std::int64_t min_duration_filter = 10;
  bool drop_failed = true;
  double max_malformed_fraction = 0.05;

  void validate() const;
};

// Counters over non-comment lines; they always sum to non_comment_lines().
struct IngestStats {
  std::size_t parsed = 0;          // records retained
  std::size_t skipped = 0;         // blank lines
  std::size_t malformed = 0;       // unparsable, ordering violations, duplicate job numbers
  std::size_t filtered_short = 0;  // duration below min_duration_filter
  std::size_t failed = 0;          // failed_code != 0 and drop_failed
  std::size_t comments = 0;        // '#' lines, not part of the sum

  std::size_t non_comment_lines() const {
    return parsed + skipped + malformed + filtered_short + failed;
  }
  double malformed_fraction() const;
};

struct LoadedTrace {
  std::vector<JobRecord> records;
  IngestStats stats;
};

inline constexpr std::size_t kAccountingMinFields = 14;

// nullopt for comment and blank lines; throws MalformedLine otherwise.
std::optional<JobRecord> parse_accounting_line(std::string_view line);

// Inverse of parse_accounting_line (account written as "sge", priority as 0).
std::string format_accounting_line(const JobRecord& r);

// ru_wallclock when positive, else end - start. Throws ExcludedRecord for failed
// jobs and InvalidRecord when end < start.
std::int64_t derive_wallclock(const JobRecord& r);

// Records sorted by (end_time, job_number). Throws TraceRejected when the
// malformed fraction exceeds opts.max_malformed_fraction.
LoadedTrace load_trace(std::istream& in, const TraceLoadOptions& opts = {});

}  // namespace gridsched
