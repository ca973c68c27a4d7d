#include "gridsched/trace_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_set>

#include "gridsched/errors.hpp"

namespace gridsched {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(':', pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view field, const char* name) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw MalformedLine(std::string("non-numeric ") + name + " field '" + std::string(field) + "'");
  }
  return v;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

void TraceLoadOptions::validate() const {
  if (min_duration_filter < 0) throw std::invalid_argument("min_duration_filter must be >= 0");
  if (!(max_malformed_fraction >= 0.0 && max_malformed_fraction <= 1.0)) {
    throw std::invalid_argument("max_malformed_fraction must be in [0,1]");
  }
}

double IngestStats::malformed_fraction() const {
  const auto n = non_comment_lines();
  return n == 0 ? 0.0 : static_cast<double>(malformed) / static_cast<double>(n);
}

std::optional<JobRecord> parse_accounting_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (!line.empty() && line.front() == '#') return std::nullopt;
  if (is_blank(line)) return std::nullopt;

  const auto f = split_fields(line);
  if (f.size() < kAccountingMinFields) {
    throw MalformedLine("expected at least 14 fields, got " + std::to_string(f.size()));
  }
  JobRecord r;
  r.queue_name = f[0];
  r.exec_host = f[1];
  r.group = f[2];
  r.owner = f[3];
  r.job_name = f[4];
  r.job_number = parse_int(f[5], "job_number");
  r.submit_time = parse_int(f[8], "submission_time");
  r.start_time = parse_int(f[9], "start_time");
  r.end_time = parse_int(f[10], "end_time");
  r.failed_code = parse_int(f[11], "failed");
  r.exit_status = parse_int(f[12], "exit_status");
  r.ru_wallclock = parse_int(f[13], "ru_wallclock");
  if (r.job_number <= 0) throw MalformedLine("job_number must be positive");
  if (r.ru_wallclock < 0) throw MalformedLine("ru_wallclock must be non-negative");
  return r;
}

std::string format_accounting_line(const JobRecord& r) {
  std::ostringstream os;
  os << r.queue_name << ':' << r.exec_host << ':' << r.group << ':' << r.owner << ':'
     << r.job_name << ':' << r.job_number << ":sge:0:" << r.submit_time << ':' << r.start_time
     << ':' << r.end_time << ':' << r.failed_code << ':' << r.exit_status << ':'
     << r.ru_wallclock;
  return os.str();
}

std::int64_t derive_wallclock(const JobRecord& r) {
  if (r.failed_code != 0) throw ExcludedRecord("job " + std::to_string(r.job_number) + " failed");
  if (r.end_time < r.start_time) {
    throw InvalidRecord("job " + std::to_string(r.job_number) + " ends before it starts");
  }
  return r.ru_wallclock > 0 ? r.ru_wallclock : r.end_time - r.start_time;
}

LoadedTrace load_trace(std::istream& in, const TraceLoadOptions& opts) {
  opts.validate();
  LoadedTrace out;
  auto& st = out.stats;
  std::unordered_set<std::int64_t> seen;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (!view.empty() && view.front() == '#') {
      ++st.comments;
      continue;
    }
    std::optional<JobRecord> rec;
    try {
      rec = parse_accounting_line(view);
    } catch (const MalformedLine&) {
      ++st.malformed;
      continue;
    }
    if (!rec) {
      ++st.skipped;
      continue;
    }
    if (!seen.insert(rec->job_number).second) {
      ++st.malformed;
      continue;
    }
    if (rec->failed_code != 0 && opts.drop_failed) {
      ++st.failed;
      continue;
    }
    if (rec->failed_code == 0 &&
        (rec->submit_time > rec->start_time || rec->start_time > rec->end_time)) {
      ++st.malformed;
      continue;
    }
    if (rec->failed_code == 0 && derive_wallclock(*rec) < opts.min_duration_filter) {
      ++st.filtered_short;
      continue;
    }
    ++st.parsed;
    out.records.push_back(std::move(*rec));
  }
  if (st.malformed_fraction() > opts.max_malformed_fraction) {
    throw TraceRejected("malformed fraction " + std::to_string(st.malformed_fraction()) +
                        " exceeds " + std::to_string(opts.max_malformed_fraction));
  }
  std::sort(out.records.begin(), out.records.end(), [](const JobRecord& a, const JobRecord& b) {
    return std::tie(a.end_time, a.job_number) < std::tie(b.end_time, b.job_number);
  });
  return out;
}

}  // namespace gridsched
