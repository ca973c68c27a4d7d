#include "gridsched/job_classing.hpp"

#include <chrono>
#include <sstream>

#include "gridsched/errors.hpp"

namespace gridsched {

std::string_view to_string(WindowTag t) { return t == WindowTag::office ? "office" : "offhours"; }

void ClassKeySpec::validate() const {
  if (!(use_group || use_owner || use_submit_host || use_time_window)) {
    throw ConfigInvalid("class key spec enables no fields");
  }
  if (!(0 <= office_start_hour && office_start_hour < office_end_hour && office_end_hour <= 24)) {
    throw ConfigInvalid("office hours must satisfy 0 <= start < end <= 24");
  }
}

ClassKeySpec ClassKeySpec::parse(std::string_view text) {
  ClassKeySpec s;
  s.use_group = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find_first_of("+,", pos);
    if (next == std::string_view::npos) next = text.size();
    const auto tok = text.substr(pos, next - pos);
    if (tok == "group") {
      s.use_group = true;
    } else if (tok == "owner") {
      s.use_owner = true;
    } else if (tok == "host") {
      s.use_submit_host = true;
    } else if (tok == "window") {
      s.use_time_window = true;
    } else {
      throw ConfigInvalid("unknown class key field '" + std::string(tok) + "'");
    }
    pos = next + 1;
  }
  s.validate();
  return s;
}

std::string ClassKeySpec::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(use_group, "group");
  add(use_owner, "owner");
  add(use_submit_host, "host");
  add(use_time_window, "window");
  return out;
}

std::string ClassKey::to_string() const {
  std::string out;
  auto add = [&](const char* name, std::string_view v) {
    if (!out.empty()) out += '|';
    out += name;
    out += '=';
    out += v;
  };
  if (group) add("group", *group);
  if (owner) add("owner", *owner);
  if (submit_host) add("host", *submit_host);
  if (window) add("win", gridsched::to_string(*window));
  return out;
}

std::vector<double> JobClass::durations() const {
  std::vector<double> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.duration);
  return out;
}

WindowTag time_window_tag(std::int64_t epoch_seconds, const ClassKeySpec& spec) {
  using namespace std::chrono;
  const sys_seconds local{seconds{epoch_seconds + std::int64_t{spec.utc_offset_minutes} * 60}};
  const auto day = floor<days>(local);
  const weekday wd{day};
  const auto hour = duration_cast<hours>(local - day).count();
  const bool workday = wd != Saturday && wd != Sunday;
  const bool in_hours = hour >= spec.office_start_hour && hour < spec.office_end_hour;
  return workday && in_hours ? WindowTag::office : WindowTag::offhours;
}

ClassKey make_class_key(const JobRecord& r, const ClassKeySpec& spec) {
  ClassKey k;
  if (spec.use_group) k.group = r.group;
  if (spec.use_owner) k.owner = r.owner;
  if (spec.use_submit_host) k.submit_host = r.exec_host;
  if (spec.use_time_window) k.window = time_window_tag(r.submit_time, spec);
  return k;
}

std::map<ClassKey, JobClass> partition(const std::vector<JobRecord>& records,
                                       const ClassKeySpec& spec) {
  spec.validate();
  std::map<ClassKey, JobClass> out;
  for (const auto& r : records) {
    if (r.failed_code != 0 || r.end_time < r.start_time) continue;
    const auto duration = derive_wallclock(r);
    if (duration <= 0) continue;
    auto key = make_class_key(r, spec);
    auto [it, inserted] = out.try_emplace(key);
    if (inserted) it->second.key = std::move(key);
    it->second.observations.push_back(
        {r.end_time, static_cast<double>(duration), r.job_number});
  }
  return out;
}

bool is_modellable(const JobClass& c, std::size_t min_class_size) {
  return c.size() >= min_class_size;
}

}  // namespace gridsched
