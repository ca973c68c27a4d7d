#include "gridsched/scheduler_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "gridsched/csv.hpp"
#include "gridsched/errors.hpp"
#include "gridsched/rng.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool edf_less(const Reservation& a, const Reservation& b) {
  return std::tie(a.deadline, a.job_number) < std::tie(b.deadline, b.job_number);
}

}  // namespace

std::size_t ClusterSpec::total_slots() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += static_cast<std::size_t>(std::max(node.slots, 0));
  return n;
}

void ClusterSpec::validate() const {
  for (const auto& node : nodes) {
    if (node.slots < 1) throw ConfigInvalid("node '" + node.id + "' must have >= 1 slot");
  }
  if (total_slots() < 1) throw ConfigInvalid("cluster has no slots");
}

ClusterSpec ClusterSpec::uniform(int node_count, int slots_per_node) {
  ClusterSpec c;
  for (int i = 0; i < node_count; ++i) {
    c.nodes.push_back({"node" + std::to_string(i + 1), slots_per_node});
  }
  return c;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accepted:
      return "accepted";
    case Verdict::rejected:
      return "rejected";
    case Verdict::unmodellable:
      return "unmodellable";
  }
  return "rejected";
}

double safety_margin(std::vector<double> recent_errors, double confidence) {
  return nearest_rank_quantile(std::move(recent_errors), confidence);
}

// --- cluster state ---------------------------------------------------------------

ClusterState::ClusterState(const ClusterSpec& spec) {
  spec.validate();
  for (const auto& node : spec.nodes) {
    for (int s = 0; s < node.slots; ++s) slots_.push_back({node.id, std::nullopt, {}});
  }
}

std::vector<Reservation> ClusterState::reservations() const {
  std::vector<Reservation> out;
  for (const auto& s : slots_) out.insert(out.end(), s.queue.begin(), s.queue.end());
  return out;
}

std::vector<Reservation> ClusterState::reservations_on(std::size_t slot) const {
  return slots_.at(slot).queue;
}

double ClusterState::earliest_fit(std::size_t slot, double now, double length) const {
  const auto& s = slots_.at(slot);
  double cursor = now;
  if (s.running) cursor = std::max(now, s.running->start + s.running->budget);
  double t = cursor;
  for (const auto& r : s.queue) {
    const double ps = std::max(r.start, cursor);
    const double pe = ps + r.budget;
    if (t + length <= ps) return t;
    t = std::max(t, pe);
    cursor = pe;
  }
  return t;
}

std::pair<std::size_t, double> ClusterState::earliest_fit_any(double now, double length) const {
  std::size_t best_slot = 0;
  double best = kInf;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    const double t = earliest_fit(s, now, length);
    if (t < best) {
      best = t;
      best_slot = s;
    }
  }
  return {best_slot, best};
}

void ClusterState::reserve(const Reservation& r) {
  auto& q = slots_.at(r.slot).queue;
  const auto pos = std::upper_bound(q.begin(), q.end(), r, [](const Reservation& a, const Reservation& b) {
    return std::tie(a.start, a.job_number) < std::tie(b.start, b.job_number);
  });
  q.insert(pos, r);
}

std::optional<Reservation> ClusterState::release(std::int64_t job_number) {
  for (auto& s : slots_) {
    const auto it = std::find_if(s.queue.begin(), s.queue.end(),
                                 [&](const Reservation& r) { return r.job_number == job_number; });
    if (it != s.queue.end()) {
      Reservation r = *it;
      s.queue.erase(it);
      return r;
    }
  }
  return std::nullopt;
}

void ClusterState::start(std::size_t slot, std::int64_t job_number, double now, double budget) {
  auto& s = slots_.at(slot);
  if (s.running) {
    throw std::logic_error("slot " + std::to_string(slot) + " already runs job " +
                           std::to_string(s.running->job_number));
  }
  s.running = RunningJob{job_number, now, budget};
}

std::optional<RunningJob> ClusterState::finish(std::size_t slot) {
  auto& s = slots_.at(slot);
  auto r = s.running;
  s.running.reset();
  return r;
}

// --- policy --------------------------------------------------------------------------

Decision admit(const JobRequest& job, const std::optional<Forecast>& forecast, double margin,
               ClusterState& cluster, double now) {
  Decision d;
  if (!forecast) {
    d.verdict = Verdict::unmodellable;
    return d;
  }
  d.budget = std::max(1.0, forecast->point) * (1.0 + margin);
  const auto [slot, start] = cluster.earliest_fit_any(now, d.budget);
  if (start + d.budget <= job.deadline) {
    d.verdict = Verdict::accepted;
    d.planned_slot = slot;
    d.planned_node = cluster.node_of(slot);
    d.planned_start = start;
    cluster.reserve({job.job_number, slot, start, d.budget, job.deadline});
  } else {
    d.verdict = Verdict::rejected;
  }
  return d;
}

Decision plan_best_effort(const JobRequest& job, double budget, ClusterState& cluster, double now) {
  Decision d;
  d.verdict = Verdict::unmodellable;
  d.budget = std::max(1.0, budget);
  const auto [slot, start] = cluster.earliest_fit_any(now, d.budget);
  d.planned_slot = slot;
  d.planned_node = cluster.node_of(slot);
  d.planned_start = start;
  cluster.reserve({job.job_number, slot, start, d.budget, kInf});
  return d;
}

std::vector<Assignment> dispatch(ClusterState& cluster, double now) {
  std::vector<Assignment> out;
  for (std::size_t s = 0; s < cluster.slot_count(); ++s) {
    if (!cluster.idle(s)) continue;
    const auto own = cluster.reservations_on(s);

    std::optional<Reservation> due;
    for (const auto& r : own) {
      if (r.start <= now && (!due || edf_less(r, *due))) due = r;
    }
    if (due) {
      cluster.release(due->job_number);
      cluster.start(s, due->job_number, now, due->budget);
      out.push_back({due->job_number, s, now, false});
      continue;
    }

    double gap_end = kInf;
    for (const auto& r : own) gap_end = std::min(gap_end, r.start);
    auto candidates = cluster.reservations();
    std::sort(candidates.begin(), candidates.end(), edf_less);
    for (const auto& c : candidates) {
      if (now + c.budget <= gap_end) {
        cluster.release(c.job_number);
        cluster.start(s, c.job_number, now, c.budget);
        out.push_back({c.job_number, s, now, c.slot != s || c.start > now});
        break;
      }
    }
  }
  return out;
}

// --- providers ---------------------------------------------------------------------------

EnsembleProvider::EnsembleProvider(ClassPipelineConfig cfg, std::size_t min_class_size)
    : cfg_(std::move(cfg)), min_class_size_(min_class_size) {}

ClassPipeline& EnsembleProvider::pipeline(const ClassKey& key) {
  auto it = pipelines_.find(key);
  if (it == pipelines_.end()) it = pipelines_.try_emplace(key, key, cfg_).first;
  return it->second;
}

std::optional<Prediction> EnsembleProvider::predict(const JobRequest& job) {
  auto& p = pipeline(job.class_key);
  if (p.observations() < min_class_size_ || !p.next_forecast() || p.inflation_errors().empty()) {
    return std::nullopt;
  }
  const auto report = p.ensemble().effective_confidence(job.requested_confidence);
  const double base = safety_margin({p.inflation_errors().begin(), p.inflation_errors().end()},
                                    job.requested_confidence);
  Prediction out;
  out.forecast = *p.next_forecast();
  out.effective_level = report.level;
  // Less certainty, larger margin.
  out.margin = base * job.requested_confidence / report.level;
  return out;
}

void EnsembleProvider::observe(const JobRequest& job, double actual) {
  pipeline(job.class_key).step(actual);
  seen_[job.class_key].push_back(actual);
}

double EnsembleProvider::fallback_budget(const JobRequest& job) const {
  const auto it = seen_.find(job.class_key);
  if (it != seen_.end() && !it->second.empty()) return median(it->second);
  std::vector<double> all;
  for (const auto& [key, values] : seen_) all.insert(all.end(), values.begin(), values.end());
  return all.empty() ? 3600.0 : median(std::move(all));
}

std::optional<Prediction> OracleProvider::predict(const JobRequest& job) {
  Prediction p;
  p.forecast = make_forecast(job.true_duration, 0.0, job.requested_confidence);
  p.margin = 0.0;
  p.effective_level = job.requested_confidence;
  return p;
}

// --- event loop -----------------------------------------------------------------------------

double SimReport::hit_rate() const {
  const auto done = deadline_hits + deadline_misses;
  return done == 0 ? 0.0 : static_cast<double>(deadline_hits) / static_cast<double>(done);
}

void to_json(nlohmann::json& j, const SimReport& r) {
  auto per_class = nlohmann::json::object();
  for (const auto& [key, s] : r.per_class) {
    per_class[key] = {{"admitted", s.admitted},
                      {"rejected", s.rejected},
                      {"unmodellable", s.unmodellable},
                      {"deadline_hits", s.hits},
                      {"deadline_misses", s.misses}};
  }
  j = {{"admitted", r.admitted},
       {"rejected", r.rejected},
       {"unmodellable", r.unmodellable},
       {"deadline_hits", r.deadline_hits},
       {"deadline_misses", r.deadline_misses},
       {"hit_rate", r.hit_rate()},
       {"backfilled", r.backfilled},
       {"double_booking_violations", r.double_booking_violations},
       {"utilisation", r.utilisation},
       {"makespan", r.makespan},
       {"per_class", per_class}};
}

namespace {

// elsewhere: a rejected job finishing off-cluster; its duration still feeds the class.
enum class EventType : int { complete = 0, elsewhere = 1, start = 2, submit = 3 };

struct Event {
  double time;
  EventType type;
  std::int64_t job_number;

  bool operator>(const Event& o) const {
    return std::tie(time, type, job_number) > std::tie(o.time, o.type, o.job_number);
  }
};

struct JobState {
  const JobRequest* request = nullptr;
  Decision decision;
  std::optional<double> start;
  std::optional<double> end;
  std::size_t slot = 0;
  std::size_t log_index = 0;
};

}  // namespace

SimReport run_simulation(const std::vector<JobRequest>& requests, const ClusterSpec& cluster,
                         ForecastProvider& provider) {
  SimReport report;
  ClusterState state(cluster);
  std::unordered_map<std::int64_t, JobState> jobs;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  for (const auto& r : requests) {
    JobState js;
    js.request = &r;
    if (!jobs.try_emplace(r.job_number, js).second) {
      throw std::invalid_argument("duplicate job number " + std::to_string(r.job_number));
    }
    events.push({r.submit_time, EventType::submit, r.job_number});
  }

  // Independent occupancy ledger for the double-booking check.
  std::vector<int> occupancy(state.slot_count(), 0);
  std::vector<double> slot_free_at(state.slot_count(), -kInf);
  double busy = 0.0;
  double first_submit = kInf;
  double last_completion = -kInf;

  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    const double now = ev.time;
    auto& job = jobs.at(ev.job_number);
    const auto& req = *job.request;
    const auto key = req.class_key.to_string();

    if (ev.type == EventType::elsewhere) {
      provider.observe(req, req.true_duration);
    } else if (ev.type == EventType::complete) {
      state.finish(job.slot);
      --occupancy[job.slot];
      slot_free_at[job.slot] = now;
      job.end = now;
      busy += now - *job.start;
      last_completion = std::max(last_completion, now);
      provider.observe(req, req.true_duration);
      auto& entry = report.jobs[job.log_index];
      entry.completion = now;
      if (job.decision.verdict == Verdict::accepted) {
        const bool hit = now <= req.deadline;
        entry.hit = hit;
        auto& cls = report.per_class[key];
        if (hit) {
          ++report.deadline_hits;
          ++cls.hits;
        } else {
          ++report.deadline_misses;
          ++cls.misses;
        }
      }
    } else if (ev.type == EventType::submit) {
      first_submit = std::min(first_submit, now);
      const auto pred = provider.predict(req);
      if (pred) {
        job.decision = admit(req, pred->forecast, pred->margin, state, now);
      } else {
        job.decision = plan_best_effort(req, provider.fallback_budget(req), state, now);
      }
      auto& cls = report.per_class[key];
      switch (job.decision.verdict) {
        case Verdict::accepted:
          ++report.admitted;
          ++cls.admitted;
          break;
        case Verdict::rejected:
          ++report.rejected;
          ++cls.rejected;
          // Without this the class would stop learning once it rejects everything.
          events.push({now + req.true_duration, EventType::elsewhere, req.job_number});
          break;
        case Verdict::unmodellable:
          ++report.unmodellable;
          ++cls.unmodellable;
          break;
      }
      JobLogEntry entry;
      entry.job_number = req.job_number;
      entry.class_key = key;
      entry.verdict = job.decision.verdict;
      entry.budget = job.decision.budget;
      entry.planned_start = job.decision.planned_start;
      entry.deadline = req.deadline;
      job.log_index = report.jobs.size();
      report.jobs.push_back(std::move(entry));
      if (job.decision.planned_start && *job.decision.planned_start > now) {
        events.push({*job.decision.planned_start, EventType::start, req.job_number});
      }
    }

    for (const auto& a : dispatch(state, now)) {
      auto& started = jobs.at(a.job_number);
      started.start = now;
      started.slot = a.slot;
      if (++occupancy[a.slot] > 1 || now < slot_free_at[a.slot]) ++report.double_booking_violations;
      if (a.backfilled) ++report.backfilled;
      report.jobs[started.log_index].actual_start = now;
      events.push({now + started.request->true_duration, EventType::complete, a.job_number});
    }
    for (int occ : occupancy) {
      if (occ > 1) ++report.double_booking_violations;
    }
  }

  if (last_completion > first_submit) {
    report.makespan = last_completion - first_submit;
    report.utilisation = busy / (static_cast<double>(state.slot_count()) * report.makespan);
  }
  std::sort(report.jobs.begin(), report.jobs.end(),
            [](const JobLogEntry& a, const JobLogEntry& b) { return a.job_number < b.job_number; });
  return report;
}

// --- request generation ----------------------------------------------------------------------

std::vector<JobRequest> make_requests(const std::vector<JobRecord>& records,
                                      const ClassKeySpec& key_spec, const DeadlinePolicy& policy) {
  Rng rng(splitmix64(policy.seed));
  std::vector<JobRecord> sorted;
  for (const auto& r : records) {
    if (r.failed_code == 0 && r.end_time >= r.start_time && derive_wallclock(r) > 0) sorted.push_back(r);
  }
  std::sort(sorted.begin(), sorted.end(), [](const JobRecord& a, const JobRecord& b) {
    return std::tie(a.submit_time, a.job_number) < std::tie(b.submit_time, b.job_number);
  });
  std::vector<JobRequest> out;
  out.reserve(sorted.size());
  for (const auto& r : sorted) {
    JobRequest q;
    q.job_number = r.job_number;
    q.class_key = make_class_key(r, key_spec);
    q.submit_time = static_cast<double>(r.submit_time);
    q.true_duration = static_cast<double>(derive_wallclock(r));
    q.deadline = q.submit_time + rng.uniform(policy.slack_lo, policy.slack_hi) * q.true_duration;
    q.requested_confidence = policy.confidence;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<JobRequest> gen_sim_requests(const std::vector<SimClass>& classes,
                                         const DeadlinePolicy& policy) {
  std::vector<JobRequest> out;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    const auto& c = classes[ci];
    Rng rng = Rng::derive(policy.seed, ci);
    for (const auto& s : gen_class_series(c.gen)) {
      JobRequest q;
      q.class_key.group = c.group;
      q.submit_time = s.submit_time;
      q.true_duration = s.duration;
      q.deadline = s.submit_time + rng.uniform(policy.slack_lo, policy.slack_hi) * c.gen.base_level;
      q.requested_confidence = policy.confidence;
      out.push_back(std::move(q));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const JobRequest& a, const JobRequest& b) {
    return a.submit_time < b.submit_time;
  });
  std::int64_t number = 1;
  for (auto& q : out) q.job_number = number++;
  return out;
}

void write_job_log_csv(std::ostream& os, const SimReport& r) {
  os << "job_number,class,verdict,budget,planned_start,actual_start,completion,deadline,hit\n";
  for (const auto& j : r.jobs) {
    os << j.job_number << ',' << j.class_key << ',' << to_string(j.verdict) << ','
       << fmt_num(j.budget) << ',' << fmt_num(j.planned_start) << ',' << fmt_num(j.actual_start)
       << ',' << fmt_num(j.completion) << ',' << fmt_num(j.deadline) << ','
       << (j.hit ? (*j.hit ? "1" : "0") : "") << '\n';
  }
}

}  // namespace gridsched
