#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridsched/expert_selector.hpp"
#include "gridsched/forecasters.hpp"
#include "gridsched/job_classing.hpp"
#include "gridsched/synth_trace.hpp"
#include "gridsched/trace_ingest.hpp"

namespace gridsched {

struct Node {
  std::string id;
  int slots = 1;
};

// Homogeneous nodes only.
struct ClusterSpec {
  std::vector<Node> nodes;

  std::size_t total_slots() const;
  void validate() const;
  static ClusterSpec uniform(int node_count, int slots_per_node);
};

struct JobRequest {
  std::int64_t job_number = 0;
  ClassKey class_key;
  double submit_time = 0.0;
  double deadline = 0.0;
  double requested_confidence = 0.9;
  double true_duration = 0.0;  // hidden from the policy until completion
};

enum class Verdict { accepted, rejected, unmodellable };

std::string to_string(Verdict v);

struct Decision {
  Verdict verdict = Verdict::rejected;
  double budget = 0.0;
  std::optional<std::size_t> planned_slot;
  std::optional<std::string> planned_node;
  std::optional<double> planned_start;
};

// Nearest-rank empirical quantile of the recent errors.
double safety_margin(std::vector<double> recent_errors, double confidence);

struct Reservation {
  std::int64_t job_number = 0;
  std::size_t slot = 0;
  double start = 0.0;
  double budget = 0.0;
  double deadline = 0.0;  // +inf for best-effort jobs
};

struct RunningJob {
  std::int64_t job_number = 0;
  double start = 0.0;
  double budget = 0.0;
};

struct Assignment {
  std::int64_t job_number = 0;
  std::size_t slot = 0;
  double start = 0.0;
  bool backfilled = false;
};

// Per-slot running job plus the queue of reserved-but-not-started jobs.
class ClusterState {
 public:
  explicit ClusterState(const ClusterSpec& spec);

  std::size_t slot_count() const { return slots_.size(); }
  const std::string& node_of(std::size_t slot) const { return slots_.at(slot).node; }
  bool idle(std::size_t slot) const { return !slots_.at(slot).running.has_value(); }
  const std::optional<RunningJob>& running(std::size_t slot) const { return slots_.at(slot).running; }
  std::vector<Reservation> reservations() const;
  std::vector<Reservation> reservations_on(std::size_t slot) const;

  // Earliest t >= now at which [t, t+length) clears the slot's projected
  // timeline (running job, then reservations in start order).
  double earliest_fit(std::size_t slot, double now, double length) const;

  // Slot with the earliest fit; ties to the lowest slot index.
  std::pair<std::size_t, double> earliest_fit_any(double now, double length) const;

  void reserve(const Reservation& r);
  std::optional<Reservation> release(std::int64_t job_number);

  // Throws std::logic_error if the slot is already running a job.
  void start(std::size_t slot, std::int64_t job_number, double now, double budget);
  std::optional<RunningJob> finish(std::size_t slot);

 private:
  struct Slot {
    std::string node;
    std::optional<RunningJob> running;
    std::vector<Reservation> queue;  // sorted by start
  };
  std::vector<Slot> slots_;
};

// budget = max(1, forecast.point) * (1 + margin); accepted iff the earliest fit
// respecting existing reservations ends by the deadline. A missing forecast
// means the class is unmodellable: no admission test, no reservation.
Decision admit(const JobRequest& job, const std::optional<Forecast>& forecast, double margin,
               ClusterState& cluster, double now);

// Reserve a best-effort slot (no deadline check) for an unmodellable job.
Decision plan_best_effort(const JobRequest& job, double budget, ClusterState& cluster, double now);

// On each idle slot: EDF among queued jobs due by now on that slot; otherwise
// conservative backfill (EDF order) of any queued job whose budget fits before
// the slot's next reservation.
std::vector<Assignment> dispatch(ClusterState& cluster, double now);

struct Prediction {
  Forecast forecast;
  double margin = 0.0;
  double effective_level = 0.0;
};

// Supplies forecasts to the simulator and receives realised durations.
class ForecastProvider {
 public:
  virtual ~ForecastProvider() = default;
  // nullopt: treat the job's class as unmodellable.
  virtual std::optional<Prediction> predict(const JobRequest& job) = 0;
  virtual void observe(const JobRequest& job, double actual) = 0;
  // Best-effort budget estimate for unmodellable jobs.
  virtual double fallback_budget(const JobRequest& job) const = 0;
};

// Per-class ClassPipeline ensembles fed by completions.
class EnsembleProvider final : public ForecastProvider {
 public:
  explicit EnsembleProvider(ClassPipelineConfig cfg, std::size_t min_class_size = kDefaultMinClassSize);

  std::optional<Prediction> predict(const JobRequest& job) override;
  void observe(const JobRequest& job, double actual) override;
  double fallback_budget(const JobRequest& job) const override;

  ClassPipeline& pipeline(const ClassKey& key);
  const std::map<ClassKey, ClassPipeline>& pipelines() const { return pipelines_; }

 private:
  ClassPipelineConfig cfg_;
  std::size_t min_class_size_;
  std::map<ClassKey, ClassPipeline> pipelines_;
  std::map<ClassKey, std::vector<double>> seen_;
};

// Exact durations with zero margin.
class OracleProvider final : public ForecastProvider {
 public:
  std::optional<Prediction> predict(const JobRequest& job) override;
  void observe(const JobRequest&, double) override {}
  double fallback_budget(const JobRequest& job) const override { return job.true_duration; }
};

struct ClassSimStats {
  std::size_t admitted = 0;
  std::size_t rejected = 0;
  std::size_t unmodellable = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

struct JobLogEntry {
  std::int64_t job_number = 0;
  std::string class_key;
  Verdict verdict = Verdict::rejected;
  double budget = 0.0;
  std::optional<double> planned_start;
  std::optional<double> actual_start;
  std::optional<double> completion;
  double deadline = 0.0;
  std::optional<bool> hit;
};

struct SimReport {
  std::size_t admitted = 0;
  std::size_t rejected = 0;
  std::size_t unmodellable = 0;
  std::size_t deadline_hits = 0;
  std::size_t deadline_misses = 0;
  std::size_t backfilled = 0;
  std::size_t double_booking_violations = 0;
  double utilisation = 0.0;
  double makespan = 0.0;
  std::map<std::string, ClassSimStats> per_class;
  std::vector<JobLogEntry> jobs;

  double hit_rate() const;
};

void to_json(nlohmann::json& j, const SimReport& r);

// Discrete-event replay; same-time events are ordered complete < start < submit,
// then job number. Every job's true duration reaches the provider when it
// completes; rejected jobs are taken to run elsewhere and report back at
// submit + true_duration.
SimReport run_simulation(const std::vector<JobRequest>& requests, const ClusterSpec& cluster,
                         ForecastProvider& provider);

struct DeadlinePolicy {
  double slack_lo = 1.5;
  double slack_hi = 4.0;
  double confidence = 0.9;
  std::uint64_t seed = 7;
};

// deadline = submit + U[slack_lo, slack_hi] * reference duration.
std::vector<JobRequest> make_requests(const std::vector<JobRecord>& records,
                                      const ClassKeySpec& key_spec, const DeadlinePolicy& policy);

struct SimClass {
  std::string group;
  ClassGenSpec gen;
};

// Classes generated with gen_class_series; reference duration = class base level.
std::vector<JobRequest> gen_sim_requests(const std::vector<SimClass>& classes,
                                         const DeadlinePolicy& policy);

void write_job_log_csv(std::ostream& os, const SimReport& r);

}  // namespace gridsched
