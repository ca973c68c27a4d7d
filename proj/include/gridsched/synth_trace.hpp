#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridsched/job_classing.hpp"
#include "gridsched/trace_ingest.hpp"

namespace gridsched {

enum class NoiseKind { lognormal, ar1 };

struct ClassGenSpec {
  double base_level = 500.0;
  NoiseKind noise = NoiseKind::lognormal;
  double sigma_log = 0.15;  // lognormal noise
  double phi = 0.0;         // ar1 noise: log-deviation l_t = phi*l_{t-1} + sigma*e_t
  double sigma = 0.15;
  std::size_t n_jobs = 1000;
  double interarrival_mean = 600.0;
  std::uint64_t seed = 1;
  std::int64_t start_time = 1'100'000'000;  // epoch of the arrival process origin

  void validate() const;
};

struct TimedDuration {
  double submit_time = 0.0;
  double duration = 0.0;
};

// durations = base_level * multiplicative noise; exponential interarrivals.
std::vector<TimedDuration> gen_class_series(const ClassGenSpec& spec);

// Durations at indices >= at multiplied by factor.
std::vector<TimedDuration> inject_mode_change(std::vector<TimedDuration> series, std::size_t at,
                                              double factor);
std::vector<double> inject_mode_change(std::vector<double> series, std::size_t at, double factor);

std::vector<double> durations_of(const std::vector<TimedDuration>& series);

struct ClassMix {
  std::string group;
  std::string owner;
  std::string host;
  ClassGenSpec gen;
};

struct WorkloadMixSpec {
  std::vector<ClassMix> classes;
  double short_fail_fraction = 0.04;
  double long_fraction = 0.025;
  double long_threshold = 1e5;
  double long_max = 1e6;
  double duration_lo = 50.0;
  double duration_hi = 5000.0;
  double queue_wait_mean = 30.0;
  std::uint64_t seed = 42;

  void validate() const;

  // Four groups splitting total_jobs evenly.
  static WorkloadMixSpec defaults(std::size_t total_jobs = 50'000, std::uint64_t seed = 42);
};

void to_json(nlohmann::json& j, const ClassGenSpec& s);
void from_json(const nlohmann::json& j, ClassGenSpec& s);
void to_json(nlohmann::json& j, const WorkloadMixSpec& s);
void from_json(const nlohmann::json& j, WorkloadMixSpec& s);

// Log-uniform bulk on [duration_lo, duration_hi] whose per-class sequence is
// autocorrelated through a Gaussian copula, plus short/failed and long tails.
// Records are sorted by submit time and numbered from 1.
std::vector<JobRecord> gen_workload(const WorkloadMixSpec& mix);

// Header comment with generator id and full spec, then one accounting line per record.
std::string serialise_trace(const WorkloadMixSpec& mix, const std::vector<JobRecord>& records);

// Accounting records for a single class series (e.g. a seeded mode-change trace).
std::vector<JobRecord> records_from_series(const std::vector<TimedDuration>& series,
                                           const std::string& group, const std::string& owner,
                                           std::int64_t first_job_number = 1);

}  // namespace gridsched
