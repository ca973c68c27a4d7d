#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridsched/expert_selector.hpp"
#include "gridsched/job_classing.hpp"
#include "gridsched/scheduler_sim.hpp"
#include "gridsched/trace_ingest.hpp"

namespace gridsched {

struct SimulationConfig {
  bool enabled = false;
  int nodes = 16;
  int slots_per_node = 4;
  double slack_lo = 1.5;
  double slack_hi = 4.0;

  ClusterSpec cluster() const { return ClusterSpec::uniform(nodes, slots_per_node); }
};

struct PipelineConfig {
  std::vector<std::string> inputs;
  ClassKeySpec class_key;
  std::size_t min_class_size = kDefaultMinClassSize;
  TraceLoadOptions ingest;
  ClassPipelineConfig pipeline;
  SimulationConfig simulation;
  double confidence = 0.9;
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  // Throws ConfigInvalid.
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Missing keys keep their defaults; unknown top-level keys throw ConfigInvalid.
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_pipeline_config(const std::string& path);

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfigInvalid = 2,
  kExitIo = 3,
  kExitTraceRejected = 4,
};

struct ClassReplay {
  ClassKey key;
  std::vector<StepRecord> steps;
  std::size_t switches = 0;
};

ClassReplay replay_class(const JobClass& cls, const ClassPipelineConfig& cfg);

// One pipeline per class; classes run in parallel. Output order follows input order.
std::vector<ClassReplay> replay_classes(const std::vector<const JobClass*>& classes,
                                        const ClassPipelineConfig& cfg);
std::vector<ClassReplay> replay_classes_serial(const std::vector<const JobClass*>& classes,
                                               const ClassPipelineConfig& cfg);

struct ErrorHistogram {
  std::vector<double> bin_lo;
  std::vector<double> bin_hi;
  std::vector<std::size_t> count;
};

inline constexpr int kHistogramBins = 21;

// 21 equal bins over [-1, 1] (1 itself in the last), plus (-inf, -1) and (1, inf).
ErrorHistogram error_histogram(std::span<const double> pct_errors);

void emit_class_summary(std::ostream& os, const ClassReplay& r);
void emit_histogram(std::ostream& os, const ErrorHistogram& h);
void emit_flags(std::ostream& os, const ClassReplay& r);
void emit_decision_log(std::ostream& os, const ClassReplay& r);

struct DurationCdf {
  std::vector<double> duration;  // distinct, ascending
  std::vector<double> cdf;
  double q10 = 0.0;
  double q90 = 0.0;
  double r_squared = 0.0;  // CDF against log10(duration) on [q10, q90]
};

DurationCdf duration_cdf(std::vector<double> durations);
void emit_duration_cdf(std::ostream& os, const DurationCdf& c);

struct Stages {
  bool replay = true;
  bool cdf = true;
  bool simulate = false;
};

// Runs ingest, partition and the selected stages, writing artifacts under
// cfg.out_dir. Diagnostics go to diag; the return value is an ExitCode.
int run_stages(const PipelineConfig& cfg, const Stages& stages, std::ostream& diag);

// All stages; simulation when cfg.simulation.enabled.
int run_pipeline(const PipelineConfig& cfg, std::ostream& diag);

}  // namespace gridsched
