#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridsched/errors.hpp"
#include "gridsched/report.hpp"
#include "gridsched/synth_trace.hpp"
#include "gridsched/trace_ingest.hpp"

namespace {

using namespace gridsched;

struct CommonFlags {
  std::string config;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> class_key;
  std::optional<double> confidence;
  std::optional<std::string> models;
  std::optional<int> min_class_size;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON pipeline config");
  cmd->add_option("--input,-i", f.inputs, "Accounting trace file(s)");
  cmd->add_option("--seed", f.seed, "Seed for randomised deadlines");
  cmd->add_option("--out,-o", f.out, "Output directory");
  cmd->add_option("--class-key", f.class_key, "Class key, e.g. group or owner+window");
  cmd->add_option("--confidence", f.confidence, "Requested confidence level");
  cmd->add_option("--models", f.models, "Comma-separated model set, e.g. median,poly,holt,arma");
  cmd->add_option("--min-class-size", f.min_class_size, "Minimum jobs per modellable class");
}

PipelineConfig resolve(const CommonFlags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_pipeline_config(f.config);
  if (!f.inputs.empty()) cfg.inputs = f.inputs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.class_key) cfg.class_key = ClassKeySpec::parse(*f.class_key);
  if (f.confidence) cfg.confidence = *f.confidence;
  if (f.min_class_size) {
    if (*f.min_class_size < 1) throw ConfigInvalid("min class size must be >= 1");
    cfg.min_class_size = static_cast<std::size_t>(*f.min_class_size);
  }
  if (f.models) {
    std::vector<std::string> names;
    std::stringstream ss(*f.models);
    for (std::string tok; std::getline(ss, tok, ',');) {
      if (!tok.empty()) names.push_back(tok);
    }
    cfg.pipeline.models.models = names;
  }
  return cfg;
}

int run_with(const CommonFlags& f, const Stages& stages) {
  PipelineConfig cfg;
  try {
    cfg = resolve(f);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config invalid: " << e.what() << '\n';
    return kExitConfigInvalid;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  }
  return run_stages(cfg, stages, std::cerr);
}

int run_synth(const std::string& config, std::size_t jobs, std::optional<std::uint64_t> seed,
              const std::string& out) {
  try {
    WorkloadMixSpec mix = WorkloadMixSpec::defaults(jobs, seed.value_or(42));
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw IoError("cannot read config '" + config + "'");
      try {
        nlohmann::json::parse(in).get_to(mix);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigInvalid(e.what());
      }
      if (seed) mix.seed = *seed;
    }
    mix.validate();
    const auto records = gen_workload(mix);
    const auto text = serialise_trace(mix, records);
    if (out.empty() || out == "-") {
      std::cout << text;
    } else {
      std::ofstream os(out, std::ios::binary | std::ios::trunc);
      if (!os) throw IoError("cannot write '" + out + "'");
      os << text;
      if (!os.flush()) throw IoError("write failed for '" + out + "'");
    }
    return kExitOk;
  } catch (const ConfigInvalid& e) {
    std::cerr << "config invalid: " << e.what() << '\n';
    return kExitConfigInvalid;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  }
}

int run_ingest(const std::vector<std::string>& inputs, const TraceLoadOptions& opts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& path : inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::cerr << "io error: cannot read input '" << path << "'\n";
      return kExitIo;
    }
    try {
      const auto t = load_trace(in, opts);
      out.push_back({{"input", path},
                     {"parsed", t.stats.parsed},
                     {"skipped", t.stats.skipped},
                     {"malformed", t.stats.malformed},
                     {"filtered_short", t.stats.filtered_short},
                     {"failed", t.stats.failed},
                     {"comments", t.stats.comments}});
    } catch (const TraceRejected& e) {
      std::cerr << "trace rejected: " << path << ": " << e.what() << '\n';
      return kExitTraceRejected;
    }
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Job run-time forecasting and deadline scheduling workbench"};
  app.require_subcommand(1);

  std::string synth_config, synth_out;
  std::size_t synth_jobs = 50'000;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic accounting trace");
  synth->add_option("--config", synth_config, "Workload mix JSON");
  synth->add_option("--jobs", synth_jobs, "Total jobs (default mix only)");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out,-o", synth_out, "Output file ('-' for stdout)");

  std::vector<std::string> ingest_inputs;
  TraceLoadOptions ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "Validate traces and print ingest statistics");
  ingest->add_option("--input,-i", ingest_inputs, "Accounting trace file(s)")->required();
  ingest->add_option("--min-duration", ingest_opts.min_duration_filter, "Drop jobs shorter than this");
  ingest->add_option("--max-malformed", ingest_opts.max_malformed_fraction, "Reject threshold");

  CommonFlags replay_flags, sim_flags, report_flags, run_flags;
  auto* replay = app.add_subcommand("replay", "Forecast and flag anomalies per class");
  add_common(replay, replay_flags);
  auto* simulate = app.add_subcommand("simulate", "Replay the trace through the deadline scheduler");
  add_common(simulate, sim_flags);
  auto* report = app.add_subcommand("report", "Duration CDF and per-class summaries");
  add_common(report, report_flags);
  auto* run = app.add_subcommand("run", "Full pipeline as configured");
  add_common(run, run_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigInvalid;
  }

  if (*synth) return run_synth(synth_config, synth_jobs, synth_seed, synth_out);
  if (*ingest) return run_ingest(ingest_inputs, ingest_opts);
  if (*replay) return run_with(replay_flags, Stages{true, false, false});
  if (*simulate) return run_with(sim_flags, Stages{false, false, true});
  if (*report) return run_with(report_flags, Stages{true, true, false});
  if (*run) {
    PipelineConfig cfg;
    try {
      cfg = resolve(run_flags);
    } catch (const ConfigInvalid& e) {
      std::cerr << "config invalid: " << e.what() << '\n';
      return kExitConfigInvalid;
    } catch (const IoError& e) {
      std::cerr << "io error: " << e.what() << '\n';
      return kExitIo;
    }
    return run_pipeline(cfg, std::cerr);
  }
  return kExitFailure;
}
