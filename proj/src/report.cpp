#include "gridsched/report.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "gridsched/csv.hpp"
#include "gridsched/errors.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

namespace fs = std::filesystem;

// --- config ------------------------------------------------------------------------

void PipelineConfig::validate() const {
  class_key.validate();
  ingest.validate();
  pipeline.models.validate();
  pipeline.ensemble.validate();
  pipeline.thresholds.validate();
  pipeline.lowess.validate();
  if (pipeline.lowess_window < 3) throw ConfigInvalid("lowess window must be >= 3");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigInvalid("confidence must be in (0, 1)");
  if (min_class_size < 1) throw ConfigInvalid("min_class_size must be >= 1");
  if (simulation.nodes < 1 || simulation.slots_per_node < 1) {
    throw ConfigInvalid("simulation needs >= 1 node with >= 1 slot");
  }
  if (!(simulation.slack_lo > 0.0 && simulation.slack_hi >= simulation.slack_lo)) {
    throw ConfigInvalid("deadline slack must satisfy 0 < slack_lo <= slack_hi");
  }
  if (out_dir.empty()) throw ConfigInvalid("output directory is empty");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  const auto& m = c.pipeline.models;
  const auto& e = c.pipeline.ensemble;
  const auto& t = c.pipeline.thresholds;
  const auto& l = c.pipeline.lowess;
  j = {
      {"inputs", c.inputs},
      {"class_key", c.class_key.to_string()},
      {"min_class_size", c.min_class_size},
      {"ingest",
       {{"min_duration", c.ingest.min_duration_filter},
        {"drop_failed", c.ingest.drop_failed},
        {"max_malformed_fraction", c.ingest.max_malformed_fraction}}},
      {"models",
       {{"set", m.models},
        {"baseline_window", m.baseline_window},
        {"poly_order", m.poly_order},
        {"poly_window", m.poly_window},
        {"ses_alpha", m.ses_alpha},
        {"holt_alpha", m.holt_alpha},
        {"holt_beta", m.holt_beta},
        {"log_transform", m.log_transform},
        {"arma",
         {{"auto_order", m.arma.auto_order},
          {"order", {m.arma.order.p, m.arma.order.d, m.arma.order.q}},
          {"max_p", m.arma.grid.max_p},
          {"max_d", m.arma.grid.max_d},
          {"max_q", m.arma.grid.max_q},
          {"refit_every", m.arma.refit_every},
          {"fit_window", m.arma.fit_window}}}}},
      {"ensemble",
       {{"max_horizon", e.max_horizon},
        {"min_warmup", e.min_warmup},
        {"lambda", e.lambda},
        {"challenger_ttl", e.challenger_ttl},
        {"onset_window", e.onset_window},
        {"error_memory", e.error_memory}}},
      {"thresholds",
       {{"err", t.err_threshold},
        {"lowess_dev", t.lowess_dev_threshold},
        {"sustain_m", t.sustain_m},
        {"sustain_n", t.sustain_n}}},
      {"lowess",
       {{"fraction", l.fraction},
        {"robustness_iters", l.robustness_iters},
        {"degree", l.degree},
        {"window", c.pipeline.lowess_window}}},
      {"margin_memory", c.pipeline.margin_memory},
      {"simulation",
       {{"enabled", c.simulation.enabled},
        {"nodes", c.simulation.nodes},
        {"slots_per_node", c.simulation.slots_per_node},
        {"slack_lo", c.simulation.slack_lo},
        {"slack_hi", c.simulation.slack_hi}}},
      {"confidence", c.confidence},
      {"seed", c.seed},
      {"out", c.out_dir},
  };
}

namespace {

template <typename T>
void get_opt(const nlohmann::json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) it->get_to(out);
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  const auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw ConfigInvalid(std::string("config section '") + key + "' must be an object");
  return *it;
}

}  // namespace

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  if (!j.is_object()) throw ConfigInvalid("config must be a JSON object");
  static const std::set<std::string> known{"inputs",   "class_key", "min_class_size", "ingest",
                                           "models",   "ensemble",  "thresholds",     "lowess",
                                           "margin_memory", "simulation", "confidence", "seed", "out"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigInvalid("unknown config key '" + key + "'");
  }
  try {
    if (const auto it = j.find("inputs"); it != j.end()) {
      if (it->is_string()) c.inputs = {it->get<std::string>()};
      else it->get_to(c.inputs);
    }
    if (const auto it = j.find("class_key"); it != j.end()) {
      c.class_key = ClassKeySpec::parse(it->get<std::string>());
    }
    get_opt(j, "min_class_size", c.min_class_size);

    const auto& ing = section(j, "ingest");
    get_opt(ing, "min_duration", c.ingest.min_duration_filter);
    get_opt(ing, "drop_failed", c.ingest.drop_failed);
    get_opt(ing, "max_malformed_fraction", c.ingest.max_malformed_fraction);

    auto& m = c.pipeline.models;
    const auto& mj = section(j, "models");
    get_opt(mj, "set", m.models);
    get_opt(mj, "baseline_window", m.baseline_window);
    get_opt(mj, "poly_order", m.poly_order);
    get_opt(mj, "poly_window", m.poly_window);
    get_opt(mj, "ses_alpha", m.ses_alpha);
    get_opt(mj, "holt_alpha", m.holt_alpha);
    get_opt(mj, "holt_beta", m.holt_beta);
    get_opt(mj, "log_transform", m.log_transform);
    const auto& aj = section(mj, "arma");
    get_opt(aj, "auto_order", m.arma.auto_order);
    if (const auto it = aj.find("order"); it != aj.end()) {
      const auto o = it->get<std::vector<int>>();
      if (o.size() != 3) throw ConfigInvalid("arma order must be [p, d, q]");
      m.arma.order = {o[0], o[1], o[2]};
    }
    get_opt(aj, "max_p", m.arma.grid.max_p);
    get_opt(aj, "max_d", m.arma.grid.max_d);
    get_opt(aj, "max_q", m.arma.grid.max_q);
    get_opt(aj, "refit_every", m.arma.refit_every);
    get_opt(aj, "fit_window", m.arma.fit_window);

    auto& e = c.pipeline.ensemble;
    const auto& ej = section(j, "ensemble");
    get_opt(ej, "max_horizon", e.max_horizon);
    get_opt(ej, "min_warmup", e.min_warmup);
    get_opt(ej, "lambda", e.lambda);
    get_opt(ej, "challenger_ttl", e.challenger_ttl);
    get_opt(ej, "onset_window", e.onset_window);
    get_opt(ej, "error_memory", e.error_memory);
    m.arma.max_horizon = e.max_horizon;

    auto& t = c.pipeline.thresholds;
    const auto& tj = section(j, "thresholds");
    get_opt(tj, "err", t.err_threshold);
    get_opt(tj, "lowess_dev", t.lowess_dev_threshold);
    get_opt(tj, "sustain_m", t.sustain_m);
    get_opt(tj, "sustain_n", t.sustain_n);

    auto& l = c.pipeline.lowess;
    const auto& lj = section(j, "lowess");
    get_opt(lj, "fraction", l.fraction);
    get_opt(lj, "robustness_iters", l.robustness_iters);
    get_opt(lj, "degree", l.degree);
    get_opt(lj, "window", c.pipeline.lowess_window);
    get_opt(j, "margin_memory", c.pipeline.margin_memory);

    const auto& sj = section(j, "simulation");
    get_opt(sj, "enabled", c.simulation.enabled);
    get_opt(sj, "nodes", c.simulation.nodes);
    get_opt(sj, "slots_per_node", c.simulation.slots_per_node);
    get_opt(sj, "slack_lo", c.simulation.slack_lo);
    get_opt(sj, "slack_hi", c.simulation.slack_hi);

    get_opt(j, "confidence", c.confidence);
    get_opt(j, "seed", c.seed);
    get_opt(j, "out", c.out_dir);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigInvalid(std::string("bad config value: ") + ex.what());
  }
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigInvalid("config '" + path + "' is not valid JSON: " + ex.what());
  }
  PipelineConfig c;
  from_json(j, c);
  return c;
}

// --- replay ---------------------------------------------------------------------------

ClassReplay replay_class(const JobClass& cls, const ClassPipelineConfig& cfg) {
  ClassPipeline pipeline(cls.key, cfg);
  ClassReplay out;
  out.key = cls.key;
  out.steps.reserve(cls.size());
  for (const auto& o : cls.observations) out.steps.push_back(pipeline.step(o.duration));
  out.switches = pipeline.ensemble().switches();
  return out;
}

std::vector<ClassReplay> replay_classes(const std::vector<const JobClass*>& classes,
                                        const ClassPipelineConfig& cfg) {
  std::vector<ClassReplay> out(classes.size());
  std::vector<std::exception_ptr> errors(classes.size());
  const auto n = static_cast<std::ptrdiff_t>(classes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = replay_class(*classes[i], cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ClassReplay> replay_classes_serial(const std::vector<const JobClass*>& classes,
                                               const ClassPipelineConfig& cfg) {
  std::vector<ClassReplay> out;
  out.reserve(classes.size());
  for (const auto* c : classes) out.push_back(replay_class(*c, cfg));
  return out;
}

// --- emitters ---------------------------------------------------------------------------

ErrorHistogram error_histogram(std::span<const double> pct_errors) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr double width = 2.0 / kHistogramBins;
  ErrorHistogram h;
  h.bin_lo.push_back(-inf);
  h.bin_hi.push_back(-1.0);
  for (int b = 0; b < kHistogramBins; ++b) {
    h.bin_lo.push_back(-1.0 + b * width);
    h.bin_hi.push_back(b + 1 == kHistogramBins ? 1.0 : -1.0 + (b + 1) * width);
  }
  h.bin_lo.push_back(1.0);
  h.bin_hi.push_back(inf);
  h.count.assign(kHistogramBins + 2, 0);
  for (double e : pct_errors) {
    if (std::isnan(e)) continue;
    std::size_t idx;
    if (e < -1.0) {
      idx = 0;
    } else if (e > 1.0) {
      idx = kHistogramBins + 1;
    } else {
      const auto b = static_cast<int>(std::floor((e + 1.0) * (kHistogramBins / 2.0)));
      idx = static_cast<std::size_t>(std::min(b, kHistogramBins - 1)) + 1;
    }
    ++h.count[idx];
  }
  return h;
}

void emit_class_summary(std::ostream& os, const ClassReplay& r) {
  os << "step,actual,forecast,pct_error,smoothed,flags,event,active_model\n";
  for (const auto& s : r.steps) {
    os << s.step << ',' << fmt_num(s.actual) << ',' << fmt_num(s.forecast) << ','
       << fmt_num(s.pct_error) << ',' << fmt_num(s.smoothed) << ',' << s.flag.kinds.to_string() << ','
       << to_string(s.flag.event) << ',' << s.active_model << '\n';
  }
}

void emit_histogram(std::ostream& os, const ErrorHistogram& h) {
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.count.size(); ++i) {
    os << fmt_num(h.bin_lo[i]) << ',' << fmt_num(h.bin_hi[i]) << ',' << h.count[i] << '\n';
  }
}

void emit_flags(std::ostream& os, const ClassReplay& r) {
  os << "index,duration,forecast,pct_error,smoothed,kinds,event\n";
  for (const auto& s : r.steps) {
    if (!s.flag.kinds.any() && s.flag.event == AnomalyEvent::none) continue;
    os << s.step << ',' << fmt_num(s.actual) << ',' << fmt_num(s.forecast) << ','
       << fmt_num(s.pct_error) << ',' << fmt_num(s.smoothed) << ',' << s.flag.kinds.to_string()
       << ',' << to_string(s.flag.event) << '\n';
  }
}

void emit_decision_log(std::ostream& os, const ClassReplay& r) {
  os << "step,active_model,forecast,actual,pct_error,ewma_active,horizon,event\n";
  for (const auto& s : r.steps) {
    os << s.step << ',' << s.active_model << ',' << fmt_num(s.forecast) << ',' << fmt_num(s.actual)
       << ',' << fmt_num(s.pct_error) << ',' << fmt_num(s.ewma_active) << ',' << s.horizon << ','
       << to_string(s.flag.event) << '\n';
  }
}

DurationCdf duration_cdf(std::vector<double> durations) {
  if (durations.empty()) throw std::invalid_argument("duration_cdf needs at least one record");
  std::sort(durations.begin(), durations.end());
  const double n = static_cast<double>(durations.size());
  DurationCdf c;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (i + 1 < durations.size() && durations[i + 1] == durations[i]) continue;
    c.duration.push_back(durations[i]);
    c.cdf.push_back(static_cast<double>(i + 1) / n);
  }
  c.q10 = nearest_rank_quantile(durations, 0.10);
  c.q90 = nearest_rank_quantile(durations, 0.90);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < c.duration.size(); ++i) {
    if (c.duration[i] >= c.q10 && c.duration[i] <= c.q90 && c.duration[i] > 0) {
      xs.push_back(std::log10(c.duration[i]));
      ys.push_back(c.cdf[i]);
    }
  }
  if (xs.size() >= 2) {
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    c.r_squared = (sxx > 0 && syy > 0) ? sxy * sxy / (sxx * syy) : 1.0;
  } else {
    c.r_squared = 1.0;
  }
  return c;
}

void emit_duration_cdf(std::ostream& os, const DurationCdf& c) {
  os << "duration,cdf\n";
  for (std::size_t i = 0; i < c.duration.size(); ++i) {
    os << fmt_num(c.duration[i]) << ',' << fmt_num(c.cdf[i]) << '\n';
  }
}

// --- orchestration -----------------------------------------------------------------------

namespace {

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

nlohmann::json stats_json(const IngestStats& s) {
  return {{"parsed", s.parsed},
          {"skipped", s.skipped},
          {"malformed", s.malformed},
          {"filtered_short", s.filtered_short},
          {"failed", s.failed},
          {"comments", s.comments}};
}

std::string class_file_stem(std::size_t index) {
  std::ostringstream os;
  os << "class_" << std::setw(3) << std::setfill('0') << index;
  return os.str();
}

nlohmann::json replay_summary(const ClassReplay& r) {
  std::vector<double> errs;
  std::size_t flagged = 0, candidates = 0, transients = 0;
  for (const auto& s : r.steps) {
    if (s.pct_error) errs.push_back(*s.pct_error);
    if (s.flag.kinds.any()) ++flagged;
    if (s.flag.event == AnomalyEvent::mode_change_candidate) ++candidates;
    if (s.flag.event == AnomalyEvent::transient) ++transients;
  }
  const double sd = sample_stddev(errs);
  return {{"observations", r.steps.size()},
          {"scored_forecasts", errs.size()},
          {"mean_pct_error", errs.empty() ? 0.0 : mean(errs)},
          {"pct_error_variance", sd * sd},
          {"flagged", flagged},
          {"transients", transients},
          {"mode_change_candidates", candidates},
          {"switches", r.switches},
          {"final_active_model", r.steps.empty() ? "" : r.steps.back().active_model}};
}

int run_stages_impl(const PipelineConfig& cfg, const Stages& stages) {
  cfg.validate();
  if (cfg.inputs.empty()) throw ConfigInvalid("no input trace given");

  std::vector<JobRecord> records;
  IngestStats total;
  nlohmann::json per_input = nlohmann::json::array();
  for (const auto& path : cfg.inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read input '" + path + "'");
    auto loaded = load_trace(in, cfg.ingest);
    per_input.push_back({{"input", path}, {"stats", stats_json(loaded.stats)}});
    total.parsed += loaded.stats.parsed;
    total.skipped += loaded.stats.skipped;
    total.malformed += loaded.stats.malformed;
    total.filtered_short += loaded.stats.filtered_short;
    total.failed += loaded.stats.failed;
    total.comments += loaded.stats.comments;
    records.insert(records.end(), loaded.records.begin(), loaded.records.end());
  }
  std::stable_sort(records.begin(), records.end(), [](const JobRecord& a, const JobRecord& b) {
    return std::tie(a.end_time, a.job_number) < std::tie(b.end_time, b.job_number);
  });

  const fs::path out_dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + cfg.out_dir + "'");

  write_json(out_dir / "ingest_stats.json", {{"total", stats_json(total)}, {"inputs", per_input}});
  nlohmann::json effective = cfg;
  effective.erase("out");
  write_json(out_dir / "config.json", effective);

  const auto classes = partition(records, cfg.class_key);
  std::vector<const JobClass*> modellable;
  write_file(out_dir / "classes.csv", [&](std::ostream& os) {
    os << "index,class,jobs,modellable\n";
    std::size_t idx = 0;
    for (const auto& [key, cls] : classes) {
      const bool ok = is_modellable(cls, cfg.min_class_size);
      os << idx++ << ',' << key.to_string() << ',' << cls.size() << ',' << (ok ? 1 : 0) << '\n';
      if (ok) modellable.push_back(&cls);
    }
  });

  auto pipeline_cfg = cfg.pipeline;
  pipeline_cfg.ensemble.confidence = cfg.confidence;

  if (stages.replay) {
    const auto replays = replay_classes(modellable, pipeline_cfg);
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t i = 0; i < replays.size(); ++i) {
      const auto& r = replays[i];
      const auto stem = class_file_stem(i);
      write_file(out_dir / (stem + "_replay.csv"), [&](std::ostream& os) { emit_class_summary(os, r); });
      std::vector<double> errs;
      for (const auto& s : r.steps) {
        if (s.pct_error) errs.push_back(*s.pct_error);
      }
      write_file(out_dir / (stem + "_hist.csv"),
                 [&](std::ostream& os) { emit_histogram(os, error_histogram(errs)); });
      write_file(out_dir / (stem + "_flags.csv"), [&](std::ostream& os) { emit_flags(os, r); });
      write_file(out_dir / (stem + "_decisions.csv"), [&](std::ostream& os) { emit_decision_log(os, r); });
      auto s = replay_summary(r);
      s["class"] = r.key.to_string();
      s["file_stem"] = stem;
      summary.push_back(std::move(s));
    }
    write_json(out_dir / "summary.json", {{"classes", summary}});
  }

  if (stages.cdf) {
    std::vector<double> durations;
    durations.reserve(records.size());
    for (const auto& r : records) {
      if (r.failed_code == 0 && r.end_time >= r.start_time) {
        durations.push_back(static_cast<double>(derive_wallclock(r)));
      }
    }
    if (!durations.empty()) {
      const auto cdf = duration_cdf(std::move(durations));
      write_file(out_dir / "cdf.csv", [&](std::ostream& os) { emit_duration_cdf(os, cdf); });
      write_json(out_dir / "cdf_summary.json", {{"q10", cdf.q10},
                                                {"q90", cdf.q90},
                                                {"r_squared", cdf.r_squared},
                                                {"points", cdf.duration.size()}});
    }
  }

  if (stages.simulate) {
    DeadlinePolicy policy;
    policy.slack_lo = cfg.simulation.slack_lo;
    policy.slack_hi = cfg.simulation.slack_hi;
    policy.confidence = cfg.confidence;
    policy.seed = cfg.seed;
    const auto requests = make_requests(records, cfg.class_key, policy);
    EnsembleProvider provider(pipeline_cfg, cfg.min_class_size);
    const auto report = run_simulation(requests, cfg.simulation.cluster(), provider);
    write_json(out_dir / "sim_report.json", report);
    write_file(out_dir / "sim_decisions.csv", [&](std::ostream& os) { write_job_log_csv(os, report); });
  }
  return kExitOk;
}

}  // namespace

int run_stages(const PipelineConfig& cfg, const Stages& stages, std::ostream& diag) {
  try {
    return run_stages_impl(cfg, stages);
  } catch (const ConfigInvalid& e) {
    diag << "config invalid: " << e.what() << '\n';
    return kExitConfigInvalid;
  } catch (const IoError& e) {
    diag << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const TraceRejected& e) {
    diag << "trace rejected: " << e.what() << '\n';
    return kExitTraceRejected;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_pipeline(const PipelineConfig& cfg, std::ostream& diag) {
  Stages stages;
  stages.simulate = cfg.simulation.enabled;
  return run_stages(cfg, stages, diag);
}

}  // namespace gridsched
