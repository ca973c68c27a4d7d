#include "gridsched/synth_trace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "gridsched/errors.hpp"
#include "gridsched/rng.hpp"
#include "gridsched/stats.hpp"

namespace gridsched {

void ClassGenSpec::validate() const {
  if (!(base_level > 0.0)) throw ConfigInvalid("base_level must be > 0");
  if (!(std::abs(phi) < 1.0)) throw ConfigInvalid("|phi| must be < 1");
  if (!(sigma_log > 0.0) || !(sigma > 0.0)) throw ConfigInvalid("noise scales must be > 0");
  if (!(interarrival_mean > 0.0)) throw ConfigInvalid("interarrival_mean must be > 0");
}

std::vector<TimedDuration> gen_class_series(const ClassGenSpec& spec) {
  spec.validate();
  Rng rng(splitmix64(spec.seed));
  std::vector<TimedDuration> out;
  out.reserve(spec.n_jobs);
  double t = static_cast<double>(spec.start_time);
  double dev = spec.noise == NoiseKind::ar1
                   ? rng.normal() * spec.sigma / std::sqrt(1.0 - spec.phi * spec.phi)
                   : 0.0;
  for (std::size_t i = 0; i < spec.n_jobs; ++i) {
    t += rng.exponential(spec.interarrival_mean);
    double log_noise = 0.0;
    if (spec.noise == NoiseKind::lognormal) {
      log_noise = spec.sigma_log * rng.normal();
    } else {
      if (i > 0) dev = spec.phi * dev + spec.sigma * rng.normal();
      log_noise = dev;
    }
    out.push_back({t, spec.base_level * std::exp(log_noise)});
  }
  return out;
}

std::vector<TimedDuration> inject_mode_change(std::vector<TimedDuration> series, std::size_t at,
                                              double factor) {
  if (at >= series.size()) throw std::invalid_argument("mode change index out of range");
  for (std::size_t i = at; i < series.size(); ++i) series[i].duration *= factor;
  return series;
}

std::vector<double> inject_mode_change(std::vector<double> series, std::size_t at, double factor) {
  if (at >= series.size()) throw std::invalid_argument("mode change index out of range");
  for (std::size_t i = at; i < series.size(); ++i) series[i] *= factor;
  return series;
}

std::vector<double> durations_of(const std::vector<TimedDuration>& series) {
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(s.duration);
  return out;
}

void WorkloadMixSpec::validate() const {
  if (classes.empty()) throw ConfigInvalid("workload mix has no classes");
  if (!(short_fail_fraction >= 0.0 && long_fraction >= 0.0 &&
        short_fail_fraction + long_fraction < 1.0)) {
    throw ConfigInvalid("tail fractions must be non-negative and sum below 1");
  }
  if (!(0.0 < duration_lo && duration_lo < duration_hi)) {
    throw ConfigInvalid("need 0 < duration_lo < duration_hi");
  }
  if (!(long_threshold < long_max)) throw ConfigInvalid("need long_threshold < long_max");
  for (const auto& c : classes) c.gen.validate();
}

WorkloadMixSpec WorkloadMixSpec::defaults(std::size_t total_jobs, std::uint64_t seed) {
  WorkloadMixSpec mix;
  mix.seed = seed;
  const char* groups[] = {"matsim", "ocotir", "cosmo", "bioinf"};
  const char* owners[] = {"alice", "bob", "carol", "dave"};
  const double phis[] = {0.8, 0.3, 0.7, 0.6};
  for (std::size_t i = 0; i < 4; ++i) {
    ClassMix c;
    c.group = groups[i];
    c.owner = owners[i];
    c.host = "node0" + std::to_string(i + 1);
    c.gen.noise = NoiseKind::ar1;
    c.gen.phi = phis[i];
    c.gen.n_jobs = total_jobs / 4 + (i < total_jobs % 4 ? 1 : 0);
    // Six months of submissions per class.
    c.gen.interarrival_mean = 183.0 * 86400.0 / static_cast<double>(std::max<std::size_t>(1, c.gen.n_jobs));
    c.gen.seed = i + 1;
    mix.classes.push_back(c);
  }
  return mix;
}

void to_json(nlohmann::json& j, const ClassGenSpec& s) {
  j = {{"base_level", s.base_level},
       {"noise", s.noise == NoiseKind::ar1 ? "ar1" : "lognormal"},
       {"sigma_log", s.sigma_log},
       {"phi", s.phi},
       {"sigma", s.sigma},
       {"n_jobs", s.n_jobs},
       {"interarrival_mean", s.interarrival_mean},
       {"seed", s.seed},
       {"start_time", s.start_time}};
}

void from_json(const nlohmann::json& j, ClassGenSpec& s) {
  ClassGenSpec d;
  s.base_level = j.value("base_level", d.base_level);
  s.noise = j.value("noise", std::string("lognormal")) == "ar1" ? NoiseKind::ar1 : NoiseKind::lognormal;
  s.sigma_log = j.value("sigma_log", d.sigma_log);
  s.phi = j.value("phi", d.phi);
  s.sigma = j.value("sigma", d.sigma);
  s.n_jobs = j.value("n_jobs", d.n_jobs);
  s.interarrival_mean = j.value("interarrival_mean", d.interarrival_mean);
  s.seed = j.value("seed", d.seed);
  s.start_time = j.value("start_time", d.start_time);
}

void to_json(nlohmann::json& j, const WorkloadMixSpec& s) {
  auto classes = nlohmann::json::array();
  for (const auto& c : s.classes) {
    classes.push_back({{"group", c.group}, {"owner", c.owner}, {"host", c.host}, {"gen", c.gen}});
  }
  j = {{"classes", classes},
       {"short_fail_fraction", s.short_fail_fraction},
       {"long_fraction", s.long_fraction},
       {"long_threshold", s.long_threshold},
       {"long_max", s.long_max},
       {"duration_lo", s.duration_lo},
       {"duration_hi", s.duration_hi},
       {"queue_wait_mean", s.queue_wait_mean},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, WorkloadMixSpec& s) {
  WorkloadMixSpec d;
  s.classes.clear();
  for (const auto& c : j.at("classes")) {
    ClassMix m;
    m.group = c.value("group", std::string("users"));
    m.owner = c.value("owner", std::string("user"));
    m.host = c.value("host", std::string("node01"));
    if (c.contains("gen")) c.at("gen").get_to(m.gen);
    s.classes.push_back(m);
  }
  s.short_fail_fraction = j.value("short_fail_fraction", d.short_fail_fraction);
  s.long_fraction = j.value("long_fraction", d.long_fraction);
  s.long_threshold = j.value("long_threshold", d.long_threshold);
  s.long_max = j.value("long_max", d.long_max);
  s.duration_lo = j.value("duration_lo", d.duration_lo);
  s.duration_hi = j.value("duration_hi", d.duration_hi);
  s.queue_wait_mean = j.value("queue_wait_mean", d.queue_wait_mean);
  s.seed = j.value("seed", d.seed);
}

std::vector<JobRecord> gen_workload(const WorkloadMixSpec& mix) {
  mix.validate();
  struct Draft {
    std::int64_t submit;
    std::size_t class_index;
    std::size_t seq;
    JobRecord rec;
  };
  std::vector<Draft> drafts;
  const double log_span = std::log(mix.duration_hi / mix.duration_lo);
  const double long_span = std::log(mix.long_max / mix.long_threshold);

  for (std::size_t ci = 0; ci < mix.classes.size(); ++ci) {
    const auto& cls = mix.classes[ci];
    Rng rng = Rng::derive(mix.seed, ci);
    const double phi = cls.gen.noise == NoiseKind::ar1 ? cls.gen.phi : 0.0;
    const double innovation = std::sqrt(1.0 - phi * phi);
    double latent = rng.normal();
    double t = static_cast<double>(cls.gen.start_time);
    for (std::size_t i = 0; i < cls.gen.n_jobs; ++i) {
      if (i > 0) latent = phi * latent + innovation * rng.normal();
      t += rng.exponential(cls.gen.interarrival_mean);
      const double category = rng.uniform();
      const double tail_u = rng.uniform();
      const double wait = std::round(rng.exponential(mix.queue_wait_mean));

      JobRecord r;
      r.queue_name = "all.q";
      r.exec_host = cls.host;
      r.group = cls.group;
      r.owner = cls.owner;
      r.job_name = "run_" + cls.group + ".sh";
      double duration = 0.0;
      if (category < mix.short_fail_fraction) {
        duration = std::floor(1.0 + 9.0 * tail_u);  // 1..9 s
        if (tail_u < 0.5) {
          r.failed_code = 1;
          r.exit_status = 1;
        }
      } else if (category < mix.short_fail_fraction + mix.long_fraction) {
        duration = std::max(std::floor(mix.long_threshold) + 1.0,
                            std::round(mix.long_threshold * std::exp(long_span * tail_u)));
      } else {
        const double u = normal_cdf(latent);
        duration = std::clamp(std::round(mix.duration_lo * std::exp(log_span * u)),
                              std::ceil(mix.duration_lo), std::floor(mix.duration_hi));
      }
      r.submit_time = static_cast<std::int64_t>(std::floor(t));
      r.start_time = r.submit_time + static_cast<std::int64_t>(wait);
      r.ru_wallclock = static_cast<std::int64_t>(duration);
      r.end_time = r.start_time + r.ru_wallclock;
      drafts.push_back({r.submit_time, ci, i, std::move(r)});
    }
  }
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tie(a.submit, a.class_index, a.seq) < std::tie(b.submit, b.class_index, b.seq);
  });
  std::vector<JobRecord> out;
  out.reserve(drafts.size());
  std::int64_t number = 1;
  for (auto& d : drafts) {
    d.rec.job_number = number++;
    out.push_back(std::move(d.rec));
  }
  return out;
}

std::string serialise_trace(const WorkloadMixSpec& mix, const std::vector<JobRecord>& records) {
  std::ostringstream os;
  os << "# gridsched synthetic accounting trace\n";
  os << "# generator=" << kGeneratorId << '\n';
  os << "# spec=" << nlohmann::json(mix).dump() << '\n';
  for (const auto& r : records) os << format_accounting_line(r) << '\n';
  return os.str();
}

std::vector<JobRecord> records_from_series(const std::vector<TimedDuration>& series,
                                           const std::string& group, const std::string& owner,
                                           std::int64_t first_job_number) {
  std::vector<JobRecord> out;
  out.reserve(series.size());
  std::int64_t number = first_job_number;
  std::int64_t last_end = 0;
  for (const auto& s : series) {
    JobRecord r;
    r.queue_name = "all.q";
    r.exec_host = "node01";
    r.group = group;
    r.owner = owner;
    r.job_name = "job.sh";
    r.job_number = number++;
    r.submit_time = static_cast<std::int64_t>(std::floor(s.submit_time));
    r.start_time = r.submit_time;
    r.ru_wallclock = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(s.duration)));
    r.end_time = r.start_time + r.ru_wallclock;
    // Keep completion order equal to series order.
    if (r.end_time <= last_end) {
      r.end_time = last_end + 1;
      r.start_time = r.end_time - r.ru_wallclock;
      r.submit_time = std::min(r.submit_time, r.start_time);
    }
    last_end = r.end_time;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace gridsched
