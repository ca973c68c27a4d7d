#include "gridsched/forecasters.hpp"

namespace gridsched {

using nlohmann::json;

void to_json(json& j, const PolyTrendModel& m) {
  j = json{{"kind", "poly"},
           {"order", m.order},
           {"window", m.window},
           {"coefficients", m.coefficients},
           {"residual_rms", m.residual_rms},
           {"residual_sd", m.residual_sd},
           {"last_x", m.last_x}};
}

void from_json(const json& j, PolyTrendModel& m) {
  j.at("order").get_to(m.order);
  j.at("window").get_to(m.window);
  j.at("coefficients").get_to(m.coefficients);
  m.residual_rms = j.value("residual_rms", 0.0);
  m.residual_sd = j.value("residual_sd", m.residual_rms);
  m.last_x = j.value("last_x", static_cast<double>(m.window - 1));
}

void to_json(json& j, const SmoothingModel& m) {
  j = json{{"kind", m.kind == SmoothingKind::ses ? "ses" : "holt"},
           {"alpha", m.alpha},
           {"level", m.level},
           {"residual_rms", m.residual_rms}};
  if (m.kind == SmoothingKind::holt) {
    j["beta"] = m.beta;
    j["trend"] = m.trend;
  }
}

void from_json(const json& j, SmoothingModel& m) {
  m.kind = j.at("kind").get<std::string>() == "holt" ? SmoothingKind::holt : SmoothingKind::ses;
  j.at("alpha").get_to(m.alpha);
  j.at("level").get_to(m.level);
  m.beta = j.value("beta", m.beta);
  m.trend = j.value("trend", 0.0);
  m.residual_rms = j.value("residual_rms", 0.0);
}

void to_json(json& j, const BaselineModel& m) {
  j = json{{"kind", m.kind == BaselineKind::mean ? "mean" : "median"}, {"window", m.window}};
}

void from_json(const json& j, BaselineModel& m) {
  m.kind = j.at("kind").get<std::string>() == "mean" ? BaselineKind::mean : BaselineKind::median;
  j.at("window").get_to(m.window);
}

void to_json(json& j, const ARMAModel& m) {
  j = json{{"kind", "arma"},
           {"p", m.order.p},
           {"d", m.order.d},
           {"q", m.order.q},
           {"phi", m.phi},
           {"theta", m.theta},
           {"intercept", m.intercept},
           {"sigma2", m.sigma2},
           {"n_obs", m.n_obs},
           {"residual_skewness", m.residual_skewness},
           {"history", std::vector<double>(m.history.begin(), m.history.end())},
           {"residuals", std::vector<double>(m.residuals.begin(), m.residuals.end())},
           {"last_raw", m.last_raw}};
}

void from_json(const json& j, ARMAModel& m) {
  j.at("p").get_to(m.order.p);
  j.at("d").get_to(m.order.d);
  j.at("q").get_to(m.order.q);
  j.at("phi").get_to(m.phi);
  j.at("theta").get_to(m.theta);
  j.at("intercept").get_to(m.intercept);
  j.at("sigma2").get_to(m.sigma2);
  m.n_obs = j.value("n_obs", std::size_t{0});
  m.residual_skewness = j.value("residual_skewness", 0.0);
  const auto hist = j.value("history", std::vector<double>{});
  const auto res = j.value("residuals", std::vector<double>{});
  m.history.assign(hist.begin(), hist.end());
  m.residuals.assign(res.begin(), res.end());
  m.last_raw = j.value("last_raw", 0.0);
}

}  // namespace gridsched
