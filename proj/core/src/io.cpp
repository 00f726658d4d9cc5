#include "gmwmx/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gmwmx/errors.hpp"

namespace gmwmx {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kResultSchema = "gmwmx-result/1";
constexpr const char* kScenarioSchema = "gmwmx-scenario/1";
constexpr const char* kSummarySchema = "gmwmx-mc-summary/1";
constexpr const char* kTimingSchema = "gmwmx-mc-timing/1";

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::istringstream stream{std::string(line)};
  std::string token;
  while (stream >> token) tokens.push_back(token);
  return tokens;
}

bool parse_double(const std::string& token, double& out) {
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size() && !token.empty();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TimeSeries::validate() const {
  if (epochs.size() != values.size()) {
    throw Error(ErrorKind::invalid_argument,
                "time series epochs/values length mismatch");
  }
  if (!sigma_hint.empty() && sigma_hint.size() != epochs.size()) {
    throw Error(ErrorKind::invalid_argument,
                "time series sigma_hint length mismatch");
  }
  if (epochs.empty()) {
    throw Error(ErrorKind::invalid_argument, "time series is empty");
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(epochs[i])) {
      throw Error(ErrorKind::invalid_argument,
                  "non-finite entry at index " + std::to_string(i));
    }
    if (i > 0) {
      if (!(epochs[i] > epochs[i - 1])) {
        throw Error(ErrorKind::invalid_argument,
                    "epochs must be strictly increasing (index " +
                        std::to_string(i) + ")");
      }
      const double gap = epochs[i] - epochs[i - 1];
      if (std::abs(gap - std::round(gap)) > 1e-6) {
        throw Error(ErrorKind::invalid_argument,
                    "epoch spacing is not an integer number of days (index " +
                        std::to_string(i) + ")");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// mom

TimeSeries parse_mom(std::string_view text, double unit_scale) {
  TimeSeries series;
  std::size_t line_number = 0;
  std::size_t start = 0;
  bool saw_sigma = false, saw_plain = false;
  double previous_epoch = -std::numeric_limits<double>::infinity();

  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    if (line.front() == '#') {
      auto tokens = tokenize(line.substr(1));
      if (tokens.empty()) continue;
      if (tokens[0] == "offset" && tokens.size() >= 2) {
        double epoch;
        if (!parse_double(tokens[1], epoch)) {
          throw Error(ErrorKind::parse, "bad offset header on line " +
                                            std::to_string(line_number));
        }
        series.offsets_declared.push_back(epoch);
      } else {
        std::string value;
        for (std::size_t i = 1; i < tokens.size(); ++i) {
          if (i > 1) value += ' ';
          value += tokens[i];
        }
        series.metadata.emplace_back(tokens[0], value);
      }
      continue;
    }

    auto tokens = tokenize(line);
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw Error(ErrorKind::parse,
                  "expected `MJD value [error]` on line " +
                      std::to_string(line_number));
    }
    double epoch, value, sigma = 0.0;
    if (!parse_double(tokens[0], epoch) || !parse_double(tokens[1], value) ||
        (tokens.size() == 3 && !parse_double(tokens[2], sigma))) {
      throw Error(ErrorKind::parse,
                  "unparsable data row on line " + std::to_string(line_number));
    }
    if (std::isnan(value)) continue;  // missing observation
    if (!(epoch > previous_epoch)) {
      throw Error(ErrorKind::parse_order,
                  "non-monotone epoch on line " + std::to_string(line_number));
    }
    previous_epoch = epoch;
    series.epochs.push_back(epoch);
    series.values.push_back(value * unit_scale);
    if (tokens.size() == 3) {
      saw_sigma = true;
      series.sigma_hint.push_back(sigma * unit_scale);
    } else {
      saw_plain = true;
    }
    if (saw_sigma && saw_plain) {
      throw Error(ErrorKind::parse,
                  "inconsistent column count at line " +
                      std::to_string(line_number));
    }
  }

  if (series.epochs.empty()) {
    throw Error(ErrorKind::parse_empty, "no data rows");
  }
  series.validate();
  return series;
}

std::string write_mom(const TimeSeries& series) {
  std::string out;
  for (const auto& [key, value] : series.metadata) {
    out += "# " + key + (value.empty() ? "" : " " + value) + "\n";
  }
  for (double offset : series.offsets_declared) {
    out += "# offset " + fmt_double(offset) + "\n";
  }
  const bool has_sigma = !series.sigma_hint.empty();
  for (std::size_t i = 0; i < series.epochs.size(); ++i) {
    out += fmt_double(series.epochs[i]) + " " + fmt_double(series.values[i]);
    if (has_sigma) out += " " + fmt_double(series.sigma_hint[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// pos

PosComponent pos_component_from_name(const std::string& name) {
  if (name == "n" || name == "north") return PosComponent::north;
  if (name == "e" || name == "east") return PosComponent::east;
  if (name == "u" || name == "up") return PosComponent::up;
  throw Error(ErrorKind::invalid_argument,
              "unknown component '" + name + "', expected n|e|u");
}

TimeSeries parse_pos(std::string_view text, PosComponent component) {
  TimeSeries series;
  std::size_t line_number = 0;
  std::size_t start = 0;
  bool in_data = false;
  double previous_epoch = -std::numeric_limits<double>::infinity();

  // Accepted subset of the analysis-center format: free header lines, one
  // column-header line starting with '*', then whitespace-delimited records
  // with MJD in field 3, dN/dE/dU in fields 16-18 and their sigmas next
  // (meters). Everything else in a record is ignored.
  const int value_index =
      component == PosComponent::north ? 15 : component == PosComponent::east ? 16 : 17;

  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    if (!in_data) {
      if (line.front() == '*') {
        in_data = true;
        continue;
      }
      const auto colon = line.find(':');
      std::string key = std::string(line.substr(0, colon == std::string_view::npos
                                                        ? line.size()
                                                        : colon));
      std::string value = colon == std::string_view::npos
                              ? ""
                              : std::string(line.substr(colon + 1));
      auto trim = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
      };
      trim(key);
      trim(value);
      if (key == "4-character ID") series.station_id = value;
      series.metadata.emplace_back(key, value);
      continue;
    }

    auto tokens = tokenize(line);
    if (tokens.size() < 21) {
      throw Error(ErrorKind::parse,
                  "pos record with fewer than 21 fields on line " +
                      std::to_string(line_number));
    }
    double epoch, value, sigma;
    if (!parse_double(tokens[2], epoch) ||
        !parse_double(tokens[static_cast<std::size_t>(value_index)], value) ||
        !parse_double(tokens[static_cast<std::size_t>(value_index) + 3], sigma)) {
      throw Error(ErrorKind::parse,
                  "unparsable pos record on line " + std::to_string(line_number));
    }
    if (std::isnan(value)) continue;
    if (!(epoch > previous_epoch)) {
      throw Error(ErrorKind::parse_order,
                  "non-monotone epoch on line " + std::to_string(line_number));
    }
    previous_epoch = epoch;
    series.epochs.push_back(epoch);
    series.values.push_back(value * 1000.0);  // meters -> mm
    series.sigma_hint.push_back(sigma * 1000.0);
  }

  if (!in_data) {
    throw Error(ErrorKind::parse, "missing '*' column-header line");
  }
  if (series.epochs.empty()) {
    throw Error(ErrorKind::parse_empty, "no data records");
  }
  series.validate();
  return series;
}

TimeSeries read_series_file(const std::string& path, const std::string& format,
                            PosComponent component, double unit_scale) {
  const std::string text = read_text_file(path);
  if (format == "mom") return parse_mom(text, unit_scale);
  if (format == "pos") return parse_pos(text, component);
  throw Error(ErrorKind::invalid_argument,
              "unknown format '" + format + "', expected mom|pos");
}

// ---------------------------------------------------------------------------
// model descriptors

ModelFamily family_from_string(const std::string& text) {
  ModelFamily family;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('+', start);
    if (end == std::string::npos) end = text.size();
    const std::string part = text.substr(start, end - start);
    start = end + 1;
    if (part == "wn" || part == "white") {
      family.push_back(NoiseType::white);
    } else if (part == "pl" || part == "powerlaw") {
      family.push_back(NoiseType::power_law);
    } else if (part == "matern") {
      family.push_back(NoiseType::matern);
    } else {
      throw Error(ErrorKind::invalid_argument,
                  "unknown noise component '" + part +
                      "' (expected wn, pl or matern joined with '+')");
    }
    if (end == text.size()) break;
  }
  if (family.empty()) {
    throw Error(ErrorKind::invalid_argument, "empty noise model");
  }
  return family;
}

std::string family_to_string(const ModelFamily& family) {
  std::string out;
  for (NoiseType t : family) {
    if (!out.empty()) out += '+';
    switch (t) {
      case NoiseType::white: out += "wn"; break;
      case NoiseType::power_law: out += "pl"; break;
      case NoiseType::matern: out += "matern"; break;
    }
  }
  return out;
}

namespace {

json noise_to_json(const StochasticModel& model) {
  json out = json::array();
  for (const auto& component : model.components()) {
    json c;
    if (const auto* w = std::get_if<WhiteNoise>(&component)) {
      c["type"] = "white";
      c["sigma2"] = w->sigma2;
    } else if (const auto* p = std::get_if<PowerLaw>(&component)) {
      c["type"] = "powerlaw";
      c["sigma2"] = p->sigma2;
      c["d"] = p->d;
    } else if (const auto* m = std::get_if<Matern>(&component)) {
      c["type"] = "matern";
      c["sigma2"] = m->sigma2;
      c["lambda"] = m->lambda;
      c["smoothness"] = m->smoothness;
    }
    out.push_back(std::move(c));
  }
  return out;
}

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::config, path + ": " + what);
}

template <typename T>
T field(const json& j, const std::string& path, const std::string& key,
        const T& fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) config_error(path + "." + key, "missing required field");
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(path + "." + key, e.what());
  }
}

StochasticModel noise_from_json(const json& array, const std::string& path) {
  if (!array.is_array() || array.empty()) {
    config_error(path, "expected a non-empty array of noise components");
  }
  std::vector<NoiseComponent> components;
  int index = 0;
  for (const auto& c : array) {
    const std::string here = path + "[" + std::to_string(index++) + "]";
    const std::string type = field<std::string>(c, here, "type", "", true);
    try {
      if (type == "white") {
        components.push_back(WhiteNoise{field<double>(c, here, "sigma2", 0, true)});
      } else if (type == "powerlaw") {
        components.push_back(PowerLaw{field<double>(c, here, "sigma2", 0, true),
                                      field<double>(c, here, "d", 0, true)});
      } else if (type == "matern") {
        components.push_back(
            Matern{field<double>(c, here, "sigma2", 0, true),
                   field<double>(c, here, "lambda", 0, true),
                   field<double>(c, here, "smoothness", 0, true)});
      } else {
        config_error(here + ".type", "unknown noise type '" + type + "'");
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      config_error(here, e.what());
    }
  }
  try {
    return StochasticModel(std::move(components));
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("invalid JSON: ") + e.what());
  }
  const std::string root = "$";
  ScenarioConfig config;
  config.name = field<std::string>(j, root, "name", config.name);
  config.years = field<double>(j, root, "years", config.years, true);

  if (j.contains("functional")) {
    const json& f = j.at("functional");
    const std::string path = root + ".functional";
    config.intercept_mm = field<double>(f, path, "intercept_mm", config.intercept_mm);
    config.trend_mm_per_year =
        field<double>(f, path, "trend_mm_per_year", config.trend_mm_per_year);
    config.seasonal_amplitude_mm = field<double>(
        f, path, "seasonal_amplitude_mm", config.seasonal_amplitude_mm);
    config.seasonal_phase_days =
        field<double>(f, path, "seasonal_phase_days", config.seasonal_phase_days);
  }
  if (j.contains("noise")) {
    config.noise_truth = noise_from_json(j.at("noise"), root + ".noise");
  }
  config.gap_fraction = field<double>(j, root, "gap_fraction", config.gap_fraction);
  if (j.contains("offsets")) {
    const json& o = j.at("offsets");
    const std::string path = root + ".offsets";
    config.offsets.enabled = field<bool>(o, path, "enabled", true);
    config.offsets.block_years =
        field<double>(o, path, "block_years", config.offsets.block_years);
    config.offsets.amplitude_sd_mm =
        field<double>(o, path, "amplitude_sd_mm", config.offsets.amplitude_sd_mm);
  }
  config.n_reps = field<int>(j, root, "n_reps", config.n_reps);
  config.seed = field<std::uint64_t>(j, root, "seed", config.seed);
  config.alpha = field<double>(j, root, "alpha", config.alpha);
  if (j.contains("methods")) {
    config.methods.clear();
    for (const auto& m : j.at("methods")) {
      try {
        config.methods.push_back(method_from_name(m.get<std::string>()));
      } catch (const std::exception& e) {
        config_error(root + ".methods", e.what());
      }
    }
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    const std::string path = root + ".fit";
    const std::string family = field<std::string>(f, path, "family", "");
    if (!family.empty()) {
      try {
        config.fit_family = family_from_string(family);
      } catch (const std::exception& e) {
        config_error(path + ".family", e.what());
      }
    }
    if (f.contains("harmonics")) {
      config.fit_harmonics = f.at("harmonics").get<std::vector<double>>();
    }
  }
  if (j.contains("mle")) {
    config.mle_options.max_n =
        field<int>(j.at("mle"), root + ".mle", "max_n", config.mle_options.max_n);
  }
  config.start_epoch_mjd =
      field<double>(j, root, "start_epoch_mjd", config.start_epoch_mjd);
  config.max_sim_n = field<int>(j, root, "max_sim_n", config.max_sim_n);
  config.workers = field<int>(j, root, "workers", config.workers);
  try {
    config.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::size_cap) throw;
    throw Error(ErrorKind::config, e.what());
  }
  return config;
}

std::string scenario_to_json(const ScenarioConfig& config) {
  json j;
  j["schema"] = kScenarioSchema;
  j["name"] = config.name;
  j["years"] = config.years;
  j["functional"] = {{"intercept_mm", config.intercept_mm},
                     {"trend_mm_per_year", config.trend_mm_per_year},
                     {"seasonal_amplitude_mm", config.seasonal_amplitude_mm},
                     {"seasonal_phase_days", config.seasonal_phase_days}};
  j["noise"] = noise_to_json(config.noise_truth);
  j["gap_fraction"] = config.gap_fraction;
  j["offsets"] = {{"enabled", config.offsets.enabled},
                  {"block_years", config.offsets.block_years},
                  {"amplitude_sd_mm", config.offsets.amplitude_sd_mm}};
  j["n_reps"] = config.n_reps;
  j["seed"] = config.seed;
  j["alpha"] = config.alpha;
  json methods = json::array();
  for (Method m : config.methods) methods.push_back(method_name(m));
  j["methods"] = std::move(methods);
  j["fit"] = {{"family", family_to_string(config.fit_family.empty()
                                              ? config.noise_truth.family()
                                              : config.fit_family)},
              {"harmonics", config.fit_harmonics}};
  j["mle"] = {{"max_n", config.mle_options.max_n}};
  j["start_epoch_mjd"] = config.start_epoch_mjd;
  j["max_sim_n"] = config.max_sim_n;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// results

std::string estimation_result_to_json(const EstimationResult& result,
                                      const std::string& method,
                                      const std::string& station_id,
                                      std::size_t n_observations,
                                      const std::string& resolved_config_json) {
  json j;
  j["schema"] = kResultSchema;
  j["method"] = method;
  j["station_id"] = station_id;
  j["n"] = n_observations;
  j["alpha"] = result.alpha;
  j["gap_fraction"] = result.gap_fraction;

  json functional = json::array();
  for (Eigen::Index i = 0; i < result.x_hat.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    functional.push_back({{"name", result.x_labels[idx]},
                          {"units", result.x_units[idx]},
                          {"estimate", result.x_hat[i]},
                          {"sigma", result.x_sigma[i]},
                          {"ci", {result.ci[idx].first, result.ci[idx].second}}});
  }
  j["functional"] = std::move(functional);

  json stochastic = json::array();
  const Eigen::VectorXd gamma = result.model_hat.parameters();
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    stochastic.push_back(
        {{"name", result.gamma_labels[static_cast<std::size_t>(i)]},
         {"estimate", gamma[i]}});
  }
  j["stochastic"] = std::move(stochastic);

  json wv = json::array();
  for (Eigen::Index s = 0; s < result.wv.nu_hat.size(); ++s) {
    json row = {{"scale", result.wv.scales[s]},
                {"nu_hat", result.wv.nu_hat[s]},
                {"count", result.wv.counts[s]}};
    if (result.wv_model.size() == result.wv.nu_hat.size()) {
      row["nu_model"] = result.wv_model[s];
    }
    if (result.wv.omega.rows() == result.wv.nu_hat.size()) {
      row["omega_diag"] = result.wv.omega(s, s);
    }
    wv.push_back(std::move(row));
  }
  j["wv"] = std::move(wv);

  j["iterations"] = result.iterations;
  j["objective_trace"] = result.objective_trace;
  j["optimizer"] = {{"converged", result.optimizer_converged},
                    {"evaluations", result.optimizer_evaluations}};
  if (result.loglik) j["loglik"] = *result.loglik;
  j["warnings"] = result.warnings;
  j["timing_seconds"] = result.timing_seconds;
  try {
    j["config"] = json::parse(resolved_config_json);
  } catch (const json::exception&) {
    j["config"] = json::object();
  }
  return j.dump(2) + "\n";
}

std::string wv_table_to_csv(const EstimationResult& result) {
  std::string out = "scale,nu_hat,nu_model,count,omega_diag\n";
  for (Eigen::Index s = 0; s < result.wv.nu_hat.size(); ++s) {
    out += fmt_double(result.wv.scales[s]) + "," +
           fmt_double(result.wv.nu_hat[s]) + "," +
           (result.wv_model.size() == result.wv.nu_hat.size()
                ? fmt_double(result.wv_model[s])
                : "") +
           "," + std::to_string(result.wv.counts[s]) + "," +
           (result.wv.omega.rows() == result.wv.nu_hat.size()
                ? fmt_double(result.wv.omega(s, s))
                : "") +
           "\n";
  }
  return out;
}

namespace {

json stats_to_json(const ParamStats& stats) {
  json j = {{"bias", stats.bias},
            {"sd", stats.sd},
            {"rmse", stats.rmse},
            {"count", stats.count}};
  if (stats.coverage) {
    j["coverage"] = *stats.coverage;
    j["coverage_se"] = *stats.coverage_se;
  }
  return j;
}

}  // namespace

std::string mc_summary_to_json(const McSummary& summary,
                               const std::string& scenario_json) {
  json j;
  j["schema"] = kSummarySchema;
  try {
    j["scenario"] = json::parse(scenario_json);
  } catch (const json::exception&) {
    j["scenario"] = json::object();
  }
  j["n_reps"] = summary.n_reps;
  j["seed"] = summary.seed;
  j["alpha"] = summary.alpha;
  json methods;
  for (const auto& [name, ms] : summary.methods) {
    json method;
    json functional, stochastic;
    for (const auto& [label, stats] : ms.functional) {
      functional[label] = stats_to_json(stats);
    }
    for (const auto& [label, stats] : ms.stochastic) {
      stochastic[label] = stats_to_json(stats);
    }
    method["functional"] = std::move(functional);
    method["stochastic"] = std::move(stochastic);
    method["reps_used"] = ms.reps_used;
    method["failures"] = ms.failures;
    if (!ms.failure_messages.empty()) {
      method["failure_messages"] = ms.failure_messages;
    }
    methods[name] = std::move(method);
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

std::string mc_summary_to_csv(const McSummary& summary) {
  std::string out = "method,group,parameter,bias,sd,rmse,coverage,coverage_se,count\n";
  for (const auto& [name, ms] : summary.methods) {
    auto emit = [&](const std::string& group, const std::string& label,
                    const ParamStats& stats) {
      out += name + "," + group + "," + label + "," + fmt_double(stats.bias) +
             "," + fmt_double(stats.sd) + "," + fmt_double(stats.rmse) + ",";
      if (stats.coverage) {
        out += fmt_double(*stats.coverage) + "," + fmt_double(*stats.coverage_se);
      } else {
        out += ",";
      }
      out += "," + std::to_string(stats.count) + "\n";
    };
    for (const auto& [label, stats] : ms.functional) emit("functional", label, stats);
    for (const auto& [label, stats] : ms.stochastic) emit("stochastic", label, stats);
  }
  return out;
}

std::string mc_timing_to_json(const McSummary& summary) {
  json j;
  j["schema"] = kTimingSchema;
  json methods;
  for (const auto& [name, ms] : summary.methods) {
    methods[name] = {{"mean_seconds", ms.mean_seconds}};
  }
  j["methods"] = std::move(methods);
  return j.dump(2) + "\n";
}

std::string error_to_json(const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  return j.dump() + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::parse, "cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::invalid_argument, "cannot write '" + path + "'");
  }
  out << content;
}

}  // namespace gmwmx
