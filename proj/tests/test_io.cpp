#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "gmwmx/errors.hpp"
#include "gmwmx/io.hpp"
#include "gmwmx/simulation.hpp"
#include "test_helpers.hpp"

using namespace gmwmx;

namespace {

std::string fixture(const std::string& name) {
  return read_text_file(std::string(GMWMX_FIXTURE_DIR) + "/" + name);
}

bool same_series(const TimeSeries& a, const TimeSeries& b) {
  return a.epochs == b.epochs && a.values == b.values &&
         a.sigma_hint == b.sigma_hint &&
         a.offsets_declared == b.offsets_declared;
}

}  // namespace

TEST_CASE("mom two-row body parses to epochs and values") {
  const TimeSeries ts = parse_mom(fixture("v01_basic.mom"));
  REQUIRE(ts.size() == 2);
  CHECK(ts.epochs[0] == 50000.0);
  CHECK(ts.epochs[1] == 50001.0);
  CHECK(ts.values[0] == 1.5);
  CHECK(ts.values[1] == 2.5);
  CHECK(ts.sigma_hint.empty());
}

TEST_CASE("mom offset headers are collected") {
  const TimeSeries ts = parse_mom(fixture("v03_offset_header.mom"));
  REQUIRE(ts.offsets_declared.size() == 1);
  CHECK(ts.offsets_declared[0] == 50449.0);
}

TEST_CASE("mom NaN rows become missing observations") {
  const TimeSeries ts = parse_mom(fixture("v05_nan_rows.mom"));
  CHECK(ts.size() == 3);
  CHECK(ts.epochs == std::vector<double>{50000.0, 50002.0, 50003.0});
}

TEST_CASE("mom unknown headers are preserved as metadata") {
  const TimeSeries ts = parse_mom(fixture("v06_metadata.mom"));
  REQUIRE(ts.metadata.size() == 3);
  CHECK(ts.metadata[0].first == "station");
  CHECK(ts.metadata[0].second == "ALBH");
  CHECK(ts.metadata[2].second == "cwu demo");
}

TEST_CASE("mom unit scale applies to values and sigmas") {
  const TimeSeries ts = parse_mom(fixture("v02_sigma.mom"), 1000.0);
  CHECK(ts.values[0] == doctest::Approx(1500.0));
  CHECK(ts.sigma_hint[0] == doctest::Approx(800.0));
}

TEST_CASE("roundtrip identity across the fixture corpus") {
  const std::vector<std::string> mom_fixtures = {
      "v01_basic.mom", "v02_sigma.mom", "v03_offset_header.mom",
      "v04_gaps.mom",  "v05_nan_rows.mom", "v06_metadata.mom",
      "v07_two_offsets.mom", "v08_crlf.mom", "v09_halfday.mom",
      "v12_long.mom"};
  for (const auto& name : mom_fixtures) {
    CAPTURE(name);
    const TimeSeries first = parse_mom(fixture(name));
    const TimeSeries second = parse_mom(write_mom(first));
    CHECK(same_series(first, second));
  }
  for (const auto& name : {"v10_station.pos", "v11_station2.pos"}) {
    CAPTURE(name);
    for (auto component :
         {PosComponent::north, PosComponent::east, PosComponent::up}) {
      const TimeSeries first = parse_pos(fixture(name), component);
      const TimeSeries second = parse_mom(write_mom(first));
      CHECK(same_series(first, second));
    }
  }
}

TEST_CASE("malformed fixtures raise their designated error kinds") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::harness;  // sentinel: nothing thrown
  };
  CHECK(kind_of([&] { parse_mom(fixture("e01_badrow.mom")); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_mom(fixture("e02_nonmonotone.mom")); }) ==
        ErrorKind::parse_order);
  CHECK(kind_of([&] { parse_mom(fixture("e03_empty.mom")); }) ==
        ErrorKind::parse_empty);
  CHECK(kind_of([&] { parse_mom(fixture("e04_inconsistent.mom")); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_mom(fixture("e05_toomany.mom")); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_pos(fixture("e06_short.pos"), PosComponent::up); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_pos(fixture("e07_noheader.pos"), PosComponent::up); }) ==
        ErrorKind::parse);
  CHECK(kind_of([&] { parse_mom(fixture("e08_badspacing.mom")); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_mom(fixture("e01_badrow.mom"));
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("pos parsing extracts the requested component in mm") {
  const TimeSeries north = parse_pos(fixture("v10_station.pos"), PosComponent::north);
  const TimeSeries up = parse_pos(fixture("v10_station.pos"), PosComponent::up);
  REQUIRE(north.size() == 3);
  CHECK(north.station_id == "YORK");
  CHECK(north.values[0] == doctest::Approx(1.25));   // 0.00125 m
  CHECK(north.sigma_hint[0] == doctest::Approx(0.7));
  CHECK(up.values[0] == doctest::Approx(-3.10));
  CHECK(north.epochs[0] == doctest::Approx(51544.5));
}

TEST_CASE("family shorthand round trips") {
  CHECK(family_to_string(family_from_string("wn+pl")) == "wn+pl");
  CHECK(family_to_string(family_from_string("white+powerlaw")) == "wn+pl");
  CHECK(family_to_string(family_from_string("matern")) == "matern");
  CHECK_THROWS_AS(family_from_string("wn+banana"), Error);
  CHECK_THROWS_AS(family_from_string(""), Error);
}

TEST_CASE("scenario json round trips") {
  ScenarioConfig config;
  config.name = "nominal";
  config.years = 4.0;
  config.n_reps = 7;
  config.seed = 99;
  config.gap_fraction = 0.05;
  config.offsets.enabled = true;
  config.methods = {Method::gmwmx1, Method::gmwmx2};
  const std::string text = scenario_to_json(config);
  const ScenarioConfig back = scenario_from_json(text);
  CHECK(back.name == config.name);
  CHECK(back.years == config.years);
  CHECK(back.n_reps == config.n_reps);
  CHECK(back.seed == config.seed);
  CHECK(back.gap_fraction == config.gap_fraction);
  CHECK(back.offsets.enabled);
  CHECK(back.methods == config.methods);
  CHECK(back.noise_truth.parameters() == config.noise_truth.parameters());
}

TEST_CASE("config errors carry field paths") {
  try {
    scenario_from_json(R"({"years": 2.0, "noise": [{"type": "powerlaw"}]})");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find("$.noise[0].sigma2") != std::string::npos);
  }
  try {
    scenario_from_json(R"({"name": "x"})");
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("$.years") != std::string::npos);
  }
  CHECK_THROWS_AS(scenario_from_json("{nope"), Error);
}

TEST_CASE("estimation result json validates against the shipped schema") {
  ScenarioConfig config;
  config.years = 300 / kDaysPerYear;
  config.seed = 12;
  auto [series, truth] = simulate_series(config, 0);
  FunctionalSpec spec;
  spec.reference_epoch = config.start_epoch_mjd;
  spec.harmonic_frequencies = {1.0};
  const EstimationResult result =
      gmwmx_estimate(series, spec, {NoiseType::power_law, NoiseType::white});
  const std::string text = estimation_result_to_json(
      result, "gmwmx1", series.station_id, series.size(), R"({"method":"gmwmx1"})");

  const auto parsed = nlohmann::json::parse(text);
  const auto schema = nlohmann::json::parse(
      read_text_file(std::string(GMWMX_SCHEMA_DIR) + "/result.schema.json"));
  CHECK(test::schema_check(schema, parsed) == "");
  CHECK(parsed["schema"] == "gmwmx-result/1");

  // trend is reported in mm/yr
  bool found_trend = false;
  for (const auto& row : parsed["functional"]) {
    if (row["name"] == "trend") {
      found_trend = true;
      CHECK(row["units"] == "mm/yr");
    }
  }
  CHECK(found_trend);
}

TEST_CASE("mc summary json validates and keeps timing in the sidecar") {
  ScenarioConfig config;
  config.name = "io-check";
  config.years = 256 / kDaysPerYear;
  config.n_reps = 4;
  config.methods = {Method::gmwmx1};
  const McSummary summary = run_monte_carlo(config);
  const std::string summary_text =
      mc_summary_to_json(summary, scenario_to_json(config));
  const auto parsed = nlohmann::json::parse(summary_text);
  const auto schema = nlohmann::json::parse(read_text_file(
      std::string(GMWMX_SCHEMA_DIR) + "/mc_summary.schema.json"));
  CHECK(test::schema_check(schema, parsed) == "");
  CHECK(summary_text.find("seconds") == std::string::npos);

  const auto timing = nlohmann::json::parse(mc_timing_to_json(summary));
  CHECK(timing["methods"]["gmwmx1"].contains("mean_seconds"));

  const std::string csv = mc_summary_to_csv(summary);
  CHECK(csv.find("gmwmx1,functional,trend,") != std::string::npos);
}

TEST_CASE("wv table csv has the documented columns") {
  ScenarioConfig config;
  config.years = 256 / kDaysPerYear;
  auto [series, truth] = simulate_series(config, 0);
  FunctionalSpec spec;
  spec.reference_epoch = config.start_epoch_mjd;
  spec.harmonic_frequencies = {1.0};
  const EstimationResult result =
      gmwmx_estimate(series, spec, {NoiseType::power_law, NoiseType::white});
  const std::string csv = wv_table_to_csv(result);
  CHECK(csv.rfind("scale,nu_hat,nu_model,count,omega_diag\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        1 + result.wv.nu_hat.size());
}
