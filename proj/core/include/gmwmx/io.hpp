#ifndef GMWMX_IO_HPP
#define GMWMX_IO_HPP

#include <string>
#include <string_view>

#include "gmwmx/estimators.hpp"
#include "gmwmx/simulation.hpp"
#include "gmwmx/time_series.hpp"

namespace gmwmx {

// Hector-style mom files: `#`-prefixed headers (with `# offset <MJD>`
// collected), data rows `MJD value [error]`. Values are mm unless a
// unit_scale is supplied. Rows whose value is NaN are treated as missing
// observations and dropped.
TimeSeries parse_mom(std::string_view text, double unit_scale = 1.0);
std::string write_mom(const TimeSeries& series);

enum class PosComponent { north, east, up };
PosComponent pos_component_from_name(const std::string& name);

// Analysis-center .pos daily position products; one of N/E/U is extracted
// and converted from meters to mm.
TimeSeries parse_pos(std::string_view text, PosComponent component);

TimeSeries read_series_file(const std::string& path, const std::string& format,
                            PosComponent component, double unit_scale = 1.0);

// Noise model family shorthand: "wn", "pl", "matern", joined with '+'
// (e.g. "wn+pl").
ModelFamily family_from_string(const std::string& text);
std::string family_to_string(const ModelFamily& family);

// Run configuration (JSON).
ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& config);

// Result serialization. `resolved_config_json` is embedded verbatim as the
// reproducibility record; pass "{}" when there is nothing to echo.
std::string estimation_result_to_json(const EstimationResult& result,
                                      const std::string& method,
                                      const std::string& station_id,
                                      std::size_t n_observations,
                                      const std::string& resolved_config_json);
std::string wv_table_to_csv(const EstimationResult& result);

// Monte-Carlo artifacts. Timing lives in its own document so the summary is
// byte-identical for a given (config, seed) at any worker count.
std::string mc_summary_to_json(const McSummary& summary,
                               const std::string& scenario_json);
std::string mc_summary_to_csv(const McSummary& summary);
std::string mc_timing_to_json(const McSummary& summary);

std::string error_to_json(const std::string& code, const std::string& message);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace gmwmx

#endif
