#ifndef GMWMX_TIME_SERIES_HPP
#define GMWMX_TIME_SERIES_HPP

#include <string>
#include <utility>
#include <vector>

namespace gmwmx {

// Daily position series for one coordinate. Epochs are MJD days, strictly
// increasing on an integer-day grid (gaps allowed); values are mm.
struct TimeSeries {
  std::vector<double> epochs;
  std::vector<double> values;
  std::vector<double> sigma_hint;       // optional per-epoch formal error, mm
  std::vector<double> offsets_declared; // offset epochs from file headers
  std::string station_id;
  std::vector<std::pair<std::string, std::string>> metadata;  // opaque headers

  std::size_t size() const { return epochs.size(); }

  // Strictly increasing integer-day epochs, finite values, consistent
  // auxiliary lengths.
  void validate() const;
};

}  // namespace gmwmx

#endif
