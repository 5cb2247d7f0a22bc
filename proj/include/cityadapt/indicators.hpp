#pragma once

// Thresholded normalized-difference indicators and their time series.
// The urban green index is the fraction of valid pixels whose NDVI exceeds a
// threshold; the land-development index does the same with NDBI. Both are
// deliberately simple stand-ins for richer agency indices.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cityadapt/detail/csv.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/raster.hpp"

namespace cityadapt {

struct IndexConfig {
  std::pair<std::string, std::string> green_band_pair{"NIR", "RED"};    // NDVI = nd(NIR, RED)
  std::pair<std::string, std::string> builtup_band_pair{"SWIR", "NIR"}; // NDBI = nd(SWIR, NIR)
  double ndvi_threshold = 0.3;
  double ndbi_threshold = 0.0;
};

inline void validate_index_config(const IndexConfig& config) {
  for (double t : {config.ndvi_threshold, config.ndbi_threshold}) {
    require(std::isfinite(t) && t > -1.0 && t < 1.0, "index threshold must be finite in (-1, 1)");
  }
}

namespace detail {

// Fraction of valid pixels of nd(first, second) strictly above the threshold.
// NaN pixels drop out of both numerator and denominator.
inline double thresholded_fraction(const Raster& raster,
                                   const std::pair<std::string, std::string>& pair,
                                   double threshold) {
  const Grid nd = normalized_difference(raster, pair.first, pair.second);
  std::int64_t valid = 0;
  std::int64_t above = 0;
  for (double v : nd.values) {
    if (std::isnan(v)) continue;
    ++valid;
    if (v > threshold) ++above;
  }
  if (valid == 0) {
    throw validation_error("empty domain: every pixel is nodata");
  }
  return static_cast<double>(above) / static_cast<double>(valid);
}

}  // namespace detail

inline double urban_green_index(const Raster& raster, const IndexConfig& config) {
  validate_index_config(config);
  return detail::thresholded_fraction(raster, config.green_band_pair, config.ndvi_threshold);
}

inline double land_development_index(const Raster& raster, const IndexConfig& config) {
  validate_index_config(config);
  return detail::thresholded_fraction(raster, config.builtup_band_pair, config.ndbi_threshold);
}

struct SeriesEntry {
  std::int64_t timestamp = 0;  // days since epoch
  std::vector<double> values;  // aligned with IndicatorSeries::names
};

struct IndicatorSeries {
  std::string region_id;
  std::vector<std::string> names;   // indicator schema, fixed by the first append
  std::vector<SeriesEntry> entries; // timestamps strictly increasing

  double value(std::size_t entry, const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return entries[entry].values[i];
    }
    throw validation_error("unknown indicator name: " + name);
  }
};

// Value semantics: the input series is left untouched.
inline IndicatorSeries append_observation(
    const IndicatorSeries& series, std::int64_t timestamp,
    const std::vector<std::pair<std::string, double>>& values) {
  require(!values.empty(), "observation must carry at least one indicator");
  IndicatorSeries out = series;
  if (!out.entries.empty() && timestamp <= out.entries.back().timestamp) {
    throw validation_error("timestamp " + std::to_string(timestamp) +
                           " is not greater than last entry " +
                           std::to_string(out.entries.back().timestamp));
  }
  if (out.names.empty() && out.entries.empty()) {
    for (const auto& [name, value] : values) out.names.push_back(name);
    for (std::size_t i = 0; i < out.names.size(); ++i) {
      for (std::size_t j = i + 1; j < out.names.size(); ++j) {
        require(out.names[i] != out.names[j], "duplicate indicator name: " + out.names[i]);
      }
    }
  }

  SeriesEntry entry;
  entry.timestamp = timestamp;
  entry.values.resize(out.names.size());
  std::vector<bool> seen(out.names.size(), false);
  for (const auto& [name, value] : values) {
    require(std::isfinite(value), "indicator '" + name + "' must be finite");
    bool found = false;
    for (std::size_t i = 0; i < out.names.size(); ++i) {
      if (out.names[i] == name) {
        require(!seen[i], "indicator '" + name + "' given twice");
        entry.values[i] = value;
        seen[i] = true;
        found = true;
        break;
      }
    }
    if (!found) {
      throw validation_error("indicator '" + name + "' is not in the series schema");
    }
  }
  for (std::size_t i = 0; i < out.names.size(); ++i) {
    if (!seen[i]) {
      throw validation_error("observation is missing indicator '" + out.names[i] + "'");
    }
  }
  out.entries.push_back(std::move(entry));
  return out;
}

// CSV: header `timestamp,<name1>,<name2>,...`, one row per entry, LF endings.
inline void save_series(const IndicatorSeries& series, const std::filesystem::path& path) {
  std::string out = "timestamp";
  for (const std::string& name : series.names) out += "," + name;
  out += "\n";
  for (const SeriesEntry& e : series.entries) {
    out += std::to_string(e.timestamp);
    for (double v : e.values) out += "," + detail::format_double(v);
    out += "\n";
  }
  detail::write_text_file(path, out);
}

inline IndicatorSeries load_series(const std::filesystem::path& path,
                                   const std::string& region_id = "") {
  const auto lines = detail::read_lines(path);
  require(!lines.empty(), path.string() + ": empty series file");
  const auto header = detail::split_csv_line(lines[0]);
  require(header.size() >= 2 && header[0] == "timestamp",
          path.string() + ": header must start with 'timestamp'");

  IndicatorSeries series;
  series.region_id = region_id;
  series.names.assign(header.begin() + 1, header.end());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = detail::split_csv_line(lines[li]);
    require(fields.size() == header.size(),
            path.string() + ": row " + std::to_string(li) + " has wrong column count");
    SeriesEntry entry;
    entry.timestamp = detail::parse_i64(fields[0], path.string() + " row " + std::to_string(li));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      entry.values.push_back(
          detail::parse_double(fields[i], path.string() + " row " + std::to_string(li)));
    }
    if (!series.entries.empty() && entry.timestamp <= series.entries.back().timestamp) {
      throw validation_error(path.string() + ": timestamps not strictly increasing at row " +
                             std::to_string(li));
    }
    series.entries.push_back(std::move(entry));
  }
  return series;
}

}  // namespace cityadapt
