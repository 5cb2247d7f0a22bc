#pragma once

// Calibrated adaptation diagram. Raw indicator values are mapped onto unit
// axes through per-axis affine fits against anchor regions, then each region
// becomes a point whose position decides membership in the green zone.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cityadapt/detail/csv.hpp"
#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/errors.hpp"

namespace cityadapt {

struct Anchor {
  double raw = 0.0;
  double calibrated = 0.0;  // target position on the unit axis
};

struct AxisFit {
  double scale = 1.0;
  double offset = 0.0;
  double residual = 0.0;  // RMS misfit over the anchors

  double apply(double raw) const { return scale * raw + offset; }
};

struct CalibrationMap {
  AxisFit x;  // development axis
  AxisFit y;  // green axis (applied before the 1 - g flip)
};

struct ZoneThresholds {
  double x_min = 0.8;
  double y_max = 0.2;
};

struct AdaptationPoint {
  std::string region_id;
  double x = 0.0;
  double y = 0.0;
  bool in_green_zone = false;
};

namespace detail {

inline AxisFit fit_axis(const std::vector<Anchor>& anchors) {
  require(anchors.size() >= 2, "axis calibration needs at least two anchors");
  bool distinct = false;
  for (const Anchor& a : anchors) {
    require(std::isfinite(a.raw) && std::isfinite(a.calibrated), "anchor values must be finite");
    if (a.raw != anchors.front().raw) distinct = true;
  }
  require(distinct, "axis calibration needs at least two distinct raw values");

  const auto n = static_cast<Eigen::Index>(anchors.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = anchors[static_cast<std::size_t>(i)].raw;
    design(i, 1) = 1.0;
    target(i) = anchors[static_cast<std::size_t>(i)].calibrated;
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);

  AxisFit fit;
  fit.scale = coef(0);
  fit.offset = coef(1);
  fit.residual = std::sqrt((design * coef - target).squaredNorm() / static_cast<double>(n));
  return fit;
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace detail

inline CalibrationMap fit_calibration(const std::vector<Anchor>& development_anchors,
                                      const std::vector<Anchor>& green_anchors) {
  CalibrationMap map;
  map.x = detail::fit_axis(development_anchors);
  map.y = detail::fit_axis(green_anchors);
  return map;
}

// x grows with development, y shrinks with greenness, so the desirable corner
// (developed and green) is the lower right. Zone membership is inclusive.
inline AdaptationPoint observe(const CalibrationMap& calibration, const ZoneThresholds& zone,
                               const std::string& region_id, double development_raw,
                               double green_raw) {
  require(std::isfinite(development_raw) && std::isfinite(green_raw),
          "raw indicator values must be finite");
  AdaptationPoint point;
  point.region_id = region_id;
  point.x = detail::clamp01(calibration.x.apply(development_raw));
  point.y = detail::clamp01(1.0 - calibration.y.apply(green_raw));
  point.in_green_zone = point.x >= zone.x_min && point.y <= zone.y_max;
  return point;
}

// Geometric mean of the three dimension indices.
inline double composite_hdi(double health, double education, double income) {
  for (double v : {health, education, income}) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "dimension index must lie in [0, 1]");
  }
  return std::cbrt(health * education * income);
}

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

// Writes <base>.svg and <base>.csv. The SVG is byte-deterministic for a given
// point list: fixed header, green-zone rectangle, then one circle per point in
// input order.
inline void emit_diagram(const std::vector<AdaptationPoint>& points, const ZoneThresholds& zone,
                         const std::filesystem::path& base) {
  // Plot area inside an 800x600 canvas; unit axes map to it linearly.
  const double left = 60.0, right = 780.0, top = 40.0, bottom = 560.0;
  const auto px = [&](double x) { return left + x * (right - left); };
  const auto py = [&](double y) { return bottom - y * (bottom - top); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + detail::fixed2(px(zone.x_min)) + "\" y=\"" + detail::fixed2(py(zone.y_max)) +
         "\" width=\"" + detail::fixed2(px(1.0) - px(zone.x_min)) + "\" height=\"" +
         detail::fixed2(py(0.0) - py(zone.y_max)) + "\" fill=\"#c8e6c9\"/>\n";
  svg += "<rect x=\"" + detail::fixed2(left) + "\" y=\"" + detail::fixed2(top) + "\" width=\"" +
         detail::fixed2(right - left) + "\" height=\"" + detail::fixed2(bottom - top) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"420.00\" y=\"590.00\" text-anchor=\"middle\">development index</text>\n";
  svg += "<text x=\"20.00\" y=\"300.00\" text-anchor=\"middle\" transform=\"rotate(-90 20 300)\">"
         "1 - green index</text>\n";
  for (const AdaptationPoint& p : points) {
    svg += "<circle id=\"" + p.region_id + "\" cx=\"" + detail::fixed2(px(p.x)) + "\" cy=\"" +
           detail::fixed2(py(p.y)) + "\" r=\"6.00\" fill=\"" +
           (p.in_green_zone ? std::string("#2e7d32") : std::string("#c62828")) + "\"/>\n";
    svg += "<text x=\"" + detail::fixed2(px(p.x) + 8.0) + "\" y=\"" + detail::fixed2(py(p.y) - 8.0) +
           "\">" + p.region_id + "</text>\n";
  }
  svg += "</svg>\n";

  std::string csv = "region_id,x,y,in_green_zone\n";
  for (const AdaptationPoint& p : points) {
    csv += p.region_id + "," + detail::format_double(p.x) + "," + detail::format_double(p.y) +
           "," + (p.in_green_zone ? "true" : "false") + "\n";
  }

  std::filesystem::path svg_path = base;
  svg_path += ".svg";
  std::filesystem::path csv_path = base;
  csv_path += ".csv";
  detail::write_text_file(svg_path, svg);
  detail::write_text_file(csv_path, csv);
}

inline void save_calibration(const CalibrationMap& map, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "calibration";
  doc["x"] = {{"scale", map.x.scale}, {"offset", map.x.offset}, {"residual", map.x.residual}};
  doc["y"] = {{"scale", map.y.scale}, {"offset", map.y.offset}, {"residual", map.y.residual}};
  detail::write_json_file(path, doc);
}

inline CalibrationMap load_calibration(const std::filesystem::path& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  detail::require_model_header(doc, "calibration", path.string());
  CalibrationMap map;
  map.x = {doc.at("x").at("scale").get<double>(), doc.at("x").at("offset").get<double>(),
           doc.at("x").at("residual").get<double>()};
  map.y = {doc.at("y").at("scale").get<double>(), doc.at("y").at("offset").get<double>(),
           doc.at("y").at("residual").get<double>()};
  return map;
}

}  // namespace cityadapt
