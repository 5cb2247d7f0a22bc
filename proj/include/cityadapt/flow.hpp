#pragma once

// Synthetic urban-wake data. A uniform inflow passes a wall-mounted
// rectangular obstacle; a train of counter-rotating Gaussian vortices is
// seeded at the obstacle's lee edge, advects downstream, and decays with age.
// Wall and obstacle-face pressure sensors sample the same field. The layout
// is two-dimensional; every consumer treats the field as an abstract vector,
// so nothing downstream depends on the dimensionality.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/raster.hpp"
#include "cityadapt/rng.hpp"

namespace cityadapt {

struct ObstacleRect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  bool contains(int x, int y) const {
    return x >= x0 && x < x0 + width && y >= y0 && y < y0 + height;
  }
};

struct FlowSnapshot {
  Grid u, v, p;
};

struct SnapshotMatrix {
  int nx = 0;
  int ny = 0;
  double dt = 1.0;  // seconds between snapshots
  ObstacleRect obstacle;
  std::vector<FlowSnapshot> snapshots;

  bool is_obstacle(int x, int y) const { return obstacle.contains(x, y); }
  std::size_t count() const { return snapshots.size(); }
};

inline void validate_snapshot_matrix(const SnapshotMatrix& sm) {
  require(sm.nx >= 1 && sm.ny >= 1, "grid dimensions must be positive");
  require(sm.dt > 0.0 && std::isfinite(sm.dt), "dt must be positive");
  require(sm.snapshots.size() >= 2, "need at least two snapshots");
  require(sm.obstacle.x0 >= 0 && sm.obstacle.y0 >= 0 && sm.obstacle.width >= 0 &&
              sm.obstacle.height >= 0 && sm.obstacle.x0 + sm.obstacle.width <= sm.nx &&
              sm.obstacle.y0 + sm.obstacle.height <= sm.ny,
          "obstacle exceeds grid");
  for (const FlowSnapshot& s : sm.snapshots) {
    for (const Grid* g : {&s.u, &s.v, &s.p}) {
      require(g->width == sm.nx && g->height == sm.ny, "snapshot grid dims mismatch");
      for (double v : g->values) require(std::isfinite(v), "snapshot values must be finite");
    }
  }
}

struct SensorTrace {
  std::vector<std::pair<int, int>> locations;  // grid coordinates (x, y)
  Eigen::MatrixXd pressure;                    // sensor count x snapshot count

  int sensor_count() const { return static_cast<int>(locations.size()); }
  int snapshot_count() const { return static_cast<int>(pressure.cols()); }
};

struct WakeConfig {
  int nx = 64;
  int ny = 32;
  int snapshots = 64;
  int vortex_count = 6;
  double advection_speed = 1.0;  // cells per time unit
  std::uint64_t seed = 1;

  double dt = 0.5;
  double u_inf = 1.0;
  ObstacleRect obstacle{10, 0, 6, 10};  // bottom-mounted
  double sigma = 3.0;        // vortex core width in cells
  double amplitude = 0.6;    // base vortex strength
  double decay_rate = 0.02;  // amplitude decay per unit age
  double stagger = 4.0;      // age offset between consecutive vortices
  int wall_sensor_count = 12;
};

inline void validate_wake_config(const WakeConfig& c) {
  require(c.nx >= 16 && c.ny >= 16, "grid must be at least 16x16");
  require(c.snapshots >= 8, "need at least 8 snapshots");
  require(c.vortex_count >= 0, "vortex count must be nonnegative");
  require(std::isfinite(c.advection_speed), "advection speed must be finite");
  require(c.dt > 0.0 && std::isfinite(c.dt), "dt must be positive");
  require(std::isfinite(c.u_inf), "inflow speed must be finite");
  require(c.obstacle.width >= 1 && c.obstacle.height >= 1 && c.obstacle.x0 >= 0 &&
              c.obstacle.y0 >= 0 && c.obstacle.x0 + c.obstacle.width <= c.nx &&
              c.obstacle.y0 + c.obstacle.height <= c.ny,
          "obstacle exceeds grid");
  require(c.sigma > 0.0 && std::isfinite(c.sigma), "sigma must be positive");
  require(std::isfinite(c.amplitude), "amplitude must be finite");
  require(c.decay_rate >= 0.0 && std::isfinite(c.decay_rate), "decay rate must be nonnegative");
  require(c.stagger >= 0.0 && std::isfinite(c.stagger), "stagger must be nonnegative");
  require(c.wall_sensor_count >= 1, "need at least one wall sensor");
}

struct WakeData {
  SnapshotMatrix snapshots;
  SensorTrace sensors;
};

namespace detail {

struct Vortex {
  double y = 0.0;         // fixed lateral position
  double strength = 0.0;  // signed rotation strength before decay
  double age_offset = 0.0;
};

// Sensors: evenly spaced non-obstacle cells along the bottom wall, ordered by
// x, then the obstacle's downstream-face cells ordered by y.
inline std::vector<std::pair<int, int>> wake_sensor_cells(const WakeConfig& c) {
  std::vector<int> wall_x;
  for (int x = 0; x < c.nx; ++x) {
    if (!c.obstacle.contains(x, 0)) wall_x.push_back(x);
  }
  require(!wall_x.empty(), "no wall cells available for sensors");
  std::vector<std::pair<int, int>> cells;
  const int n = std::min<int>(c.wall_sensor_count, static_cast<int>(wall_x.size()));
  for (int j = 0; j < n; ++j) {
    const std::size_t idx =
        n == 1 ? 0
               : static_cast<std::size_t>(
                     std::llround(static_cast<double>(j) *
                                  static_cast<double>(wall_x.size() - 1) /
                                  static_cast<double>(n - 1)));
    cells.emplace_back(wall_x[idx], 0);
  }
  const int face_x = c.obstacle.x0 + c.obstacle.width;
  if (face_x < c.nx) {
    for (int y = c.obstacle.y0; y < c.obstacle.y0 + c.obstacle.height; ++y) {
      cells.emplace_back(face_x, y);
    }
  }
  return cells;
}

}  // namespace detail

inline WakeData generate_synthetic_wake(const WakeConfig& config) {
  validate_wake_config(config);

  // Per-vortex jitter in lateral position and strength; sign alternates so
  // consecutive vortices counter-rotate. Draw order is fixed for determinism.
  SeededRng rng(config.seed);
  std::vector<detail::Vortex> vortices;
  const double y_base = config.obstacle.y0 + config.obstacle.height * 0.75;
  for (int i = 0; i < config.vortex_count; ++i) {
    detail::Vortex vx;
    vx.y = y_base + rng.uniform(-1.0, 1.0) * 0.1 * config.obstacle.height;
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    vx.strength = sign * config.amplitude * (1.0 + 0.2 * rng.uniform(-1.0, 1.0));
    vx.age_offset = static_cast<double>(i) * config.stagger;
    vortices.push_back(vx);
  }
  const double lee_x = config.obstacle.x0 + config.obstacle.width;

  WakeData data;
  data.snapshots.nx = config.nx;
  data.snapshots.ny = config.ny;
  data.snapshots.dt = config.dt;
  data.snapshots.obstacle = config.obstacle;

  const auto sensor_cells = detail::wake_sensor_cells(config);
  data.sensors.locations = sensor_cells;
  data.sensors.pressure.resize(static_cast<Eigen::Index>(sensor_cells.size()),
                               config.snapshots);

  for (int k = 0; k < config.snapshots; ++k) {
    const double t = k * config.dt;
    FlowSnapshot snap{Grid(config.nx, config.ny, 0.0), Grid(config.nx, config.ny, 0.0),
                      Grid(config.nx, config.ny, 0.0)};
    for (int y = 0; y < config.ny; ++y) {
      for (int x = 0; x < config.nx; ++x) {
        if (config.obstacle.contains(x, y)) continue;  // blocked cells stay 0
        double u = config.u_inf;
        double v = 0.0;
        double p = 0.0;
        for (const detail::Vortex& vx : vortices) {
          const double age = t + vx.age_offset;
          const double cx = lee_x + config.advection_speed * age;
          const double a = vx.strength * std::exp(-config.decay_rate * age);
          const double dx = x - cx;
          const double dy = y - vx.y;
          const double gauss = std::exp(-(dx * dx + dy * dy) / (2.0 * config.sigma * config.sigma));
          u += a * gauss * (-dy) / config.sigma;
          v += a * gauss * dx / config.sigma;
          p -= a * gauss;  // signed core imprint, so sensors see the street's phase
        }
        snap.u.at(x, y) = u;
        snap.v.at(x, y) = v;
        snap.p.at(x, y) = p;
      }
    }
    for (std::size_t s = 0; s < sensor_cells.size(); ++s) {
      data.sensors.pressure(static_cast<Eigen::Index>(s), k) =
          snap.p.at(sensor_cells[s].first, sensor_cells[s].second);
    }
    data.snapshots.snapshots.push_back(std::move(snap));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Persistence: a directory of CARB1 rasters (bands u, v, p) plus a JSON
// manifest carrying dt, the obstacle rectangle, and the snapshot order.

inline void save_snapshot_matrix(const SnapshotMatrix& sm, const std::filesystem::path& dir) {
  validate_snapshot_matrix(sm);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["dt"] = sm.dt;
  manifest["nx"] = sm.nx;
  manifest["ny"] = sm.ny;
  manifest["obstacle"] = {{"x0", sm.obstacle.x0},
                          {"y0", sm.obstacle.y0},
                          {"width", sm.obstacle.width},
                          {"height", sm.obstacle.height}};
  manifest["fields"] = {"u", "v", "p"};
  nlohmann::json order = nlohmann::json::array();
  for (std::size_t k = 0; k < sm.snapshots.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%04zu.carb", k);
    order.push_back(name);
    Raster raster;
    raster.width = sm.nx;
    raster.height = sm.ny;
    raster.bands = {{"u", sm.snapshots[k].u}, {"v", sm.snapshots[k].v}, {"p", sm.snapshots[k].p}};
    save_raster(raster, dir / name);
  }
  manifest["snapshots"] = order;
  detail::write_json_file(dir / "flow.json", manifest);
}

inline SnapshotMatrix load_snapshot_matrix(const std::filesystem::path& dir) {
  const nlohmann::json manifest = detail::read_json_file(dir / "flow.json");
  if (!manifest.contains("format_version") || manifest["format_version"] != 1) {
    throw format_error(dir.string() + ": unsupported flow manifest version");
  }
  SnapshotMatrix sm;
  sm.dt = manifest.at("dt").get<double>();
  sm.nx = manifest.at("nx").get<int>();
  sm.ny = manifest.at("ny").get<int>();
  const auto& ob = manifest.at("obstacle");
  sm.obstacle = {ob.at("x0").get<int>(), ob.at("y0").get<int>(), ob.at("width").get<int>(),
                 ob.at("height").get<int>()};
  for (const auto& name : manifest.at("snapshots")) {
    const Raster raster = load_raster(dir / name.get<std::string>());
    require(raster.width == sm.nx && raster.height == sm.ny,
            dir.string() + ": snapshot dims disagree with manifest");
    FlowSnapshot snap{raster.band("u"), raster.band("v"), raster.band("p")};
    sm.snapshots.push_back(std::move(snap));
  }
  validate_snapshot_matrix(sm);
  return sm;
}

// CSV layout: snapshot,sensor_id,x,y,p with snapshots outermost.
inline void save_sensor_trace(const SensorTrace& trace, const std::filesystem::path& path) {
  std::string out = "snapshot,sensor_id,x,y,p\n";
  for (int k = 0; k < trace.snapshot_count(); ++k) {
    for (int s = 0; s < trace.sensor_count(); ++s) {
      out += std::to_string(k) + "," + std::to_string(s) + "," +
             std::to_string(trace.locations[static_cast<std::size_t>(s)].first) + "," +
             std::to_string(trace.locations[static_cast<std::size_t>(s)].second) + "," +
             detail::format_double(trace.pressure(s, k)) + "\n";
    }
  }
  detail::write_text_file(path, out);
}

inline SensorTrace load_sensor_trace(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  require(!lines.empty() && lines[0] == "snapshot,sensor_id,x,y,p",
          path.string() + ": bad sensor trace header");

  struct Row {
    int snapshot, sensor, x, y;
    double p;
  };
  std::vector<Row> rows;
  int max_snapshot = -1;
  int max_sensor = -1;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = detail::split_csv_line(lines[li]);
    require(fields.size() == 5, path.string() + ": row " + std::to_string(li) + " malformed");
    const std::string ctx = path.string() + " row " + std::to_string(li);
    Row row{static_cast<int>(detail::parse_i64(fields[0], ctx)),
            static_cast<int>(detail::parse_i64(fields[1], ctx)),
            static_cast<int>(detail::parse_i64(fields[2], ctx)),
            static_cast<int>(detail::parse_i64(fields[3], ctx)),
            detail::parse_double(fields[4], ctx)};
    max_snapshot = std::max(max_snapshot, row.snapshot);
    max_sensor = std::max(max_sensor, row.sensor);
    rows.push_back(row);
  }
  require(max_snapshot >= 0 && max_sensor >= 0, path.string() + ": no sensor rows");

  SensorTrace trace;
  trace.locations.assign(static_cast<std::size_t>(max_sensor) + 1, {-1, -1});
  trace.pressure = Eigen::MatrixXd::Zero(max_sensor + 1, max_snapshot + 1);
  for (const Row& row : rows) {
    require(row.snapshot >= 0 && row.sensor >= 0, path.string() + ": negative index");
    trace.locations[static_cast<std::size_t>(row.sensor)] = {row.x, row.y};
    trace.pressure(row.sensor, row.snapshot) = row.p;
  }
  for (const auto& [x, y] : trace.locations) {
    require(x >= 0 && y >= 0, path.string() + ": sensor ids not contiguous");
  }
  return trace;
}

}  // namespace cityadapt
