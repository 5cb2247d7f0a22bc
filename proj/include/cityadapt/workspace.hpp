#pragma once

// Persistent workspace behind the CLI. Artifacts are content-addressed
// (FNV-1a of the bytes), registered in a JSON manifest, and never mutated in
// place; re-storing identical content is a no-op with the same id. A lock
// file serializes mutating commands. Timestamps live only in the manifest so
// artifact bytes stay reproducible.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include "cityadapt/adaptation.hpp"
#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/flow.hpp"
#include "cityadapt/forecast.hpp"
#include "cityadapt/indicators.hpp"

namespace cityadapt {

namespace detail {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Directory hash: FNV over sorted relative paths and file contents, so the
// id is independent of traversal order.
inline std::uint64_t hash_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(std::filesystem::relative(entry.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& rel : files) {
    h = fnv1a(rel.generic_string() + '\0', h);
    h = fnv1a(read_text_file(dir / rel), h);
    h = fnv1a(std::string(1, '\0'), h);
  }
  return h;
}

}  // namespace detail

class Workspace {
 public:
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  Workspace(Workspace&& other) noexcept
      : root_(std::move(other.root_)), manifest_(std::move(other.manifest_)),
        locked_(other.locked_) {
    other.locked_ = false;
  }
  Workspace& operator=(Workspace&&) = delete;

  ~Workspace() {
    if (locked_) {
      std::error_code ec;
      std::filesystem::remove(root_ / "workspace.lock", ec);
    }
  }

  // Creates the directory layout on first use. `lock` serializes mutating
  // commands; read-only callers may pass false.
  static Workspace open(const std::filesystem::path& root, bool lock = true) {
    std::error_code ec;
    std::filesystem::create_directories(root / "artifacts", ec);
    if (ec) throw io_error("cannot create workspace at " + root.string() + ": " + ec.message());

    Workspace ws(root);
    if (lock) {
      const std::filesystem::path lock_path = root / "workspace.lock";
      std::FILE* f = std::fopen(lock_path.string().c_str(), "wx");
      if (!f) {
        throw io_error("workspace is locked (remove " + lock_path.string() +
                       " if no other command is running)");
      }
      std::fclose(f);
      ws.locked_ = true;
    }
    const std::filesystem::path manifest_path = root / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
      ws.manifest_ = detail::read_json_file(manifest_path);
      if (!ws.manifest_.contains("format_version") || ws.manifest_["format_version"] != 1) {
        throw format_error(manifest_path.string() + ": unsupported manifest version");
      }
    } else {
      ws.manifest_ = {{"format_version", 1},
                      {"artifacts", nlohmann::json::array()},
                      {"names", nlohmann::json::object()}};
      ws.save();
    }
    return ws;
  }

  const std::filesystem::path& root() const { return root_; }
  const nlohmann::json& manifest() const { return manifest_; }

  bool has(const std::string& id) const { return find(id) != nullptr; }

  // Content-addressed store; identical bytes yield the identical id and leave
  // the workspace untouched.
  std::string store_bytes(const std::string& kind, const std::string& bytes,
                          const std::string& extension, const std::string& name = "") {
    const std::string id = kind + "-" + detail::hash_hex(detail::fnv1a(bytes));
    const std::string rel = "artifacts/" + id + extension;
    if (!has(id)) {
      detail::write_text_file(root_ / rel, bytes);
      add_entry(id, kind, rel);
    }
    if (!name.empty()) set_name(name, id);
    save();
    return id;
  }

  std::string store_file(const std::string& kind, const std::filesystem::path& src,
                         const std::string& name = "") {
    return store_bytes(kind, detail::read_text_file(src), src.extension().string(), name);
  }

  std::string store_directory(const std::string& kind, const std::filesystem::path& src,
                              const std::string& name = "") {
    const std::string id = kind + "-" + detail::hash_hex(detail::hash_directory(src));
    const std::string rel = "artifacts/" + id;
    if (!has(id)) {
      std::error_code ec;
      std::filesystem::copy(src, root_ / rel,
                            std::filesystem::copy_options::recursive |
                                std::filesystem::copy_options::overwrite_existing,
                            ec);
      if (ec) throw io_error("cannot copy into workspace: " + ec.message());
      add_entry(id, kind, rel);
    }
    if (!name.empty()) set_name(name, id);
    save();
    return id;
  }

  // Accepts an artifact id or a registered name.
  std::string resolve(const std::string& id_or_name) const {
    if (manifest_["names"].contains(id_or_name)) {
      return manifest_["names"][id_or_name].get<std::string>();
    }
    if (has(id_or_name)) return id_or_name;
    throw validation_error("unknown artifact or name: " + id_or_name);
  }

  std::filesystem::path artifact_path(const std::string& id) const {
    const nlohmann::json* entry = find(id);
    if (!entry) throw validation_error("unknown artifact id: " + id);
    return root_ / (*entry)["path"].get<std::string>();
  }

  std::string artifact_kind(const std::string& id) const {
    const nlohmann::json* entry = find(id);
    if (!entry) throw validation_error("unknown artifact id: " + id);
    return (*entry)["kind"].get<std::string>();
  }

  void set_name(const std::string& name, const std::string& id) {
    require(has(id), "cannot name unknown artifact " + id);
    manifest_["names"][name] = id;
  }

  // Invariant check: every entry's file exists and still hashes to its id.
  void verify() const {
    for (const auto& entry : manifest_["artifacts"]) {
      const std::filesystem::path path = root_ / entry["path"].get<std::string>();
      if (!std::filesystem::exists(path)) {
        throw io_error("manifest references missing file " + path.string());
      }
      const std::string hash = entry["hash"].get<std::string>();
      const std::string actual =
          std::filesystem::is_directory(path)
              ? detail::hash_hex(detail::hash_directory(path))
              : detail::hash_hex(detail::fnv1a(detail::read_text_file(path)));
      if (hash != actual) {
        throw io_error("artifact " + entry["id"].get<std::string>() +
                       " does not match its recorded hash");
      }
    }
  }

  void save() {
    detail::write_json_file(root_ / "manifest.json", manifest_);
  }

 private:
  explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

  const nlohmann::json* find(const std::string& id) const {
    for (const auto& entry : manifest_["artifacts"]) {
      if (entry["id"] == id) return &entry;
    }
    return nullptr;
  }

  void add_entry(const std::string& id, const std::string& kind, const std::string& rel) {
    manifest_["artifacts"].push_back({{"id", id},
                                      {"kind", kind},
                                      {"path", rel},
                                      {"hash", id.substr(id.rfind('-') + 1)},
                                      {"created_at", detail::utc_timestamp()}});
  }

  std::filesystem::path root_;
  nlohmann::json manifest_;
  bool locked_ = false;
};

// ---------------------------------------------------------------------------
// Pipeline configuration: one JSON document with per-module sections. Unknown
// sections or keys are rejected by name so typos cannot silently fall back to
// defaults.

struct PipelineConfig {
  IndexConfig index;
  ZoneThresholds calibration;
  int forecast_degree = 2;
  int forecast_horizon = 4;
  TrainConfig forecast;
  WakeConfig flow;
  std::vector<int> fusion_layers{8, 4};
  int fusion_epochs = 500;
  double fusion_learning_rate = 0.05;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& section, const std::string& section_name,
                                const std::vector<std::string>& known) {
  for (const auto& [key, value] : section.items()) {
    (void)value;
    bool ok = false;
    for (const std::string& k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw validation_error("unknown config key: " + section_name + "." + key);
    }
  }
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& doc) {
  require(doc.is_object(), "config must be a JSON object");
  PipelineConfig config;
  detail::reject_unknown_keys(doc, "config",
                              {"index", "calibration", "forecast", "flow", "fusion"});

  if (doc.contains("index")) {
    const auto& s = doc["index"];
    detail::reject_unknown_keys(
        s, "index", {"green_band_pair", "builtup_band_pair", "ndvi_threshold", "ndbi_threshold"});
    if (s.contains("green_band_pair")) {
      config.index.green_band_pair = {s["green_band_pair"].at(0).get<std::string>(),
                                      s["green_band_pair"].at(1).get<std::string>()};
    }
    if (s.contains("builtup_band_pair")) {
      config.index.builtup_band_pair = {s["builtup_band_pair"].at(0).get<std::string>(),
                                        s["builtup_band_pair"].at(1).get<std::string>()};
    }
    if (s.contains("ndvi_threshold")) config.index.ndvi_threshold = s["ndvi_threshold"];
    if (s.contains("ndbi_threshold")) config.index.ndbi_threshold = s["ndbi_threshold"];
    validate_index_config(config.index);
  }
  if (doc.contains("calibration")) {
    const auto& s = doc["calibration"];
    detail::reject_unknown_keys(s, "calibration", {"x_min", "y_max"});
    if (s.contains("x_min")) config.calibration.x_min = s["x_min"];
    if (s.contains("y_max")) config.calibration.y_max = s["y_max"];
  }
  if (doc.contains("forecast")) {
    const auto& s = doc["forecast"];
    detail::reject_unknown_keys(s, "forecast",
                                {"degree", "horizon", "window", "hidden_size", "epochs",
                                 "learning_rate", "clip_norm"});
    if (s.contains("degree")) config.forecast_degree = s["degree"];
    if (s.contains("horizon")) config.forecast_horizon = s["horizon"];
    if (s.contains("window")) config.forecast.window = s["window"];
    if (s.contains("hidden_size")) config.forecast.hidden_size = s["hidden_size"];
    if (s.contains("epochs")) config.forecast.epochs = s["epochs"];
    if (s.contains("learning_rate")) config.forecast.learning_rate = s["learning_rate"];
    if (s.contains("clip_norm")) config.forecast.clip_norm = s["clip_norm"];
    require(config.forecast_degree >= 0, "forecast.degree must be nonnegative");
    require(config.forecast_horizon >= 1, "forecast.horizon must be at least 1");
  }
  if (doc.contains("flow")) {
    const auto& s = doc["flow"];
    detail::reject_unknown_keys(
        s, "flow",
        {"nx", "ny", "snapshots", "vortex_count", "advection_speed", "dt", "u_inf", "obstacle",
         "sigma", "amplitude", "decay_rate", "stagger", "wall_sensor_count"});
    if (s.contains("nx")) config.flow.nx = s["nx"];
    if (s.contains("ny")) config.flow.ny = s["ny"];
    if (s.contains("snapshots")) config.flow.snapshots = s["snapshots"];
    if (s.contains("vortex_count")) config.flow.vortex_count = s["vortex_count"];
    if (s.contains("advection_speed")) config.flow.advection_speed = s["advection_speed"];
    if (s.contains("dt")) config.flow.dt = s["dt"];
    if (s.contains("u_inf")) config.flow.u_inf = s["u_inf"];
    if (s.contains("obstacle")) {
      const auto& ob = s["obstacle"];
      detail::reject_unknown_keys(ob, "flow.obstacle", {"x0", "y0", "width", "height"});
      if (ob.contains("x0")) config.flow.obstacle.x0 = ob["x0"];
      if (ob.contains("y0")) config.flow.obstacle.y0 = ob["y0"];
      if (ob.contains("width")) config.flow.obstacle.width = ob["width"];
      if (ob.contains("height")) config.flow.obstacle.height = ob["height"];
    }
    if (s.contains("sigma")) config.flow.sigma = s["sigma"];
    if (s.contains("amplitude")) config.flow.amplitude = s["amplitude"];
    if (s.contains("decay_rate")) config.flow.decay_rate = s["decay_rate"];
    if (s.contains("stagger")) config.flow.stagger = s["stagger"];
    if (s.contains("wall_sensor_count")) config.flow.wall_sensor_count = s["wall_sensor_count"];
  }
  if (doc.contains("fusion")) {
    const auto& s = doc["fusion"];
    detail::reject_unknown_keys(s, "fusion", {"layers", "epochs", "learning_rate"});
    if (s.contains("layers")) config.fusion_layers = s["layers"].get<std::vector<int>>();
    if (s.contains("epochs")) config.fusion_epochs = s["epochs"];
    if (s.contains("learning_rate")) config.fusion_learning_rate = s["learning_rate"];
    require(!config.fusion_layers.empty(), "fusion.layers must be non-empty");
    require(config.fusion_epochs >= 0, "fusion.epochs must be nonnegative");
    require(config.fusion_learning_rate > 0.0, "fusion.learning_rate must be positive");
  }
  return config;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(detail::read_json_file(path));
}

}  // namespace cityadapt
