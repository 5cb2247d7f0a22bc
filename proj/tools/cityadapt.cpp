// Command-line front end: each subcommand runs one pipeline stage against a
// persistent workspace. JSON summaries go to stdout, logs to stderr.
// Exit codes: 1 validation/config, 2 I/O, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cityadapt/cityadapt.hpp"

namespace {

using cityadapt::Workspace;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::string workspace = "workspace";
  std::string config_path;
  std::uint64_t seed = 1;
  bool compact = false;
};

void log_line(const std::string& message) { std::cerr << "[cityadapt] " << message << "\n"; }

void print_summary(const nlohmann::json& summary, const GlobalOptions& global) {
  if (global.compact) {
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << summary.dump(2) << "\n";
  }
}

cityadapt::PipelineConfig load_config(const GlobalOptions& global) {
  if (global.config_path.empty()) return {};
  return cityadapt::load_pipeline_config(global.config_path);
}

// Scratch directory inside the workspace for files on their way into the
// content-addressed store.
struct Staging {
  fs::path dir;

  explicit Staging(const fs::path& root) : dir(root / ".staging") {
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir, ec);
    if (ec) throw cityadapt::io_error("cannot create staging directory: " + ec.message());
  }
  ~Staging() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

cityadapt::IndicatorSeries load_series_artifact(Workspace& ws, const std::string& ref,
                                                const std::string& region) {
  const std::string id = ws.resolve(ref);
  return cityadapt::load_series(ws.artifact_path(id), region);
}

// Even-indexed snapshots train, odd-indexed test; interleaving keeps both
// halves statistically alike for a slowly evolving wake.
void split_interleaved(const cityadapt::SnapshotMatrix& sm, const cityadapt::SensorTrace& trace,
                       cityadapt::SnapshotMatrix& train_sm, cityadapt::SensorTrace& train_tr,
                       cityadapt::SnapshotMatrix& test_sm, cityadapt::SensorTrace& test_tr) {
  train_sm = sm;
  test_sm = sm;
  train_sm.snapshots.clear();
  test_sm.snapshots.clear();
  std::vector<int> train_cols, test_cols;
  for (std::size_t k = 0; k < sm.count(); ++k) {
    if (k % 2 == 0) {
      train_sm.snapshots.push_back(sm.snapshots[k]);
      train_cols.push_back(static_cast<int>(k));
    } else {
      test_sm.snapshots.push_back(sm.snapshots[k]);
      test_cols.push_back(static_cast<int>(k));
    }
  }
  train_tr.locations = trace.locations;
  test_tr.locations = trace.locations;
  train_tr.pressure.resize(trace.pressure.rows(), static_cast<Eigen::Index>(train_cols.size()));
  test_tr.pressure.resize(trace.pressure.rows(), static_cast<Eigen::Index>(test_cols.size()));
  for (std::size_t i = 0; i < train_cols.size(); ++i) {
    train_tr.pressure.col(static_cast<Eigen::Index>(i)) = trace.pressure.col(train_cols[i]);
  }
  for (std::size_t i = 0; i < test_cols.size(); ++i) {
    test_tr.pressure.col(static_cast<Eigen::Index>(i)) = trace.pressure.col(test_cols[i]);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"cityadapt: indicator extraction, adaptation diagrams, forecasting, and "
               "POD-based flow sensing over a persistent workspace"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--workspace", global.workspace, "workspace directory")
      ->envname("CITYADAPT_WORKSPACE");
  app.add_option("--config", global.config_path, "pipeline config JSON file");
  app.add_option("--seed", global.seed, "seed for stochastic stages");
  app.add_flag("--json", global.compact, "emit the summary as compact single-line JSON");

  // ingest
  std::string ingest_path, ingest_name;
  auto* ingest = app.add_subcommand("ingest", "register a CARB1 raster");
  ingest->add_option("raster", ingest_path, "path to a CARB1 file")->required();
  ingest->add_option("--name", ingest_name, "name to register for the raster");

  // indices
  std::string indices_raster, indices_region;
  std::int64_t indices_timestamp = 0;
  auto* indices = app.add_subcommand("indices", "append indicator values for a raster");
  indices->add_option("--raster", indices_raster, "raster id or name")->required();
  indices->add_option("--region", indices_region, "region identifier")->required();
  indices->add_option("--timestamp", indices_timestamp, "observation timestamp (integer)")
      ->required();

  // calibrate
  std::string calibrate_anchors;
  auto* calibrate = app.add_subcommand("calibrate", "fit axis calibration from an anchors CSV");
  calibrate->add_option("anchors", calibrate_anchors, "CSV with axis,raw,calibrated rows")
      ->required();

  // observe
  std::string observe_series, observe_calibration, observe_region;
  auto* observe = app.add_subcommand("observe", "place a region on the adaptation diagram");
  observe->add_option("--series", observe_series, "series id or name")->required();
  observe->add_option("--calibration", observe_calibration, "calibration id or name")->required();
  observe->add_option("--region", observe_region, "region label (defaults from the series name)");

  // forecast
  std::string forecast_series, forecast_kind = "poly";
  int forecast_horizon = 0;
  auto* forecast_cmd = app.add_subcommand("forecast", "forecast the indicators of a series");
  forecast_cmd->add_option("--series", forecast_series, "series id or name")->required();
  forecast_cmd->add_option("--model", forecast_kind, "model family: poly or lstm")
      ->check(CLI::IsMember({"poly", "lstm"}));
  forecast_cmd->add_option("--horizon", forecast_horizon,
                           "steps ahead (default: config forecast.horizon)");

  // synth-flow
  std::string synth_name;
  auto* synth = app.add_subcommand("synth-flow", "generate the synthetic wake dataset");
  synth->add_option("--name", synth_name, "name to register for the snapshot set");

  // pod
  std::string pod_flow, pod_field = "velocity";
  int pod_max_modes = 0;
  auto* pod = app.add_subcommand("pod", "compute a POD basis from stored snapshots");
  pod->add_option("--flow", pod_flow, "flow artifact id or name")->required();
  pod->add_option("--field", pod_field, "field selection: velocity, pressure, or all")
      ->check(CLI::IsMember({"velocity", "pressure", "all"}));
  pod->add_option("--max-modes", pod_max_modes, "cap on stored modes (0 = all retained)");

  // recon
  std::string recon_variant, recon_flow, recon_sensors;
  double recon_lambda = 1e-8;
  int recon_nu = 4, recon_np = 4, recon_plane_index = 0;
  std::string recon_orientation = "horizontal", recon_component = "u";
  auto* recon = app.add_subcommand("recon", "train and evaluate a reconstruction model");
  recon->add_option("--variant", recon_variant, "r1 or r2")
      ->required()
      ->check(CLI::IsMember({"r1", "r2"}));
  recon->add_option("--flow", recon_flow, "flow artifact id or name")->required();
  recon->add_option("--sensors", recon_sensors, "sensor trace artifact id or name")->required();
  recon->add_option("--lambda", recon_lambda, "ridge regularization strength");
  recon->add_option("--n-u", recon_nu, "retained velocity modes (r1)");
  recon->add_option("--n-p", recon_np, "retained wall-pressure modes (r1)");
  recon->add_option("--orientation", recon_orientation, "plane orientation (r2)")
      ->check(CLI::IsMember({"horizontal", "vertical"}));
  recon->add_option("--plane-index", recon_plane_index, "plane row/column (r2)");
  recon->add_option("--component", recon_component, "field component on the plane (r2)")
      ->check(CLI::IsMember({"u", "v", "p"}));

  // fusion
  std::string fusion_dataset;
  auto* fusion = app.add_subcommand("fusion", "train the wide-and-deep predictor");
  fusion->add_option("dataset", fusion_dataset, "dataset CSV (wide:/deep:/target columns)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  }

  const cityadapt::PipelineConfig config = load_config(global);

  if (*ingest) {
    Workspace ws = Workspace::open(global.workspace);
    const cityadapt::Raster raster = cityadapt::load_raster(ingest_path);
    const std::string id = ws.store_file("raster", ingest_path, ingest_name);
    log_line("ingested " + ingest_path + " as " + id);
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& band : raster.bands) bands.push_back(band.name);
    print_summary({{"command", "ingest"},
                   {"id", id},
                   {"width", raster.width},
                   {"height", raster.height},
                   {"bands", bands}},
                  global);
    return 0;
  }

  if (*indices) {
    Workspace ws = Workspace::open(global.workspace);
    const std::string raster_id = ws.resolve(indices_raster);
    const cityadapt::Raster raster = cityadapt::load_raster(ws.artifact_path(raster_id));
    const double green = cityadapt::urban_green_index(raster, config.index);
    const double dev = cityadapt::land_development_index(raster, config.index);

    const std::string series_name = "series/" + indices_region;
    cityadapt::IndicatorSeries series;
    series.region_id = indices_region;
    if (ws.manifest()["names"].contains(series_name)) {
      series = load_series_artifact(ws, series_name, indices_region);
    }
    const std::vector<std::pair<std::string, double>> observation = {
        {"green_index", green}, {"development_index", dev}};
    bool appended = true;
    if (!series.entries.empty() && series.entries.back().timestamp == indices_timestamp &&
        series.entries.back().values == std::vector<double>{green, dev}) {
      appended = false;  // identical re-run; keep the series as-is
    } else {
      series = cityadapt::append_observation(series, indices_timestamp, observation);
    }
    Staging staging(ws.root());
    cityadapt::save_series(series, staging.dir / "series.csv");
    const std::string id = ws.store_file("series", staging.dir / "series.csv", series_name);
    log_line("series " + series_name + " now " + id +
             (appended ? "" : " (unchanged; identical observation)"));
    print_summary({{"command", "indices"},
                   {"region", indices_region},
                   {"series_id", id},
                   {"timestamp", indices_timestamp},
                   {"green_index", green},
                   {"development_index", dev},
                   {"entries", series.entries.size()}},
                  global);
    return 0;
  }

  if (*calibrate) {
    Workspace ws = Workspace::open(global.workspace);
    std::vector<cityadapt::Anchor> dev_anchors, green_anchors;
    const auto lines = cityadapt::detail::read_lines(calibrate_anchors);
    cityadapt::require(!lines.empty() && lines[0] == "axis,raw,calibrated",
                       calibrate_anchors + ": header must be axis,raw,calibrated");
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const auto fields = cityadapt::detail::split_csv_line(lines[li]);
      cityadapt::require(fields.size() == 3,
                         calibrate_anchors + ": row " + std::to_string(li) + " malformed");
      const std::string ctx = calibrate_anchors + " row " + std::to_string(li);
      const cityadapt::Anchor anchor{cityadapt::detail::parse_double(fields[1], ctx),
                                     cityadapt::detail::parse_double(fields[2], ctx)};
      if (fields[0] == "development") {
        dev_anchors.push_back(anchor);
      } else if (fields[0] == "green") {
        green_anchors.push_back(anchor);
      } else {
        throw cityadapt::validation_error(ctx + ": axis must be development or green");
      }
    }
    const cityadapt::CalibrationMap map = cityadapt::fit_calibration(dev_anchors, green_anchors);
    Staging staging(ws.root());
    cityadapt::save_calibration(map, staging.dir / "calibration.json");
    const std::string id =
        ws.store_file("calibration", staging.dir / "calibration.json", "calibration/latest");
    log_line("calibration stored as " + id);
    print_summary({{"command", "calibrate"},
                   {"id", id},
                   {"x", {{"scale", map.x.scale}, {"offset", map.x.offset},
                          {"residual", map.x.residual}}},
                   {"y", {{"scale", map.y.scale}, {"offset", map.y.offset},
                          {"residual", map.y.residual}}}},
                  global);
    return 0;
  }

  if (*observe) {
    Workspace ws = Workspace::open(global.workspace);
    std::string region = observe_region;
    if (region.empty()) {
      region = observe_series.rfind("series/", 0) == 0 ? observe_series.substr(7) : observe_series;
    }
    const cityadapt::IndicatorSeries series = load_series_artifact(ws, observe_series, region);
    cityadapt::require(!series.entries.empty(), "series has no observations");
    const cityadapt::CalibrationMap map =
        cityadapt::load_calibration(ws.artifact_path(ws.resolve(observe_calibration)));
    const std::size_t last = series.entries.size() - 1;
    const double dev_raw = series.value(last, "development_index");
    const double green_raw = series.value(last, "green_index");
    const cityadapt::AdaptationPoint point =
        cityadapt::observe(map, config.calibration, region, dev_raw, green_raw);

    Staging staging(ws.root());
    const fs::path diagram_dir = staging.dir / "diagram";
    fs::create_directories(diagram_dir);
    cityadapt::emit_diagram({point}, config.calibration, diagram_dir / "diagram");
    const std::string id = ws.store_directory("diagram", diagram_dir);
    log_line("diagram stored as " + id);
    print_summary({{"command", "observe"},
                   {"diagram_id", id},
                   {"region", point.region_id},
                   {"x", point.x},
                   {"y", point.y},
                   {"in_green_zone", point.in_green_zone}},
                  global);
    return 0;
  }

  if (*forecast_cmd) {
    Workspace ws = Workspace::open(global.workspace);
    const std::string series_id = ws.resolve(forecast_series);
    const cityadapt::IndicatorSeries series =
        cityadapt::load_series(ws.artifact_path(series_id), forecast_series);
    cityadapt::require(!series.entries.empty(), "series has no observations");
    const int horizon = forecast_horizon > 0 ? forecast_horizon : config.forecast_horizon;

    std::vector<double> times;
    for (const auto& e : series.entries) times.push_back(static_cast<double>(e.timestamp));

    Staging staging(ws.root());
    nlohmann::json model_ids = nlohmann::json::object();
    std::vector<cityadapt::ForecastResult> forecasts;
    for (std::size_t col = 0; col < series.names.size(); ++col) {
      std::vector<double> values;
      for (const auto& e : series.entries) values.push_back(e.values[col]);
      const fs::path model_path = staging.dir / ("model_" + series.names[col] + ".json");
      if (forecast_kind == "poly") {
        const cityadapt::PolyModel model =
            cityadapt::fit_poly(times, values, config.forecast_degree);
        forecasts.push_back(cityadapt::forecast(model, times, horizon));
        cityadapt::save_poly_model(model, model_path);
      } else {
        cityadapt::TrainConfig train_config = config.forecast;
        train_config.seed = global.seed;
        const cityadapt::LstmTrainResult result = cityadapt::train_lstm(values, train_config);
        forecasts.push_back(cityadapt::forecast(result.model, times, values, train_config.window,
                                                horizon));
        cityadapt::save_lstm_model(result.model, model_path);
      }
      model_ids[series.names[col]] = ws.store_file("model", model_path);
    }

    // History rows keep their observed values; future rows carry predictions.
    std::string csv = "timestamp";
    for (const std::string& name : series.names) csv += "," + name;
    csv += ",forecast\n";
    for (const auto& e : series.entries) {
      csv += std::to_string(e.timestamp);
      for (double v : e.values) csv += "," + cityadapt::detail::format_double(v);
      csv += ",false\n";
    }
    for (int k = 0; k < horizon; ++k) {
      csv += std::to_string(static_cast<std::int64_t>(
          std::llround(forecasts.front().times[static_cast<std::size_t>(k)])));
      for (const auto& fc : forecasts) {
        csv += "," + cityadapt::detail::format_double(fc.values[static_cast<std::size_t>(k)]);
      }
      csv += ",true\n";
    }
    const std::string forecast_id = ws.store_bytes("forecast", csv, ".csv");
    log_line("forecast stored as " + forecast_id);
    print_summary({{"command", "forecast"},
                   {"series_id", series_id},
                   {"model_kind", forecast_kind},
                   {"horizon", horizon},
                   {"model_ids", model_ids},
                   {"forecast_id", forecast_id}},
                  global);
    return 0;
  }

  if (*synth) {
    Workspace ws = Workspace::open(global.workspace);
    cityadapt::WakeConfig wake_config = config.flow;
    wake_config.seed = global.seed;
    const cityadapt::WakeData data = cityadapt::generate_synthetic_wake(wake_config);

    Staging staging(ws.root());
    const fs::path flow_dir = staging.dir / "flow";
    cityadapt::save_snapshot_matrix(data.snapshots, flow_dir);
    const std::string flow_id = ws.store_directory("flow", flow_dir, synth_name);
    cityadapt::save_sensor_trace(data.sensors, staging.dir / "sensors.csv");
    const std::string sensors_id = ws.store_file("sensors", staging.dir / "sensors.csv");
    log_line("wake stored as " + flow_id + " with sensors " + sensors_id);
    print_summary({{"command", "synth-flow"},
                   {"flow_id", flow_id},
                   {"sensors_id", sensors_id},
                   {"nx", data.snapshots.nx},
                   {"ny", data.snapshots.ny},
                   {"snapshots", data.snapshots.count()},
                   {"sensor_count", data.sensors.sensor_count()}},
                  global);
    return 0;
  }

  if (*pod) {
    Workspace ws = Workspace::open(global.workspace);
    const cityadapt::SnapshotMatrix sm =
        cityadapt::load_snapshot_matrix(ws.artifact_path(ws.resolve(pod_flow)));
    cityadapt::PODBasis basis =
        cityadapt::compute_pod(sm, cityadapt::field_kind_from_name(pod_field));
    if (pod_max_modes > 0 && pod_max_modes < basis.retained) {
      basis.modes = basis.modes.leftCols(pod_max_modes).eval();
      basis.coefficients = basis.coefficients.topRows(pod_max_modes).eval();
      basis.retained = pod_max_modes;
    }
    Staging staging(ws.root());
    cityadapt::save_pod_basis(basis, staging.dir / "basis.json");
    cityadapt::save_energy_spectrum(basis, staging.dir / "spectrum.csv");
    const std::string basis_id = ws.store_file("basis", staging.dir / "basis.json");
    const std::string spectrum_id = ws.store_file("spectrum", staging.dir / "spectrum.csv");
    log_line("basis stored as " + basis_id);
    print_summary({{"command", "pod"},
                   {"basis_id", basis_id},
                   {"spectrum_id", spectrum_id},
                   {"field", pod_field},
                   {"retained", basis.retained},
                   {"energy_fraction_4",
                    cityadapt::energy_fraction(basis, std::min(4, basis.retained))}},
                  global);
    return 0;
  }

  if (*recon) {
    Workspace ws = Workspace::open(global.workspace);
    const cityadapt::SnapshotMatrix sm =
        cityadapt::load_snapshot_matrix(ws.artifact_path(ws.resolve(recon_flow)));
    const cityadapt::SensorTrace trace =
        cityadapt::load_sensor_trace(ws.artifact_path(ws.resolve(recon_sensors)));
    cityadapt::require(static_cast<std::size_t>(trace.snapshot_count()) == sm.count(),
                       "sensors and flow disagree on snapshot count");

    cityadapt::SnapshotMatrix train_sm, test_sm;
    cityadapt::SensorTrace train_tr, test_tr;
    split_interleaved(sm, trace, train_sm, train_tr, test_sm, test_tr);

    cityadapt::ReconstructionModel model;
    if (recon_variant == "r1") {
      const cityadapt::PODBasis velocity_basis =
          cityadapt::compute_pod(train_sm, cityadapt::FieldKind::velocity);
      const cityadapt::PODBasis pressure_basis = cityadapt::compute_pod(train_tr);
      model = cityadapt::train_reconstruction1(velocity_basis, pressure_basis, train_tr,
                                               {recon_nu, recon_np}, recon_lambda);
    } else {
      cityadapt::PlaneSpec plane;
      plane.orientation = recon_orientation == "horizontal"
                              ? cityadapt::PlaneOrientation::horizontal
                              : cityadapt::PlaneOrientation::vertical;
      plane.index = recon_plane_index;
      plane.component = recon_component == "u"
                            ? cityadapt::FieldComponent::u
                            : (recon_component == "v" ? cityadapt::FieldComponent::v
                                                      : cityadapt::FieldComponent::p);
      model = cityadapt::train_reconstruction2(train_sm, plane, train_tr, recon_lambda);
    }
    const cityadapt::ReconReport report =
        cityadapt::evaluate_reconstruction(model, test_sm, test_tr);

    Staging staging(ws.root());
    cityadapt::save_reconstruction_model(model, staging.dir / "recon_model.json");
    cityadapt::save_recon_report(report, staging.dir / "report.json");
    const std::string model_id = ws.store_file("recon_model", staging.dir / "recon_model.json");
    const std::string report_id = ws.store_file("report", staging.dir / "report.json");
    for (const std::string& warning : model.warnings) log_line("warning: " + warning);
    log_line("reconstruction model stored as " + model_id);
    nlohmann::json summary = {{"command", "recon"},
                              {"variant", report.variant},
                              {"model_id", model_id},
                              {"report_id", report_id},
                              {"mean_relative_l2", report.mean_relative_l2},
                              {"warnings", model.warnings}};
    if (recon_variant == "r1") summary["truncation_floor"] = report.truncation_floor;
    print_summary(summary, global);
    return 0;
  }

  if (*fusion) {
    Workspace ws = Workspace::open(global.workspace);
    const cityadapt::FusionDataset dataset = cityadapt::load_fusion_dataset(fusion_dataset);
    const cityadapt::WideDeepModel init = cityadapt::init_model(
        static_cast<int>(dataset.wide_names.size()), static_cast<int>(dataset.deep_names.size()),
        config.fusion_layers, global.seed);
    const cityadapt::FusionTrainResult result = cityadapt::train(
        init, dataset, config.fusion_epochs, config.fusion_learning_rate, global.seed);

    Staging staging(ws.root());
    cityadapt::save_wide_deep_model(result.model, staging.dir / "fusion_model.json");
    std::string loss_csv = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      loss_csv += std::to_string(e) + "," +
                  cityadapt::detail::format_double(result.loss_history[e]) + "\n";
    }
    const std::string model_id = ws.store_file("fusion_model", staging.dir / "fusion_model.json");
    const std::string loss_id = ws.store_bytes("loss", loss_csv, ".csv");
    log_line("fusion model stored as " + model_id);
    print_summary({{"command", "fusion"},
                   {"model_id", model_id},
                   {"loss_id", loss_id},
                   {"records", dataset.records.size()},
                   {"parameter_count", cityadapt::parameter_count(result.model)},
                   {"final_loss",
                    result.loss_history.empty() ? 0.0 : result.loss_history.back()}},
                  global);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cityadapt::numeric_error& e) {
    std::cerr << "[cityadapt] numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const cityadapt::io_error& e) {
    std::cerr << "[cityadapt] i/o error: " << e.what() << "\n";
    return 2;
  } catch (const cityadapt::error& e) {
    std::cerr << "[cityadapt] error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "[cityadapt] error: " << e.what() << "\n";
    return 1;
  }
}
