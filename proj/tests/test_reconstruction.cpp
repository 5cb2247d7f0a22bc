#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "cityadapt/flow.hpp"
#include "cityadapt/pod.hpp"
#include "cityadapt/reconstruction.hpp"
#include "cityadapt/rng.hpp"
#include "helpers.hpp"

using namespace cityadapt;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

WakeConfig small_wake() {
  WakeConfig config;
  config.nx = 48;
  config.ny = 24;
  config.snapshots = 16;
  config.vortex_count = 3;
  config.obstacle = {8, 0, 4, 8};
  config.wall_sensor_count = 8;
  config.seed = 11;
  return config;
}

WakeConfig frozen_wake() {
  WakeConfig config;
  config.nx = 48;
  config.ny = 24;
  config.snapshots = 16;
  config.vortex_count = 1;
  config.advection_speed = 0.0;
  config.decay_rate = 0.05;
  config.obstacle = {8, 0, 4, 8};
  config.wall_sensor_count = 6;
  config.seed = 3;
  return config;
}

struct HalfSplit {
  SnapshotMatrix train, test;
  SensorTrace sensors_train, sensors_test;
};

// Alternating snapshots, so both halves sample the same flow regime.
HalfSplit split_even_odd(const WakeData& wake) {
  HalfSplit split;
  split.train = split.test = wake.snapshots;
  split.train.snapshots.clear();
  split.test.snapshots.clear();
  split.sensors_train.locations = split.sensors_test.locations = wake.sensors.locations;
  const int total = wake.sensors.snapshot_count();
  split.sensors_train.pressure.resize(wake.sensors.sensor_count(), (total + 1) / 2);
  split.sensors_test.pressure.resize(wake.sensors.sensor_count(), total / 2);
  for (int k = 0; k < total; ++k) {
    if (k % 2 == 0) {
      split.sensors_train.pressure.col(
          static_cast<Eigen::Index>(split.train.snapshots.size())) =
          wake.sensors.pressure.col(k);
      split.train.snapshots.push_back(wake.snapshots.snapshots[static_cast<std::size_t>(k)]);
    } else {
      split.sensors_test.pressure.col(
          static_cast<Eigen::Index>(split.test.snapshots.size())) =
          wake.sensors.pressure.col(k);
      split.test.snapshots.push_back(wake.snapshots.snapshots[static_cast<std::size_t>(k)]);
    }
  }
  return split;
}

// Synthetic R1 problem whose sensor-to-coefficient map is exactly linear: the
// planted map is the oracle for everything trained on top of it.
struct PlantedR1 {
  SensorTrace trace;
  PODBasis pressure_basis;
  PODBasis velocity_basis;
  SnapshotMatrix snapshots;  // consistent with the velocity basis
  Eigen::MatrixXd projected; // snapshot count x n_p
  Eigen::MatrixXd weights;   // n_p x n_u
  Eigen::VectorXd intercept; // n_u
  int n_u = 2;
  int n_p = 3;
};

PlantedR1 make_planted(std::uint64_t seed) {
  PlantedR1 planted;
  const int sensor_count = 6;
  const int snapshot_count = 40;

  SeededRng rng(seed);
  for (int s = 0; s < sensor_count; ++s) planted.trace.locations.emplace_back(s, 0);
  planted.trace.pressure.resize(sensor_count, snapshot_count);
  for (int s = 0; s < sensor_count; ++s) {
    for (int k = 0; k < snapshot_count; ++k) {
      planted.trace.pressure(s, k) = rng.uniform(-1.0, 1.0);
    }
  }
  planted.pressure_basis = compute_pod(planted.trace);

  planted.weights.resize(planted.n_p, planted.n_u);
  planted.weights << 0.7, -1.2, 0.4, 0.9, -0.3, 0.25;
  planted.intercept.resize(planted.n_u);
  planted.intercept << 0.15, -0.6;

  PODBasis& vb = planted.velocity_basis;
  vb.layout.kind = FieldKind::velocity;
  vb.layout.nx = 4;
  vb.layout.ny = 2;
  vb.layout.cell_count = 8;
  vb.mean.resize(vb.layout.dof());
  for (Eigen::Index i = 0; i < vb.mean.size(); ++i) vb.mean(i) = 0.5 + 0.1 * double(i);
  vb.modes = Eigen::MatrixXd::Zero(vb.layout.dof(), planted.n_u);
  vb.modes(0, 0) = 1.0;
  vb.modes(3, 1) = 1.0;
  vb.eigenvalues = Eigen::VectorXd::Zero(snapshot_count);
  vb.eigenvalues(0) = 1.0;
  vb.eigenvalues(1) = 0.5;
  vb.retained = planted.n_u;
  vb.coefficients.resize(planted.n_u, snapshot_count);
  planted.projected.resize(snapshot_count, planted.n_p);
  for (int k = 0; k < snapshot_count; ++k) {
    const Eigen::VectorXd x = planted.pressure_basis.modes.leftCols(planted.n_p).transpose() *
                              (planted.trace.pressure.col(k) - planted.pressure_basis.mean);
    planted.projected.row(k) = x.transpose();
    vb.coefficients.col(k) = planted.weights.transpose() * x + planted.intercept;
  }

  planted.snapshots.nx = vb.layout.nx;
  planted.snapshots.ny = vb.layout.ny;
  planted.snapshots.dt = 1.0;
  for (int k = 0; k < snapshot_count; ++k) {
    const Eigen::VectorXd field = vb.mean + vb.modes * vb.coefficients.col(k);
    planted.snapshots.snapshots.push_back(unpack_field(vb.layout, field));
  }
  return planted;
}

}  // namespace

TEST_CASE("an exactly linear sensor map is recovered through the ridge path") {
  const PlantedR1 planted = make_planted(42);
  const ReconstructionModel model =
      train_reconstruction1(planted.velocity_basis, planted.pressure_basis, planted.trace,
                            TruncationConfig{planted.n_u, planted.n_p}, 1e-12);

  REQUIRE((model.map.weights - planted.weights).norm() / planted.weights.norm() < 1e-6);
  REQUIRE((model.map.intercept - planted.intercept).norm() < 1e-6);
  REQUIRE(model.warnings.empty());

  for (int k = 0; k < planted.trace.snapshot_count(); ++k) {
    const Eigen::VectorXd predicted =
        predict_coefficients(model, planted.trace.pressure.col(k));
    REQUIRE((predicted - planted.velocity_basis.coefficients.col(k)).norm() < 1e-8);
  }

  const ReconReport report =
      evaluate_reconstruction(model, planted.snapshots, planted.trace);
  REQUIRE(report.variant == "R1");
  REQUIRE(report.mean_relative_l2 < 1e-6);
  REQUIRE(report.truncation_floor == 0.0);
  for (const double nrmse : report.coefficient_nrmse) REQUIRE(nrmse < 1e-8);
}

TEST_CASE("heavy regularization collapses to the mean-field predictor") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
  const PODBasis pressure = compute_pod(wake.sensors);
  const ReconstructionModel model =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{4, 4}, 1e18);

  REQUIRE(model.map.weights.norm() < 1e-12);
  const Eigen::VectorXd field = predict_field(model, wake.sensors.pressure.col(5));
  REQUIRE((field - velocity.mean).norm() / velocity.mean.norm() < 1e-9);

  const ReconReport report = evaluate_reconstruction(model, wake.snapshots, wake.sensors);
  REQUIRE(report.mean_relative_l2 == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("zero regularization on collinear sensors is reported as singular") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  SensorTrace duplicated = wake.sensors;
  duplicated.locations.push_back(duplicated.locations.front());
  Eigen::MatrixXd pressure(duplicated.pressure.rows() + 1, duplicated.pressure.cols());
  pressure.topRows(duplicated.pressure.rows()) = duplicated.pressure;
  pressure.row(pressure.rows() - 1) = duplicated.pressure.row(0);
  duplicated.pressure = pressure;

  const PlaneSpec plane{PlaneOrientation::horizontal, 10, FieldComponent::u};
  REQUIRE_THROWS_MATCHES(
      train_reconstruction2(wake.snapshots, plane, duplicated, 0.0), numeric_error,
      MessageMatches(ContainsSubstring("lambda_reg > 0")));
}

TEST_CASE("a rank-one flow yields an exact plane regression") {
  const WakeData wake = generate_synthetic_wake(frozen_wake());
  for (const FieldComponent component : {FieldComponent::u, FieldComponent::p}) {
    const PlaneSpec plane{PlaneOrientation::horizontal, 12, component};
    const ReconstructionModel model =
        train_reconstruction2(wake.snapshots, plane, wake.sensors, 1e-12);
    const ReconReport report = evaluate_reconstruction(model, wake.snapshots, wake.sensors);
    CAPTURE(static_cast<int>(component));
    REQUIRE(report.variant == "R2");
    REQUIRE(report.mean_relative_l2 < 1e-8);
  }
}

TEST_CASE("duplicated sensors share the weight symmetrically") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  SensorTrace duplicated = wake.sensors;
  duplicated.locations.insert(duplicated.locations.begin(), duplicated.locations[0]);
  Eigen::MatrixXd pressure(duplicated.pressure.rows() + 1, duplicated.pressure.cols());
  pressure.row(0) = duplicated.pressure.row(0);
  pressure.bottomRows(duplicated.pressure.rows()) = duplicated.pressure;
  duplicated.pressure = pressure;

  const PlaneSpec plane{PlaneOrientation::horizontal, 10, FieldComponent::u};
  const ReconstructionModel model =
      train_reconstruction2(wake.snapshots, plane, duplicated, 1.0);
  REQUIRE((model.map.weights.row(0) - model.map.weights.row(1)).norm() < 1e-12);
}

TEST_CASE("a plane inside the obstacle is rejected") {
  WakeConfig config = small_wake();
  config.obstacle = {8, 0, 3, config.ny};  // full-height block
  const WakeData wake = generate_synthetic_wake(config);

  const PlaneSpec buried{PlaneOrientation::vertical, 9, FieldComponent::u};
  REQUIRE_THROWS_MATCHES(
      train_reconstruction2(wake.snapshots, buried, wake.sensors, 1e-6), validation_error,
      MessageMatches(ContainsSubstring("inside the obstacle")));

  const PlaneSpec outside{PlaneOrientation::horizontal, config.ny, FieldComponent::u};
  REQUIRE_THROWS_MATCHES(
      train_reconstruction2(wake.snapshots, outside, wake.sensors, 1e-6), validation_error,
      MessageMatches(ContainsSubstring("plane index")));
}

TEST_CASE("an interpolating regression sits on the truncation floor") {
  WakeConfig config = small_wake();
  config.snapshots = 12;
  config.vortex_count = 4;
  config.wall_sensor_count = 10;
  config.seed = 7;
  const WakeData wake = generate_synthetic_wake(config);
  const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
  const PODBasis pressure = compute_pod(wake.sensors);
  REQUIRE(pressure.retained >= 8);

  const ReconstructionModel model =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{4, 8}, 1e-12);
  const ReconReport report = evaluate_reconstruction(model, wake.snapshots, wake.sensors);

  double tail = 0.0;
  for (Eigen::Index i = 4; i < velocity.eigenvalues.size(); ++i) {
    tail += velocity.eigenvalues(i);
  }
  const double floor = std::sqrt(tail / velocity.eigenvalues.sum());
  REQUIRE(report.truncation_floor == Catch::Approx(floor).margin(1e-15));

  // The dropped tail is a hard lower bound; an interpolating fit adds almost
  // nothing on top of it.
  REQUIRE(report.mean_relative_l2 >= floor * (1.0 - 1e-12));
  REQUIRE(report.mean_relative_l2 <= floor * (1.0 + 1e-3));
  for (const double nrmse : report.coefficient_nrmse) REQUIRE(nrmse < 1e-2);
}

TEST_CASE("the held-out half stays inside the truncation budget") {
  WakeConfig config;
  config.nx = 80;
  config.ny = 32;
  config.snapshots = 64;
  config.vortex_count = 4;
  config.advection_speed = 0.625;
  config.sigma = 4.0;
  config.stagger = 7.0;
  config.decay_rate = 0.02;
  config.wall_sensor_count = 20;
  config.seed = 1;
  const WakeData wake = generate_synthetic_wake(config);
  const HalfSplit split = split_even_odd(wake);

  const PODBasis velocity = compute_pod(split.train, FieldKind::velocity);
  const PODBasis pressure = compute_pod(split.sensors_train);
  const ReconstructionModel model = train_reconstruction1(
      velocity, pressure, split.sensors_train, TruncationConfig{4, 4}, 1e-8);
  const ReconReport report =
      evaluate_reconstruction(model, split.test, split.sensors_test);

  CAPTURE(report.mean_relative_l2, report.truncation_floor);
  REQUIRE(report.mean_relative_l2 > report.truncation_floor * (1.0 - 1e-12));
  REQUIRE(report.mean_relative_l2 < report.truncation_floor * 1.2);
}

TEST_CASE("a mean-stuck predictor scores exactly one") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  const PlaneSpec plane{PlaneOrientation::horizontal, 10, FieldComponent::u};
  ReconstructionModel model =
      train_reconstruction2(wake.snapshots, plane, wake.sensors, 1e-6);
  model.map.weights.setZero();
  model.map.intercept = model.plane_mean;

  const ReconReport report = evaluate_reconstruction(model, wake.snapshots, wake.sensors);
  REQUIRE(report.mean_relative_l2 == 1.0);
}

TEST_CASE("evaluation metrics are deterministic") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
  const PODBasis pressure = compute_pod(wake.sensors);
  const ReconstructionModel first =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{3, 4}, 1e-8);
  const ReconstructionModel second =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{3, 4}, 1e-8);
  REQUIRE(same_matrix(first.map.weights, second.map.weights));
  REQUIRE(same_matrix(first.map.intercept, second.map.intercept));

  const ReconReport a = evaluate_reconstruction(first, wake.snapshots, wake.sensors);
  const ReconReport b = evaluate_reconstruction(first, wake.snapshots, wake.sensors);
  REQUIRE(a.mean_relative_l2 == b.mean_relative_l2);
  REQUIRE(a.per_snapshot == b.per_snapshot);
  REQUIRE(a.coefficient_nrmse == b.coefficient_nrmse);
}

TEST_CASE("an over-budget projection request is warned about") {
  const int sensor_count = 6;
  const int snapshot_count = 5;

  PODBasis pressure;
  pressure.layout.kind = FieldKind::sensors;
  pressure.layout.cell_count = sensor_count;
  pressure.mean = Eigen::VectorXd::Zero(sensor_count);
  pressure.modes = Eigen::MatrixXd::Identity(sensor_count, sensor_count);
  pressure.eigenvalues = Eigen::VectorXd::Zero(snapshot_count);
  for (int i = 0; i < snapshot_count; ++i) pressure.eigenvalues(i) = 1.0 - 0.1 * i;
  pressure.retained = sensor_count;
  pressure.coefficients = Eigen::MatrixXd::Zero(sensor_count, snapshot_count);

  PODBasis velocity;
  velocity.layout.kind = FieldKind::velocity;
  velocity.layout.nx = 4;
  velocity.layout.ny = 2;
  velocity.layout.cell_count = 8;
  velocity.mean = Eigen::VectorXd::Zero(velocity.layout.dof());
  velocity.modes = Eigen::MatrixXd::Identity(velocity.layout.dof(), 1);
  velocity.eigenvalues = Eigen::VectorXd::Zero(snapshot_count);
  velocity.eigenvalues(0) = 1.0;
  velocity.retained = 1;
  velocity.coefficients = Eigen::MatrixXd::Zero(1, snapshot_count);

  SensorTrace trace;
  SeededRng rng(17);
  for (int s = 0; s < sensor_count; ++s) trace.locations.emplace_back(s, 0);
  trace.pressure.resize(sensor_count, snapshot_count);
  for (int s = 0; s < sensor_count; ++s) {
    for (int k = 0; k < snapshot_count; ++k) trace.pressure(s, k) = rng.uniform(-1.0, 1.0);
  }

  const ReconstructionModel warned =
      train_reconstruction1(velocity, pressure, trace, TruncationConfig{1, 5}, 1.0);
  REQUIRE(warned.warnings.size() == 1);
  REQUIRE(warned.warnings[0] ==
          "n_p = 5 exceeds min(snapshots - 1, sensor count) = 4; "
          "projection may be ill-conditioned");

  const ReconstructionModel quiet =
      train_reconstruction1(velocity, pressure, trace, TruncationConfig{1, 4}, 1.0);
  REQUIRE(quiet.warnings.empty());
}

TEST_CASE("the regressor boundary accepts substitutes") {
  const PlantedR1 planted = make_planted(42);
  const ReconstructionModel model =
      train_reconstruction1(planted.velocity_basis, planted.pressure_basis, planted.trace,
                            TruncationConfig{planted.n_u, planted.n_p}, 1e-12);

  SECTION("a ridge regressor wrapper reproduces the built-in path exactly") {
    const RidgeRegressor wrapper(model.map);
    for (int k = 0; k < 5; ++k) {
      const Eigen::VectorXd sensors = planted.trace.pressure.col(k);
      const Eigen::VectorXd direct = predict_coefficients(model, sensors);
      const Eigen::VectorXd via = predict_coefficients(model, sensors, &wrapper);
      REQUIRE(same_matrix(direct, via));
    }
  }

  SECTION("a small network learns the planted map well enough to reconstruct") {
    const Eigen::MatrixXd targets = planted.velocity_basis.coefficients.transpose();
    const MlpRegressor net =
        train_mlp_regressor(planted.projected, targets, {8}, 3000, 0.1, 5);
    const ReconReport report =
        evaluate_reconstruction(model, planted.snapshots, planted.trace, &net);
    REQUIRE(report.mean_relative_l2 < 0.1);
  }

  SECTION("a runaway learning rate is reported with the epoch") {
    const Eigen::MatrixXd targets = planted.velocity_basis.coefficients.transpose();
    REQUIRE_THROWS_MATCHES(
        train_mlp_regressor(planted.projected, targets, {8}, 200, 1e80, 5), numeric_error,
        MessageMatches(ContainsSubstring("diverged at epoch")));
  }
}

TEST_CASE("reconstruction models survive saving and loading") {
  testutil::TempDir dir;
  const WakeData wake = generate_synthetic_wake(small_wake());

  SECTION("sensor-to-coefficient variant") {
    const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
    const PODBasis pressure = compute_pod(wake.sensors);
    const ReconstructionModel model = train_reconstruction1(
        velocity, pressure, wake.sensors, TruncationConfig{3, 4}, 1e-8);
    const auto path = dir.path / "r1.json";
    save_reconstruction_model(model, path);
    const ReconstructionModel loaded = load_reconstruction_model(path);

    REQUIRE(loaded.variant == ReconVariant::r1);
    REQUIRE(loaded.lambda_reg == model.lambda_reg);
    REQUIRE(loaded.truncation.n_u == 3);
    REQUIRE(loaded.truncation.n_p == 4);
    REQUIRE(same_matrix(loaded.map.weights, model.map.weights));
    REQUIRE(same_matrix(loaded.map.intercept, model.map.intercept));
    REQUIRE(same_matrix(loaded.velocity_basis.modes, model.velocity_basis.modes));
    REQUIRE(same_matrix(loaded.pressure_basis.mean, model.pressure_basis.mean));
    const Eigen::VectorXd probe = wake.sensors.pressure.col(7);
    REQUIRE(same_matrix(predict_field(loaded, probe), predict_field(model, probe)));
  }

  SECTION("sensor-to-plane variant") {
    const PlaneSpec plane{PlaneOrientation::vertical, 20, FieldComponent::v};
    const ReconstructionModel model =
        train_reconstruction2(wake.snapshots, plane, wake.sensors, 1e-4);
    const auto path = dir.path / "r2.json";
    save_reconstruction_model(model, path);
    const ReconstructionModel loaded = load_reconstruction_model(path);

    REQUIRE(loaded.variant == ReconVariant::r2);
    REQUIRE(loaded.plane.orientation == PlaneOrientation::vertical);
    REQUIRE(loaded.plane.index == 20);
    REQUIRE(loaded.plane.component == FieldComponent::v);
    REQUIRE(loaded.plane_cells == model.plane_cells);
    REQUIRE(same_matrix(loaded.plane_mean, model.plane_mean));
    const Eigen::VectorXd probe = wake.sensors.pressure.col(3);
    REQUIRE(same_matrix(predict_plane(loaded, probe), predict_plane(model, probe)));
  }

  SECTION("wrong model kind is refused") {
    const auto path = dir.path / "other.json";
    detail::write_text_file(
        path, "{\"format_version\":1,\"model_kind\":\"poly\",\"weights\":[]}\n");
    REQUIRE_THROWS_AS(load_reconstruction_model(path), format_error);
  }
}

TEST_CASE("shape mismatches are rejected") {
  const WakeData wake = generate_synthetic_wake(small_wake());
  const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
  const PODBasis pressure = compute_pod(wake.sensors);

  REQUIRE_THROWS_MATCHES(
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{0, 4}, 1e-8),
      validation_error, MessageMatches(ContainsSubstring("at least 1")));
  REQUIRE_THROWS_MATCHES(
      train_reconstruction1(velocity, pressure, wake.sensors,
                            TruncationConfig{velocity.retained + 1, 4}, 1e-8),
      validation_error, MessageMatches(ContainsSubstring("exceeds retained velocity")));
  REQUIRE_THROWS_MATCHES(
      train_reconstruction1(pressure, pressure, wake.sensors, TruncationConfig{2, 2}, 1e-8),
      validation_error, MessageMatches(ContainsSubstring("grid-space")));
  REQUIRE_THROWS_MATCHES(
      train_reconstruction1(velocity, velocity, wake.sensors, TruncationConfig{2, 2}, 1e-8),
      validation_error, MessageMatches(ContainsSubstring("sensor-space")));

  SensorTrace short_trace = wake.sensors;
  short_trace.pressure = wake.sensors.pressure.leftCols(8);
  REQUIRE_THROWS_MATCHES(
      train_reconstruction1(velocity, pressure, short_trace, TruncationConfig{2, 2}, 1e-8),
      validation_error, MessageMatches(ContainsSubstring("same snapshot set")));

  const ReconstructionModel r1 =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{2, 2}, 1e-8);
  SensorTrace narrow = wake.sensors;
  narrow.locations.pop_back();
  narrow.pressure = wake.sensors.pressure.topRows(wake.sensors.pressure.rows() - 1);
  REQUIRE_THROWS_MATCHES(evaluate_reconstruction(r1, wake.snapshots, narrow),
                         validation_error,
                         MessageMatches(ContainsSubstring("sensor count")));
  REQUIRE_THROWS_MATCHES(predict_plane(r1, wake.sensors.pressure.col(0)), validation_error,
                         MessageMatches(ContainsSubstring("plane prediction")));

  const PlaneSpec plane{PlaneOrientation::horizontal, 10, FieldComponent::u};
  const ReconstructionModel r2 =
      train_reconstruction2(wake.snapshots, plane, wake.sensors, 1e-6);
  REQUIRE_THROWS_MATCHES(predict_coefficients(r2, wake.sensors.pressure.col(0)),
                         validation_error,
                         MessageMatches(ContainsSubstring("R1 operation")));

  RidgeMap map;
  map.weights = Eigen::MatrixXd::Zero(3, 2);
  map.intercept = Eigen::VectorXd::Zero(2);
  REQUIRE_THROWS_MATCHES(map.predict(Eigen::VectorXd::Zero(4)), validation_error,
                         MessageMatches(ContainsSubstring("dimension mismatch")));
}

TEST_CASE("reports serialize with variant-specific fields") {
  testutil::TempDir dir;
  const WakeData wake = generate_synthetic_wake(small_wake());
  const PODBasis velocity = compute_pod(wake.snapshots, FieldKind::velocity);
  const PODBasis pressure = compute_pod(wake.sensors);

  const ReconstructionModel r1 =
      train_reconstruction1(velocity, pressure, wake.sensors, TruncationConfig{3, 4}, 1e-8);
  const ReconReport r1_report = evaluate_reconstruction(r1, wake.snapshots, wake.sensors);
  const auto r1_path = dir.path / "r1_report.json";
  save_recon_report(r1_report, r1_path);
  const nlohmann::json r1_doc = nlohmann::json::parse(testutil::read_file(r1_path));
  REQUIRE(r1_doc.at("variant") == "R1");
  REQUIRE(r1_doc.at("mean_relative_l2").get<double>() == r1_report.mean_relative_l2);
  REQUIRE(r1_doc.at("per_snapshot").size() == wake.snapshots.count());
  REQUIRE(r1_doc.at("coefficient_nrmse").size() == 3);
  REQUIRE(r1_doc.at("truncation_floor").get<double>() == r1_report.truncation_floor);
  REQUIRE(r1_doc.at("disjoint_test_set_assumed").get<bool>());

  const PlaneSpec plane{PlaneOrientation::horizontal, 10, FieldComponent::p};
  const ReconstructionModel r2 =
      train_reconstruction2(wake.snapshots, plane, wake.sensors, 1e-6);
  const ReconReport r2_report = evaluate_reconstruction(r2, wake.snapshots, wake.sensors);
  const auto r2_path = dir.path / "r2_report.json";
  save_recon_report(r2_report, r2_path);
  const nlohmann::json r2_doc = nlohmann::json::parse(testutil::read_file(r2_path));
  REQUIRE(r2_doc.at("variant") == "R2");
  REQUIRE_FALSE(r2_doc.contains("coefficient_nrmse"));
  REQUIRE_FALSE(r2_doc.contains("truncation_floor"));
}
