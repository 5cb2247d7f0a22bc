#pragma once

// Non-intrusive sensing. Reconstruction 1 maps wall-pressure sensor readings,
// projected onto a sensor-space POD basis, to truncated velocity-POD
// coefficients; Reconstruction 2 maps raw sensor readings straight to the
// field values on one grid plane. Ridge regression is the reference
// regressor; anything satisfying SensorRegressor can stand in for it.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/detail/mlp.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/flow.hpp"
#include "cityadapt/pod.hpp"

namespace cityadapt {

struct TruncationConfig {
  int n_u = 4;  // retained velocity modes
  int n_p = 4;  // retained wall-pressure modes
};

enum class PlaneOrientation { horizontal, vertical };
enum class FieldComponent { u, v, p };

struct PlaneSpec {
  PlaneOrientation orientation = PlaneOrientation::horizontal;
  int index = 0;  // row for horizontal, column for vertical
  FieldComponent component = FieldComponent::u;
};

// Linear map with an unpenalized intercept, fitted on centered data.
struct RidgeMap {
  Eigen::MatrixXd weights;    // input dim x output dim
  Eigen::VectorXd intercept;  // output dim

  Eigen::VectorXd predict(const Eigen::VectorXd& x) const {
    require(x.size() == weights.rows(), "ridge input dimension mismatch");
    return weights.transpose() * x + intercept;
  }
};

inline RidgeMap fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda_reg) {
  require(X.rows() == Y.rows(), "input and target row counts differ");
  require(X.rows() >= 1, "regression needs at least one sample");
  require(lambda_reg >= 0.0 && std::isfinite(lambda_reg), "lambda_reg must be nonnegative");

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const Eigen::RowVectorXd y_mean = Y.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::MatrixXd Yc = Y.rowwise() - y_mean;

  const Eigen::MatrixXd gram =
      Xc.transpose() * Xc +
      lambda_reg * Eigen::MatrixXd::Identity(X.cols(), X.cols());
  RidgeMap map;
  if (lambda_reg == 0.0) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) {
      throw numeric_error("normal equations are singular; set lambda_reg > 0");
    }
    map.weights = lu.solve(Xc.transpose() * Yc);
  } else {
    map.weights = gram.ldlt().solve(Xc.transpose() * Yc);
  }
  map.intercept = y_mean.transpose() - map.weights.transpose() * x_mean.transpose();
  return map;
}

// Regressor boundary: evaluation only needs predict(), so a neural regressor
// can replace the ridge map without touching the pipeline.
struct SensorRegressor {
  virtual ~SensorRegressor() = default;
  virtual Eigen::VectorXd predict(const Eigen::VectorXd& input) const = 0;
};

struct RidgeRegressor final : SensorRegressor {
  RidgeMap map;

  explicit RidgeRegressor(RidgeMap m) : map(std::move(m)) {}
  Eigen::VectorXd predict(const Eigen::VectorXd& input) const override {
    return map.predict(input);
  }
};

// Optional neural alternative: a small tanh MLP with linear output trained by
// full-batch gradient descent on standardized inputs.
struct MlpRegressor final : SensorRegressor {
  detail::Mlp net;
  Eigen::VectorXd input_mean, input_scale;

  Eigen::VectorXd predict(const Eigen::VectorXd& input) const override {
    const Eigen::VectorXd x = (input - input_mean).cwiseQuotient(input_scale);
    return detail::mlp_forward(net, x).back();
  }
};

inline MlpRegressor train_mlp_regressor(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                        const std::vector<int>& hidden_layers, int epochs,
                                        double learning_rate, std::uint64_t seed) {
  require(X.rows() == Y.rows(), "input and target row counts differ");
  require(X.rows() >= 1, "regression needs at least one sample");
  require(epochs >= 1, "epoch count must be at least 1");
  require(learning_rate > 0.0, "learning rate must be positive");

  MlpRegressor reg;
  reg.input_mean = X.colwise().mean().transpose();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const Eigen::VectorXd d = X.row(r).transpose() - reg.input_mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(X.rows());
  reg.input_scale = var.cwiseSqrt();
  for (Eigen::Index i = 0; i < reg.input_scale.size(); ++i) {
    if (reg.input_scale(i) == 0.0) reg.input_scale(i) = 1.0;
  }

  std::vector<int> layers = hidden_layers;
  layers.push_back(static_cast<int>(Y.cols()));
  SeededRng rng(seed);
  reg.net = detail::init_mlp(static_cast<int>(X.cols()), layers, /*linear_output=*/true, rng);

  const double n = static_cast<double>(X.rows());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    detail::MlpGrads grads(reg.net);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const Eigen::VectorXd x =
          (X.row(r).transpose() - reg.input_mean).cwiseQuotient(reg.input_scale);
      const auto acts = detail::mlp_forward(reg.net, x);
      const Eigen::VectorXd err = acts.back() - Y.row(r).transpose();
      loss += err.squaredNorm();
      detail::mlp_backward(reg.net, acts, 2.0 * err / n, grads);
    }
    if (!std::isfinite(loss)) {
      throw numeric_error("mlp regressor diverged at epoch " + std::to_string(epoch));
    }
    for (std::size_t l = 0; l < reg.net.w.size(); ++l) {
      reg.net.w[l] -= learning_rate * grads.w[l];
      reg.net.b[l] -= learning_rate * grads.b[l];
    }
  }
  return reg;
}

enum class ReconVariant { r1, r2 };

struct ReconstructionModel {
  ReconVariant variant = ReconVariant::r1;
  double lambda_reg = 0.0;
  RidgeMap map;
  std::vector<std::string> warnings;

  // R1 members
  TruncationConfig truncation;
  PODBasis pressure_basis;  // sensor-space
  PODBasis velocity_basis;  // grid-space, carries the training spectrum

  // R2 members
  PlaneSpec plane;
  std::vector<std::pair<int, int>> plane_cells;  // non-obstacle cells on the plane
  Eigen::VectorXd plane_mean;                    // training mean of the plane values
};

namespace detail {

// Projection of one raw sensor vector onto the first n_p pressure modes.
inline Eigen::VectorXd project_sensors(const PODBasis& pressure_basis, int n_p,
                                       const Eigen::VectorXd& sensors) {
  require(sensors.size() == pressure_basis.mean.size(), "sensor vector dimension mismatch");
  return pressure_basis.modes.leftCols(n_p).transpose() * (sensors - pressure_basis.mean);
}

inline double component_value(const FlowSnapshot& snap, FieldComponent c, int x, int y) {
  switch (c) {
    case FieldComponent::u: return snap.u.at(x, y);
    case FieldComponent::v: return snap.v.at(x, y);
    case FieldComponent::p: return snap.p.at(x, y);
  }
  throw validation_error("unknown field component");
}

inline std::vector<std::pair<int, int>> plane_fluid_cells(const SnapshotMatrix& sm,
                                                          const PlaneSpec& plane) {
  std::vector<std::pair<int, int>> cells;
  if (plane.orientation == PlaneOrientation::horizontal) {
    require(plane.index >= 0 && plane.index < sm.ny, "plane index outside grid");
    for (int x = 0; x < sm.nx; ++x) {
      if (!sm.is_obstacle(x, plane.index)) cells.emplace_back(x, plane.index);
    }
  } else {
    require(plane.index >= 0 && plane.index < sm.nx, "plane index outside grid");
    for (int y = 0; y < sm.ny; ++y) {
      if (!sm.is_obstacle(plane.index, y)) cells.emplace_back(plane.index, y);
    }
  }
  return cells;
}

}  // namespace detail

inline ReconstructionModel train_reconstruction1(const PODBasis& velocity_basis,
                                                 const PODBasis& pressure_basis,
                                                 const SensorTrace& sensors,
                                                 const TruncationConfig& truncation,
                                                 double lambda_reg) {
  require(pressure_basis.layout.kind == FieldKind::sensors,
          "pressure basis must be sensor-space");
  require(velocity_basis.layout.kind != FieldKind::sensors,
          "velocity basis must be grid-space");
  const auto M = static_cast<Eigen::Index>(sensors.snapshot_count());
  require(velocity_basis.coefficients.cols() == M && pressure_basis.coefficients.cols() == M,
          "bases and sensors must come from the same snapshot set");
  require(truncation.n_u >= 1 && truncation.n_p >= 1, "truncation counts must be at least 1");
  require(truncation.n_u <= velocity_basis.retained,
          "n_u exceeds retained velocity modes");
  require(truncation.n_p <= pressure_basis.retained,
          "n_p exceeds retained pressure modes");

  ReconstructionModel model;
  model.variant = ReconVariant::r1;
  model.lambda_reg = lambda_reg;
  model.truncation = truncation;
  model.pressure_basis = pressure_basis;
  model.velocity_basis = velocity_basis;

  const int budget = std::min<int>(static_cast<int>(M) - 1, sensors.sensor_count());
  if (truncation.n_p > budget) {
    model.warnings.push_back("n_p = " + std::to_string(truncation.n_p) +
                             " exceeds min(snapshots - 1, sensor count) = " +
                             std::to_string(budget) + "; projection may be ill-conditioned");
  }

  Eigen::MatrixXd X(M, truncation.n_p);
  for (Eigen::Index k = 0; k < M; ++k) {
    X.row(k) =
        detail::project_sensors(pressure_basis, truncation.n_p, sensors.pressure.col(k))
            .transpose();
  }
  const Eigen::MatrixXd Y =
      velocity_basis.coefficients.topRows(truncation.n_u).transpose();
  model.map = fit_ridge(X, Y, lambda_reg);
  return model;
}

inline ReconstructionModel train_reconstruction2(const SnapshotMatrix& snapshots,
                                                 const PlaneSpec& plane,
                                                 const SensorTrace& sensors, double lambda_reg) {
  validate_snapshot_matrix(snapshots);
  const auto M = static_cast<Eigen::Index>(snapshots.count());
  require(sensors.snapshot_count() == static_cast<int>(M),
          "sensor trace and snapshots disagree on snapshot count");

  ReconstructionModel model;
  model.variant = ReconVariant::r2;
  model.lambda_reg = lambda_reg;
  model.plane = plane;
  model.plane_cells = detail::plane_fluid_cells(snapshots, plane);
  if (model.plane_cells.empty()) {
    throw validation_error("plane lies entirely inside the obstacle; no target cells");
  }

  const auto n_cells = static_cast<Eigen::Index>(model.plane_cells.size());
  Eigen::MatrixXd Y(M, n_cells);
  for (Eigen::Index k = 0; k < M; ++k) {
    for (Eigen::Index c = 0; c < n_cells; ++c) {
      const auto [x, y] = model.plane_cells[static_cast<std::size_t>(c)];
      Y(k, c) = detail::component_value(snapshots.snapshots[static_cast<std::size_t>(k)],
                                        plane.component, x, y);
    }
  }
  const Eigen::MatrixXd X = sensors.pressure.transpose();
  model.plane_mean = Y.colwise().mean().transpose();
  model.map = fit_ridge(X, Y, lambda_reg);
  return model;
}

// R1: sensor vector -> velocity coefficients (first n_u modes).
inline Eigen::VectorXd predict_coefficients(const ReconstructionModel& model,
                                            const Eigen::VectorXd& sensors,
                                            const SensorRegressor* regressor = nullptr) {
  require(model.variant == ReconVariant::r1, "coefficient prediction is an R1 operation");
  const Eigen::VectorXd projected =
      detail::project_sensors(model.pressure_basis, model.truncation.n_p, sensors);
  return regressor ? regressor->predict(projected) : model.map.predict(projected);
}

// R1: sensor vector -> packed velocity field.
inline Eigen::VectorXd predict_field(const ReconstructionModel& model,
                                     const Eigen::VectorXd& sensors,
                                     const SensorRegressor* regressor = nullptr) {
  const Eigen::VectorXd coeffs = predict_coefficients(model, sensors, regressor);
  return reconstruct_field(model.velocity_basis, coeffs, model.truncation.n_u);
}

// R2: sensor vector -> plane values over plane_cells.
inline Eigen::VectorXd predict_plane(const ReconstructionModel& model,
                                     const Eigen::VectorXd& sensors,
                                     const SensorRegressor* regressor = nullptr) {
  require(model.variant == ReconVariant::r2, "plane prediction is an R2 operation");
  return regressor ? regressor->predict(sensors) : model.map.predict(sensors);
}

struct ReconReport {
  std::string variant;
  double mean_relative_l2 = 0.0;       // sqrt(sum err^2 / sum fluctuation^2)
  std::vector<double> per_snapshot;    // per-snapshot error over RMS fluctuation norm
  std::vector<double> coefficient_nrmse;  // R1 only, per mode
  double truncation_floor = 0.0;       // R1 only, from the training spectrum
  bool disjoint_test_set_assumed = true;
};

// Relative errors are normalized by the fluctuation norm around the model's
// training mean, so a predictor stuck at that mean scores exactly 1.
inline ReconReport evaluate_reconstruction(const ReconstructionModel& model,
                                           const SnapshotMatrix& test_snapshots,
                                           const SensorTrace& test_sensors,
                                           const SensorRegressor* regressor = nullptr) {
  validate_snapshot_matrix(test_snapshots);
  const auto M = static_cast<Eigen::Index>(test_snapshots.count());
  require(test_sensors.snapshot_count() == static_cast<int>(M),
          "test sensors and snapshots disagree on snapshot count");

  ReconReport report;
  std::vector<double> err2(static_cast<std::size_t>(M));
  std::vector<double> fluct2(static_cast<std::size_t>(M));

  if (model.variant == ReconVariant::r1) {
    report.variant = "R1";
    require(test_sensors.sensor_count() == model.pressure_basis.mean.size(),
            "test sensor count does not match the trained model");
    const PODBasis& vb = model.velocity_basis;
    require(test_snapshots.nx == vb.layout.nx && test_snapshots.ny == vb.layout.ny,
            "test grid dims do not match the trained model");
    const int n_u = model.truncation.n_u;

    Eigen::MatrixXd coeff_err2 = Eigen::MatrixXd::Zero(n_u, M);
    for (Eigen::Index k = 0; k < M; ++k) {
      const Eigen::VectorXd truth =
          detail::pack_snapshot(test_snapshots, static_cast<std::size_t>(k), vb.layout.kind);
      const Eigen::VectorXd pred = predict_field(model, test_sensors.pressure.col(k), regressor);
      err2[static_cast<std::size_t>(k)] = (pred - truth).squaredNorm();
      fluct2[static_cast<std::size_t>(k)] = (truth - vb.mean).squaredNorm();

      const Eigen::VectorXd a_true = vb.modes.leftCols(n_u).transpose() * (truth - vb.mean);
      const Eigen::VectorXd a_pred =
          predict_coefficients(model, test_sensors.pressure.col(k), regressor);
      coeff_err2.col(k) = (a_pred - a_true).cwiseProduct(a_pred - a_true);
    }
    for (int i = 0; i < n_u; ++i) {
      const double rmse = std::sqrt(coeff_err2.row(i).mean());
      const double scale = std::sqrt(vb.eigenvalues(i));
      report.coefficient_nrmse.push_back(scale > 0.0 ? rmse / scale : rmse);
    }
    const double total = vb.eigenvalues.sum();
    double tail = 0.0;
    for (Eigen::Index i = n_u; i < vb.eigenvalues.size(); ++i) tail += vb.eigenvalues(i);
    report.truncation_floor = total > 0.0 ? std::sqrt(tail / total) : 0.0;
  } else {
    report.variant = "R2";
    require(test_sensors.sensor_count() == model.map.weights.rows(),
            "test sensor count does not match the trained model");
    const auto n_cells = static_cast<Eigen::Index>(model.plane_cells.size());
    for (Eigen::Index k = 0; k < M; ++k) {
      Eigen::VectorXd truth(n_cells);
      for (Eigen::Index c = 0; c < n_cells; ++c) {
        const auto [x, y] = model.plane_cells[static_cast<std::size_t>(c)];
        require(x < test_snapshots.nx && y < test_snapshots.ny,
                "plane cells outside the test grid");
        truth(c) = detail::component_value(
            test_snapshots.snapshots[static_cast<std::size_t>(k)], model.plane.component, x, y);
      }
      const Eigen::VectorXd pred = predict_plane(model, test_sensors.pressure.col(k), regressor);
      err2[static_cast<std::size_t>(k)] = (pred - truth).squaredNorm();
      fluct2[static_cast<std::size_t>(k)] = (truth - model.plane_mean).squaredNorm();
    }
  }

  double err_sum = 0.0, fluct_sum = 0.0;
  for (Eigen::Index k = 0; k < M; ++k) {
    err_sum += err2[static_cast<std::size_t>(k)];
    fluct_sum += fluct2[static_cast<std::size_t>(k)];
  }
  const double rms_fluct =
      fluct_sum > 0.0 ? std::sqrt(fluct_sum / static_cast<double>(M)) : 1.0;
  for (Eigen::Index k = 0; k < M; ++k) {
    report.per_snapshot.push_back(std::sqrt(err2[static_cast<std::size_t>(k)]) / rms_fluct);
  }
  report.mean_relative_l2 = fluct_sum > 0.0 ? std::sqrt(err_sum / fluct_sum)
                                            : std::sqrt(err_sum);
  return report;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json recon_report_to_json(const ReconReport& report) {
  nlohmann::json doc;
  doc["variant"] = report.variant;
  doc["mean_relative_l2"] = report.mean_relative_l2;
  doc["per_snapshot"] = report.per_snapshot;
  if (report.variant == "R1") {
    doc["coefficient_nrmse"] = report.coefficient_nrmse;
    doc["truncation_floor"] = report.truncation_floor;
  }
  doc["disjoint_test_set_assumed"] = report.disjoint_test_set_assumed;
  return doc;
}

inline void save_recon_report(const ReconReport& report, const std::filesystem::path& path) {
  detail::write_json_file(path, recon_report_to_json(report));
}

inline void save_reconstruction_model(const ReconstructionModel& model,
                                      const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "reconstruction";
  doc["variant"] = model.variant == ReconVariant::r1 ? "R1" : "R2";
  doc["lambda_reg"] = model.lambda_reg;
  doc["weights"] = detail::matrix_to_json(model.map.weights);
  doc["intercept"] = detail::vector_to_json(model.map.intercept);
  doc["warnings"] = model.warnings;
  if (model.variant == ReconVariant::r1) {
    doc["n_u"] = model.truncation.n_u;
    doc["n_p"] = model.truncation.n_p;
    doc["pressure_basis"] = pod_basis_to_json(model.pressure_basis);
    doc["velocity_basis"] = pod_basis_to_json(model.velocity_basis);
  } else {
    doc["plane"] = {
        {"orientation",
         model.plane.orientation == PlaneOrientation::horizontal ? "horizontal" : "vertical"},
        {"index", model.plane.index},
        {"component", model.plane.component == FieldComponent::u
                          ? "u"
                          : (model.plane.component == FieldComponent::v ? "v" : "p")}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [x, y] : model.plane_cells) cells.push_back({x, y});
    doc["plane_cells"] = cells;
    doc["plane_mean"] = detail::vector_to_json(model.plane_mean);
  }
  detail::write_json_file(path, doc);
}

inline ReconstructionModel load_reconstruction_model(const std::filesystem::path& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  detail::require_model_header(doc, "reconstruction", path.string());
  const std::string ctx = path.string();
  ReconstructionModel model;
  const std::string variant = doc.at("variant").get<std::string>();
  require(variant == "R1" || variant == "R2", ctx + ": unknown variant");
  model.variant = variant == "R1" ? ReconVariant::r1 : ReconVariant::r2;
  model.lambda_reg = doc.at("lambda_reg").get<double>();
  model.map.weights = detail::matrix_from_json(doc.at("weights"), ctx);
  model.map.intercept = detail::vector_from_json(doc.at("intercept"), ctx);
  model.warnings = doc.at("warnings").get<std::vector<std::string>>();
  if (model.variant == ReconVariant::r1) {
    model.truncation.n_u = doc.at("n_u").get<int>();
    model.truncation.n_p = doc.at("n_p").get<int>();
    model.pressure_basis = pod_basis_from_json(doc.at("pressure_basis"), ctx);
    model.velocity_basis = pod_basis_from_json(doc.at("velocity_basis"), ctx);
  } else {
    const auto& plane = doc.at("plane");
    model.plane.orientation = plane.at("orientation") == "horizontal"
                                  ? PlaneOrientation::horizontal
                                  : PlaneOrientation::vertical;
    model.plane.index = plane.at("index").get<int>();
    const std::string comp = plane.at("component").get<std::string>();
    model.plane.component = comp == "u" ? FieldComponent::u
                                        : (comp == "v" ? FieldComponent::v : FieldComponent::p);
    for (const auto& cell : doc.at("plane_cells")) {
      model.plane_cells.emplace_back(cell[0].get<int>(), cell[1].get<int>());
    }
    model.plane_mean = detail::vector_from_json(doc.at("plane_mean"), ctx);
  }
  return model;
}

}  // namespace cityadapt
