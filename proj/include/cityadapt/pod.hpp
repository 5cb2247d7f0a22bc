#pragma once

// Proper orthogonal decomposition by the method of snapshots. Snapshots are
// packed into abstract field vectors over non-obstacle cells, the spectrum of
// the temporal correlation matrix is evaluated through a thin SVD of the
// centered snapshots, and modes come back ranked by energy. Coefficients are
// plain projections of the fluctuations onto the modes.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/flow.hpp"

namespace cityadapt {

enum class FieldKind { velocity, pressure, all, sensors };

inline std::string field_kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::velocity: return "velocity";
    case FieldKind::pressure: return "pressure";
    case FieldKind::all: return "all";
    case FieldKind::sensors: return "sensors";
  }
  throw validation_error("unknown field kind");
}

inline FieldKind field_kind_from_name(const std::string& name) {
  if (name == "velocity") return FieldKind::velocity;
  if (name == "pressure") return FieldKind::pressure;
  if (name == "all") return FieldKind::all;
  if (name == "sensors") return FieldKind::sensors;
  throw validation_error("unknown field kind: " + name);
}

// How packed vectors map back onto the grid. For sensor-space bases the grid
// members are unused and cell_count is the sensor count.
struct PODLayout {
  FieldKind kind = FieldKind::velocity;
  int nx = 0;
  int ny = 0;
  ObstacleRect obstacle;
  int cell_count = 0;  // non-obstacle cells (or sensors)

  int components() const {
    switch (kind) {
      case FieldKind::velocity: return 2;
      case FieldKind::all: return 3;
      default: return 1;
    }
  }
  int dof() const { return cell_count * components(); }
};

struct PODBasis {
  PODLayout layout;
  Eigen::VectorXd mean;         // dof
  Eigen::MatrixXd modes;        // dof x retained, orthonormal columns
  Eigen::VectorXd eigenvalues;  // one per snapshot, descending, >= 0
  Eigen::MatrixXd coefficients; // retained x snapshot count
  int retained = 0;
};

namespace detail {

// Packs the selected components of one snapshot over non-obstacle cells,
// component-major (all u cells, then v, then p).
inline Eigen::VectorXd pack_snapshot(const SnapshotMatrix& sm, std::size_t k, FieldKind kind) {
  std::vector<const Grid*> grids;
  if (kind == FieldKind::velocity) {
    grids = {&sm.snapshots[k].u, &sm.snapshots[k].v};
  } else if (kind == FieldKind::pressure) {
    grids = {&sm.snapshots[k].p};
  } else {
    grids = {&sm.snapshots[k].u, &sm.snapshots[k].v, &sm.snapshots[k].p};
  }
  std::vector<double> packed;
  for (const Grid* g : grids) {
    for (int y = 0; y < sm.ny; ++y) {
      for (int x = 0; x < sm.nx; ++x) {
        if (!sm.is_obstacle(x, y)) packed.push_back(g->at(x, y));
      }
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(packed.data(),
                                           static_cast<Eigen::Index>(packed.size()));
}

inline int fluid_cell_count(const SnapshotMatrix& sm) {
  int n = 0;
  for (int y = 0; y < sm.ny; ++y) {
    for (int x = 0; x < sm.nx; ++x) {
      if (!sm.is_obstacle(x, y)) ++n;
    }
  }
  return n;
}

// Core method of snapshots on a dof x M data matrix.
inline PODBasis pod_of_matrix(const Eigen::MatrixXd& data, const PODLayout& layout) {
  const Eigen::Index M = data.cols();
  require(M >= 2, "need at least two snapshots");

  PODBasis basis;
  basis.layout = layout;
  basis.mean = data.rowwise().mean();
  const Eigen::MatrixXd fluct = data.colwise() - basis.mean;

  // Thin SVD of the centered snapshot matrix. Its right singular vectors are
  // the eigenvectors of the temporal correlation matrix (1/M) fluct^T fluct
  // and sigma^2/M its eigenvalues, so this evaluates the method of snapshots;
  // the SVD route is what keeps even the weakest retained modes orthonormal
  // to machine precision.
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(fluct, Eigen::ComputeThinU);
  const Eigen::VectorXd& sigma = svd.singularValues();

  basis.eigenvalues = Eigen::VectorXd::Zero(M);
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    basis.eigenvalues(i) = sigma(i) * sigma(i) / static_cast<double>(M);
  }

  // Singular values at the floating-point noise floor of the input are rank
  // artifacts, not fluctuation structure; everything above it is retained.
  const double noise_floor = static_cast<double>(std::max(data.rows(), data.cols())) *
                             std::numeric_limits<double>::epsilon() * data.norm();
  Eigen::Index retained = 0;
  while (retained < sigma.size() && sigma(retained) > noise_floor) ++retained;
  basis.retained = static_cast<int>(retained);

  basis.modes = svd.matrixU().leftCols(retained);
  // Sign convention: first component of visible magnitude is positive.
  for (Eigen::Index i = 0; i < retained; ++i) {
    for (Eigen::Index r = 0; r < basis.modes.rows(); ++r) {
      if (std::abs(basis.modes(r, i)) > 1e-12) {
        if (basis.modes(r, i) < 0.0) basis.modes.col(i) = -basis.modes.col(i);
        break;
      }
    }
  }
  basis.coefficients = basis.modes.transpose() * fluct;  // a_i(t_k) = <u'_k, phi_i>
  return basis;
}

}  // namespace detail

inline PODBasis compute_pod(const SnapshotMatrix& sm, FieldKind kind) {
  validate_snapshot_matrix(sm);
  require(kind != FieldKind::sensors, "sensor-space POD takes a SensorTrace");

  PODLayout layout;
  layout.kind = kind;
  layout.nx = sm.nx;
  layout.ny = sm.ny;
  layout.obstacle = sm.obstacle;
  layout.cell_count = detail::fluid_cell_count(sm);
  require(layout.cell_count > 0, "grid has no non-obstacle cells");

  Eigen::MatrixXd data(layout.dof(), static_cast<Eigen::Index>(sm.count()));
  for (std::size_t k = 0; k < sm.count(); ++k) {
    data.col(static_cast<Eigen::Index>(k)) = detail::pack_snapshot(sm, k, kind);
  }
  return detail::pod_of_matrix(data, layout);
}

inline PODBasis compute_pod(const SensorTrace& trace) {
  require(trace.sensor_count() >= 1, "sensor trace is empty");
  require(trace.snapshot_count() >= 2, "need at least two snapshots");
  PODLayout layout;
  layout.kind = FieldKind::sensors;
  layout.nx = trace.sensor_count();
  layout.ny = 1;
  layout.cell_count = trace.sensor_count();
  return detail::pod_of_matrix(trace.pressure, layout);
}

// Mean plus the first k modes weighted by the given coefficients.
inline Eigen::VectorXd reconstruct_field(const PODBasis& basis, const Eigen::VectorXd& coefficients,
                                         int k) {
  require(k >= 0, "mode count must be nonnegative");
  if (k > basis.retained) {
    throw validation_error("k = " + std::to_string(k) + " exceeds retained mode count " +
                           std::to_string(basis.retained));
  }
  require(coefficients.size() >= k, "coefficient vector shorter than k");
  Eigen::VectorXd field = basis.mean;
  for (int i = 0; i < k; ++i) {
    field += coefficients(i) * basis.modes.col(i);
  }
  return field;
}

inline double energy_fraction(const PODBasis& basis, int k) {
  require(k >= 0 && k <= basis.eigenvalues.size(), "k out of range");
  const double total = basis.eigenvalues.sum();
  if (total <= 0.0) return 1.0;  // all-zero spectrum carries no energy to split
  double head = 0.0;
  for (int i = 0; i < k; ++i) head += basis.eigenvalues(i);
  return head / total;
}

// Unpacks a packed field vector into grids, zero on obstacle cells. Only grid
// layouts can be unpacked.
inline FlowSnapshot unpack_field(const PODLayout& layout, const Eigen::VectorXd& field) {
  require(layout.kind != FieldKind::sensors, "sensor-space fields have no grid layout");
  require(field.size() == layout.dof(), "field size does not match layout");
  FlowSnapshot snap{Grid(layout.nx, layout.ny, 0.0), Grid(layout.nx, layout.ny, 0.0),
                    Grid(layout.nx, layout.ny, 0.0)};
  std::vector<Grid*> grids;
  if (layout.kind == FieldKind::velocity) {
    grids = {&snap.u, &snap.v};
  } else if (layout.kind == FieldKind::pressure) {
    grids = {&snap.p};
  } else {
    grids = {&snap.u, &snap.v, &snap.p};
  }
  Eigen::Index pos = 0;
  for (Grid* g : grids) {
    for (int y = 0; y < layout.ny; ++y) {
      for (int x = 0; x < layout.nx; ++x) {
        if (!layout.obstacle.contains(x, y)) g->at(x, y) = field(pos++);
      }
    }
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json pod_basis_to_json(const PODBasis& basis) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "pod_basis";
  doc["field_kind"] = field_kind_name(basis.layout.kind);
  doc["nx"] = basis.layout.nx;
  doc["ny"] = basis.layout.ny;
  doc["obstacle"] = {{"x0", basis.layout.obstacle.x0},
                     {"y0", basis.layout.obstacle.y0},
                     {"width", basis.layout.obstacle.width},
                     {"height", basis.layout.obstacle.height}};
  doc["cell_count"] = basis.layout.cell_count;
  doc["retained"] = basis.retained;
  doc["mean"] = detail::vector_to_json(basis.mean);
  doc["eigenvalues"] = detail::vector_to_json(basis.eigenvalues);
  doc["modes"] = detail::matrix_to_json(basis.modes);
  doc["coefficients"] = detail::matrix_to_json(basis.coefficients);
  return doc;
}

inline PODBasis pod_basis_from_json(const nlohmann::json& doc, const std::string& context) {
  detail::require_model_header(doc, "pod_basis", context);
  PODBasis basis;
  basis.layout.kind = field_kind_from_name(doc.at("field_kind").get<std::string>());
  basis.layout.nx = doc.at("nx").get<int>();
  basis.layout.ny = doc.at("ny").get<int>();
  const auto& ob = doc.at("obstacle");
  basis.layout.obstacle = {ob.at("x0").get<int>(), ob.at("y0").get<int>(),
                           ob.at("width").get<int>(), ob.at("height").get<int>()};
  basis.layout.cell_count = doc.at("cell_count").get<int>();
  basis.retained = doc.at("retained").get<int>();
  basis.mean = detail::vector_from_json(doc.at("mean"), context);
  basis.eigenvalues = detail::vector_from_json(doc.at("eigenvalues"), context);
  if (basis.retained > 0) {
    basis.modes = detail::matrix_from_json(doc.at("modes"), context);
    basis.coefficients = detail::matrix_from_json(doc.at("coefficients"), context);
  } else {
    basis.modes.resize(basis.mean.size(), 0);
    basis.coefficients.resize(0, basis.eigenvalues.size());
  }
  require(basis.mean.size() == basis.layout.dof(), context + ": mean size mismatch");
  require(basis.modes.cols() == basis.retained, context + ": mode count mismatch");
  return basis;
}

inline void save_pod_basis(const PODBasis& basis, const std::filesystem::path& path) {
  detail::write_json_file(path, pod_basis_to_json(basis));
}

inline PODBasis load_pod_basis(const std::filesystem::path& path) {
  return pod_basis_from_json(detail::read_json_file(path), path.string());
}

// CSV: mode,eigenvalue,energy_fraction,cumulative_fraction (1-based modes).
inline void save_energy_spectrum(const PODBasis& basis, const std::filesystem::path& path) {
  const double total = basis.eigenvalues.sum();
  std::string out = "mode,eigenvalue,energy_fraction,cumulative_fraction\n";
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) {
    const double frac = total > 0.0 ? basis.eigenvalues(i) / total : 0.0;
    cumulative += frac;
    out += std::to_string(i + 1) + "," + detail::format_double(basis.eigenvalues(i)) + "," +
           detail::format_double(frac) + "," + detail::format_double(cumulative) + "\n";
  }
  detail::write_text_file(path, out);
}

}  // namespace cityadapt
