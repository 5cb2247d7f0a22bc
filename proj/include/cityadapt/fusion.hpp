#pragma once

// Wide-and-deep regression: a linear path over global parameters added to an
// MLP path over local indicators, sharing one scalar head. Inputs are
// standardized per feature with the statistics stored in the model, so the
// two paths see comparable scales.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cityadapt/detail/csv.hpp"
#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/detail/mlp.hpp"
#include "cityadapt/detail/random.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/rng.hpp"

namespace cityadapt {

struct FeatureRecord {
  Eigen::VectorXd wide;
  Eigen::VectorXd deep;
  double target = 0.0;
};

struct FusionDataset {
  std::vector<std::string> wide_names;
  std::vector<std::string> deep_names;
  std::vector<FeatureRecord> records;
};

struct WideDeepModel {
  Eigen::VectorXd wide_w;
  detail::Mlp deep;        // tanh activations throughout
  Eigen::VectorXd head_w;  // over the last deep layer
  double head_b = 0.0;
  // Per-feature standardization, identity until train() fits it.
  Eigen::VectorXd wide_mean, wide_scale;
  Eigen::VectorXd deep_mean, deep_scale;

  int wide_dim() const { return static_cast<int>(wide_w.size()); }
  int deep_dim() const { return static_cast<int>(deep.input_dim()); }
};

// Wide weights start at zero so the initial model is the deep path alone;
// deep layers and the head draw uniform ±1/sqrt(fan_in).
inline WideDeepModel init_model(int wide_dim, int deep_dim, const std::vector<int>& layer_sizes,
                                std::uint64_t seed) {
  require(wide_dim >= 1, "wide dimension must be at least 1");
  require(deep_dim >= 1, "deep dimension must be at least 1");
  require(!layer_sizes.empty(), "layer size list must be non-empty");
  SeededRng rng(seed);
  WideDeepModel model;
  model.wide_w = Eigen::VectorXd::Zero(wide_dim);
  model.deep = detail::init_mlp(deep_dim, layer_sizes, /*linear_output=*/false, rng);
  const int head_in = layer_sizes.back();
  const double bound = 1.0 / std::sqrt(static_cast<double>(head_in));
  model.head_w = detail::random_vector(head_in, bound, rng);
  model.head_b = 0.0;
  model.wide_mean = Eigen::VectorXd::Zero(wide_dim);
  model.wide_scale = Eigen::VectorXd::Ones(wide_dim);
  model.deep_mean = Eigen::VectorXd::Zero(deep_dim);
  model.deep_scale = Eigen::VectorXd::Ones(deep_dim);
  return model;
}

inline std::size_t parameter_count(const WideDeepModel& model) {
  std::size_t n = static_cast<std::size_t>(model.wide_w.size());
  for (std::size_t l = 0; l < model.deep.w.size(); ++l) {
    n += static_cast<std::size_t>(model.deep.w[l].size()) +
         static_cast<std::size_t>(model.deep.b[l].size());
  }
  return n + static_cast<std::size_t>(model.head_w.size()) + 1;
}

namespace detail {

inline Eigen::VectorXd standardize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                   const Eigen::VectorXd& scale) {
  return (x - mean).cwiseQuotient(scale);
}

inline void fit_standardizer(const std::vector<FeatureRecord>& records, bool wide,
                             Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  const Eigen::Index dim = wide ? records.front().wide.size() : records.front().deep.size();
  mean = Eigen::VectorXd::Zero(dim);
  for (const FeatureRecord& r : records) mean += wide ? r.wide : r.deep;
  mean /= static_cast<double>(records.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const FeatureRecord& r : records) {
    const Eigen::VectorXd d = (wide ? r.wide : r.deep) - mean;
    var += d.cwiseProduct(d);
  }
  var /= static_cast<double>(records.size());
  scale = var.cwiseSqrt();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (scale(i) == 0.0) scale(i) = 1.0;  // constant column passes through centered
  }
}

}  // namespace detail

inline void validate_record(const WideDeepModel& model, const FeatureRecord& record) {
  if (record.wide.size() != model.wide_w.size() || record.deep.size() != model.deep.input_dim()) {
    throw validation_error("feature dimensions do not match the model");
  }
  for (Eigen::Index i = 0; i < record.wide.size(); ++i) {
    require(std::isfinite(record.wide(i)), "wide features must be finite");
  }
  for (Eigen::Index i = 0; i < record.deep.size(); ++i) {
    require(std::isfinite(record.deep(i)), "deep features must be finite");
  }
}

inline double forward(const WideDeepModel& model, const FeatureRecord& record) {
  validate_record(model, record);
  const Eigen::VectorXd xw = detail::standardize(record.wide, model.wide_mean, model.wide_scale);
  const Eigen::VectorXd xd = detail::standardize(record.deep, model.deep_mean, model.deep_scale);
  const auto acts = detail::mlp_forward(model.deep, xd);
  return model.wide_w.dot(xw) + model.head_w.dot(acts.back()) + model.head_b;
}

// Refits the standardizers to a dataset without touching the weights; used by
// callers that want scale-invariance at fixed parameters.
inline void refit_standardizers(WideDeepModel& model, const FusionDataset& dataset) {
  require(!dataset.records.empty(), "dataset must have at least one record");
  detail::fit_standardizer(dataset.records, /*wide=*/true, model.wide_mean, model.wide_scale);
  detail::fit_standardizer(dataset.records, /*wide=*/false, model.deep_mean, model.deep_scale);
}

struct FusionTrainResult {
  WideDeepModel model;
  std::vector<double> loss_history;  // full-batch MSE before each update
};

// Full-batch gradient descent on MSE. The seed is accepted for interface
// symmetry with the stochastic trainers; the full-batch path is deterministic
// and does not consume it. Zero epochs returns the model untouched.
inline FusionTrainResult train(const WideDeepModel& model, const FusionDataset& dataset,
                               int epochs, double learning_rate, std::uint64_t seed) {
  (void)seed;
  require(epochs >= 0, "epoch count must be nonnegative");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be positive");
  require(!dataset.records.empty(), "dataset must have at least one record");
  FusionTrainResult result;
  result.model = model;
  if (epochs == 0) return result;

  for (const FeatureRecord& r : dataset.records) {
    validate_record(model, r);
    require(std::isfinite(r.target), "targets must be finite");
  }
  refit_standardizers(result.model, dataset);
  const double n = static_cast<double>(dataset.records.size());

  // Standardized inputs are fixed; precompute them once.
  std::vector<Eigen::VectorXd> xw, xd;
  for (const FeatureRecord& r : dataset.records) {
    xw.push_back(detail::standardize(r.wide, result.model.wide_mean, result.model.wide_scale));
    xd.push_back(detail::standardize(r.deep, result.model.deep_mean, result.model.deep_scale));
  }

  for (int epoch = 0; epoch < epochs; ++epoch) {
    WideDeepModel& m = result.model;
    Eigen::VectorXd d_wide = Eigen::VectorXd::Zero(m.wide_w.size());
    Eigen::VectorXd d_head = Eigen::VectorXd::Zero(m.head_w.size());
    double d_bias = 0.0;
    detail::MlpGrads d_deep(m.deep);
    double loss = 0.0;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
      const auto acts = detail::mlp_forward(m.deep, xd[i]);
      const double pred = m.wide_w.dot(xw[i]) + m.head_w.dot(acts.back()) + m.head_b;
      const double err = pred - dataset.records[i].target;
      loss += err * err;
      const double d = 2.0 * err / n;
      d_wide += d * xw[i];
      d_head += d * acts.back();
      d_bias += d;
      detail::mlp_backward(m.deep, acts, d * m.head_w, d_deep);
    }
    loss /= n;
    if (!std::isfinite(loss)) {
      throw numeric_error("fusion training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(loss);

    m.wide_w -= learning_rate * d_wide;
    m.head_w -= learning_rate * d_head;
    m.head_b -= learning_rate * d_bias;
    for (std::size_t l = 0; l < m.deep.w.size(); ++l) {
      m.deep.w[l] -= learning_rate * d_deep.w[l];
      m.deep.b[l] -= learning_rate * d_deep.b[l];
    }
  }
  return result;
}

// Max relative disagreement between backprop and central differences (step
// 1e-5) over every parameter, on the squared error of one record.
inline double gradient_check(const WideDeepModel& model, const FeatureRecord& record) {
  validate_record(model, record);
  const Eigen::VectorXd xw = detail::standardize(record.wide, model.wide_mean, model.wide_scale);
  const Eigen::VectorXd xd = detail::standardize(record.deep, model.deep_mean, model.deep_scale);

  WideDeepModel probe = model;
  Eigen::VectorXd g_wide = Eigen::VectorXd::Zero(model.wide_w.size());
  Eigen::VectorXd g_head = Eigen::VectorXd::Zero(model.head_w.size());
  double g_bias = 0.0;
  detail::MlpGrads g_deep(model.deep);
  {
    const auto acts = detail::mlp_forward(model.deep, xd);
    const double pred = model.wide_w.dot(xw) + model.head_w.dot(acts.back()) + model.head_b;
    const double d = 2.0 * (pred - record.target);
    g_wide = d * xw;
    g_head = d * acts.back();
    g_bias = d;
    detail::mlp_backward(model.deep, acts, d * model.head_w, g_deep);
  }

  std::vector<double*> params;
  std::vector<double*> grads;
  for (Eigen::Index i = 0; i < probe.wide_w.size(); ++i) {
    params.push_back(probe.wide_w.data() + i);
    grads.push_back(g_wide.data() + i);
  }
  for (std::size_t l = 0; l < probe.deep.w.size(); ++l) {
    for (Eigen::Index i = 0; i < probe.deep.w[l].size(); ++i) {
      params.push_back(probe.deep.w[l].data() + i);
      grads.push_back(g_deep.w[l].data() + i);
    }
    for (Eigen::Index i = 0; i < probe.deep.b[l].size(); ++i) {
      params.push_back(probe.deep.b[l].data() + i);
      grads.push_back(g_deep.b[l].data() + i);
    }
  }
  for (Eigen::Index i = 0; i < probe.head_w.size(); ++i) {
    params.push_back(probe.head_w.data() + i);
    grads.push_back(g_head.data() + i);
  }
  params.push_back(&probe.head_b);
  grads.push_back(&g_bias);

  const double step = 1e-5;
  const auto loss_at = [&]() {
    const auto acts = detail::mlp_forward(probe.deep, xd);
    const double pred = probe.wide_w.dot(xw) + probe.head_w.dot(acts.back()) + probe.head_b;
    return (pred - record.target) * (pred - record.target);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + step;
    const double lp = loss_at();
    *params[k] = saved - step;
    const double lm = loss_at();
    *params[k] = saved;
    const double numeric = (lp - lm) / (2.0 * step);
    const double analytic = *grads[k];
    const double rel =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Dataset CSV: columns prefixed `wide:` / `deep:` plus exactly one `target`.

inline FusionDataset load_fusion_dataset(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  require(!lines.empty(), path.string() + ": empty dataset");
  const auto header = detail::split_csv_line(lines[0]);

  FusionDataset dataset;
  std::vector<int> wide_cols, deep_cols;
  int target_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("wide:", 0) == 0) {
      dataset.wide_names.push_back(h.substr(5));
      wide_cols.push_back(static_cast<int>(c));
    } else if (h.rfind("deep:", 0) == 0) {
      dataset.deep_names.push_back(h.substr(5));
      deep_cols.push_back(static_cast<int>(c));
    } else if (h == "target") {
      require(target_col < 0, path.string() + ": duplicate target column");
      target_col = static_cast<int>(c);
    } else {
      throw format_error(path.string() + ": unknown column '" + h + "'");
    }
  }
  require(!wide_cols.empty(), path.string() + ": no wide: columns");
  require(!deep_cols.empty(), path.string() + ": no deep: columns");
  require(target_col >= 0, path.string() + ": no target column");

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = detail::split_csv_line(lines[li]);
    require(fields.size() == header.size(),
            path.string() + ": row " + std::to_string(li) + " has wrong column count");
    const std::string ctx = path.string() + " row " + std::to_string(li);
    FeatureRecord record;
    record.wide.resize(static_cast<Eigen::Index>(wide_cols.size()));
    record.deep.resize(static_cast<Eigen::Index>(deep_cols.size()));
    for (std::size_t i = 0; i < wide_cols.size(); ++i) {
      record.wide(static_cast<Eigen::Index>(i)) =
          detail::parse_double(fields[static_cast<std::size_t>(wide_cols[i])], ctx);
    }
    for (std::size_t i = 0; i < deep_cols.size(); ++i) {
      record.deep(static_cast<Eigen::Index>(i)) =
          detail::parse_double(fields[static_cast<std::size_t>(deep_cols[i])], ctx);
    }
    record.target = detail::parse_double(fields[static_cast<std::size_t>(target_col)], ctx);
    dataset.records.push_back(std::move(record));
  }
  require(!dataset.records.empty(), path.string() + ": dataset has no rows");
  return dataset;
}

inline void save_fusion_dataset(const FusionDataset& dataset, const std::filesystem::path& path) {
  std::string out;
  for (const std::string& n : dataset.wide_names) out += "wide:" + n + ",";
  for (const std::string& n : dataset.deep_names) out += "deep:" + n + ",";
  out += "target\n";
  for (const FeatureRecord& r : dataset.records) {
    for (Eigen::Index i = 0; i < r.wide.size(); ++i) out += detail::format_double(r.wide(i)) + ",";
    for (Eigen::Index i = 0; i < r.deep.size(); ++i) out += detail::format_double(r.deep(i)) + ",";
    out += detail::format_double(r.target) + "\n";
  }
  detail::write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Model persistence

inline void save_wide_deep_model(const WideDeepModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "wide_deep";
  doc["wide_w"] = detail::vector_to_json(model.wide_w);
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < model.deep.w.size(); ++l) {
    layers.push_back({{"w", detail::matrix_to_json(model.deep.w[l])},
                      {"b", detail::vector_to_json(model.deep.b[l])}});
  }
  doc["deep_layers"] = layers;
  doc["head_w"] = detail::vector_to_json(model.head_w);
  doc["head_b"] = model.head_b;
  doc["wide_mean"] = detail::vector_to_json(model.wide_mean);
  doc["wide_scale"] = detail::vector_to_json(model.wide_scale);
  doc["deep_mean"] = detail::vector_to_json(model.deep_mean);
  doc["deep_scale"] = detail::vector_to_json(model.deep_scale);
  detail::write_json_file(path, doc);
}

inline WideDeepModel load_wide_deep_model(const std::filesystem::path& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  detail::require_model_header(doc, "wide_deep", path.string());
  const std::string ctx = path.string();
  WideDeepModel model;
  model.wide_w = detail::vector_from_json(doc.at("wide_w"), ctx);
  for (const auto& layer : doc.at("deep_layers")) {
    model.deep.w.push_back(detail::matrix_from_json(layer.at("w"), ctx));
    model.deep.b.push_back(detail::vector_from_json(layer.at("b"), ctx));
  }
  require(!model.deep.w.empty(), ctx + ": model has no deep layers");
  model.deep.linear_output = false;
  model.head_w = detail::vector_from_json(doc.at("head_w"), ctx);
  model.head_b = doc.at("head_b").get<double>();
  model.wide_mean = detail::vector_from_json(doc.at("wide_mean"), ctx);
  model.wide_scale = detail::vector_from_json(doc.at("wide_scale"), ctx);
  model.deep_mean = detail::vector_from_json(doc.at("deep_mean"), ctx);
  model.deep_scale = detail::vector_from_json(doc.at("deep_scale"), ctx);
  require(model.head_w.size() == model.deep.w.back().rows(), ctx + ": head size mismatch");
  return model;
}

}  // namespace cityadapt
