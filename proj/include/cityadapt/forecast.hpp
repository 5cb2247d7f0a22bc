#pragma once

// Indicator forecasting with two model families: polynomial least squares on
// normalized time, and a scalar LSTM trained one-step-ahead on sliding
// windows. Both carry their normalization so predictions come out in original
// units, and both train deterministically for a given seed.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cityadapt/detail/jsonio.hpp"
#include "cityadapt/detail/random.hpp"
#include "cityadapt/errors.hpp"
#include "cityadapt/rng.hpp"

namespace cityadapt {

struct PolyModel {
  int degree = 0;
  double t_mean = 0.0;
  double t_scale = 1.0;             // max(1, population stdev of training times)
  std::vector<double> coefficients; // c_0..c_degree on normalized time
};

struct LSTMModel {
  int hidden_size = 0;
  // Gate weights: input column, recurrent matrix, bias. Candidate gate is `c`.
  Eigen::VectorXd w_i, w_f, w_o, w_c;  // H x 1 input weights
  Eigen::MatrixXd u_i, u_f, u_o, u_c;  // H x H recurrent weights
  Eigen::VectorXd b_i, b_f, b_o, b_c;  // H biases
  Eigen::VectorXd head_w;              // H head weights
  double head_b = 0.0;
  double v_mean = 0.0;  // value normalization of the training series
  double v_scale = 1.0;
};

struct TrainConfig {
  int window = 4;
  int hidden_size = 8;
  int epochs = 200;
  double learning_rate = 0.05;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

inline void validate_train_config(const TrainConfig& config) {
  require(config.window >= 1, "window length must be at least 1");
  require(config.hidden_size >= 1, "hidden size must be at least 1");
  require(config.epochs >= 1, "epoch count must be at least 1");
  require(config.learning_rate > 0.0 && std::isfinite(config.learning_rate),
          "learning rate must be positive");
  require(config.clip_norm > 0.0 && std::isfinite(config.clip_norm),
          "gradient clip norm must be positive");
}

// ---------------------------------------------------------------------------
// Polynomial family

namespace detail {

inline void normalization_of(const std::vector<double>& t, double& mean, double& scale) {
  double sum = 0.0;
  for (double v : t) sum += v;
  mean = t.empty() ? 0.0 : sum / static_cast<double>(t.size());
  double ss = 0.0;
  for (double v : t) ss += (v - mean) * (v - mean);
  const double stdev = t.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(t.size()));
  scale = std::max(1.0, stdev);
}

}  // namespace detail

inline PolyModel fit_poly(const std::vector<double>& times, const std::vector<double>& values,
                          int degree) {
  require(degree >= 0, "polynomial degree must be nonnegative");
  require(times.size() == values.size(), "times and values must have equal length");
  require(times.size() >= static_cast<std::size_t>(degree) + 1,
          "need at least degree+1 points to fit");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && std::isfinite(values[i]),
            "series points must be finite");
    for (std::size_t j = i + 1; j < times.size(); ++j) {
      require(times[i] != times[j], "timestamps must be distinct");
    }
  }

  PolyModel model;
  model.degree = degree;
  detail::normalization_of(times, model.t_mean, model.t_scale);

  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double x = (times[static_cast<std::size_t>(r)] - model.t_mean) / model.t_scale;
    double p = 1.0;
    for (int c = 0; c <= degree; ++c) {
      design(r, c) = p;
      p *= x;
    }
    target(r) = values[static_cast<std::size_t>(r)];
  }
  const auto qr = design.colPivHouseholderQr();
  if (qr.rank() < degree + 1) {
    throw numeric_error("rank-deficient fit at degree " + std::to_string(degree));
  }
  const Eigen::VectorXd coef = qr.solve(target);
  model.coefficients.assign(coef.data(), coef.data() + coef.size());
  return model;
}

inline double predict_poly(const PolyModel& model, double t) {
  require(!model.coefficients.empty(), "model has no coefficients");
  const double x = (t - model.t_mean) / model.t_scale;
  double acc = 0.0;
  for (auto it = model.coefficients.rbegin(); it != model.coefficients.rend(); ++it) {
    acc = acc * x + *it;  // Horner
  }
  return acc;
}

// ---------------------------------------------------------------------------
// LSTM family

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LstmTrace {
  // Per-step activations, index 0 is the first window step.
  std::vector<Eigen::VectorXd> i, f, o, g, c, h, tanh_c;
  double prediction = 0.0;  // head output after the last step
};

// Forward pass over one window of already-normalized inputs.
inline LstmTrace lstm_forward(const LSTMModel& m, const std::vector<double>& window) {
  const auto H = static_cast<Eigen::Index>(m.hidden_size);
  LstmTrace trace;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  for (double x : window) {
    const Eigen::VectorXd zi = m.w_i * x + m.u_i * h + m.b_i;
    const Eigen::VectorXd zf = m.w_f * x + m.u_f * h + m.b_f;
    const Eigen::VectorXd zo = m.w_o * x + m.u_o * h + m.b_o;
    const Eigen::VectorXd zg = m.w_c * x + m.u_c * h + m.b_c;
    Eigen::VectorXd gi = zi.unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd gf = zf.unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd go = zo.unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd gg = zg.array().tanh();
    c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
    Eigen::VectorXd tc = c.array().tanh();
    h = go.cwiseProduct(tc);
    trace.i.push_back(std::move(gi));
    trace.f.push_back(std::move(gf));
    trace.o.push_back(std::move(go));
    trace.g.push_back(std::move(gg));
    trace.c.push_back(c);
    trace.tanh_c.push_back(std::move(tc));
    trace.h.push_back(h);
  }
  trace.prediction = m.head_w.dot(h) + m.head_b;
  return trace;
}

struct LstmGrads {
  Eigen::VectorXd w_i, w_f, w_o, w_c;
  Eigen::MatrixXd u_i, u_f, u_o, u_c;
  Eigen::VectorXd b_i, b_f, b_o, b_c;
  Eigen::VectorXd head_w;
  double head_b = 0.0;

  explicit LstmGrads(Eigen::Index H)
      : w_i(Eigen::VectorXd::Zero(H)), w_f(Eigen::VectorXd::Zero(H)),
        w_o(Eigen::VectorXd::Zero(H)), w_c(Eigen::VectorXd::Zero(H)),
        u_i(Eigen::MatrixXd::Zero(H, H)), u_f(Eigen::MatrixXd::Zero(H, H)),
        u_o(Eigen::MatrixXd::Zero(H, H)), u_c(Eigen::MatrixXd::Zero(H, H)),
        b_i(Eigen::VectorXd::Zero(H)), b_f(Eigen::VectorXd::Zero(H)),
        b_o(Eigen::VectorXd::Zero(H)), b_c(Eigen::VectorXd::Zero(H)),
        head_w(Eigen::VectorXd::Zero(H)) {}

  double squared_norm() const {
    return w_i.squaredNorm() + w_f.squaredNorm() + w_o.squaredNorm() + w_c.squaredNorm() +
           u_i.squaredNorm() + u_f.squaredNorm() + u_o.squaredNorm() + u_c.squaredNorm() +
           b_i.squaredNorm() + b_f.squaredNorm() + b_o.squaredNorm() + b_c.squaredNorm() +
           head_w.squaredNorm() + head_b * head_b;
  }

  void scale(double s) {
    w_i *= s; w_f *= s; w_o *= s; w_c *= s;
    u_i *= s; u_f *= s; u_o *= s; u_c *= s;
    b_i *= s; b_f *= s; b_o *= s; b_c *= s;
    head_w *= s; head_b *= s;
  }
};

// Backpropagation through time for one window sample. `upstream` is dL/dy at
// the head output; gradients accumulate into `grads`.
inline void lstm_backward(const LSTMModel& m, const std::vector<double>& window,
                          const LstmTrace& trace, double upstream, LstmGrads& grads) {
  const auto H = static_cast<Eigen::Index>(m.hidden_size);
  const auto steps = static_cast<int>(window.size());
  grads.head_w += upstream * trace.h.back();
  grads.head_b += upstream;

  Eigen::VectorXd dh = upstream * m.head_w;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  for (int t = steps - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Eigen::VectorXd& gi = trace.i[ts];
    const Eigen::VectorXd& gf = trace.f[ts];
    const Eigen::VectorXd& go = trace.o[ts];
    const Eigen::VectorXd& gg = trace.g[ts];
    const Eigen::VectorXd& tc = trace.tanh_c[ts];
    const Eigen::VectorXd c_prev =
        t == 0 ? Eigen::VectorXd::Zero(H) : trace.c[ts - 1];
    const Eigen::VectorXd h_prev =
        t == 0 ? Eigen::VectorXd::Zero(H) : trace.h[ts - 1];

    const Eigen::VectorXd dzo =
        dh.cwiseProduct(tc).cwiseProduct(go).cwiseProduct(Eigen::VectorXd::Ones(H) - go);
    dc += dh.cwiseProduct(go).cwiseProduct(Eigen::VectorXd::Ones(H) - tc.cwiseProduct(tc));
    const Eigen::VectorXd dzi =
        dc.cwiseProduct(gg).cwiseProduct(gi).cwiseProduct(Eigen::VectorXd::Ones(H) - gi);
    const Eigen::VectorXd dzf =
        dc.cwiseProduct(c_prev).cwiseProduct(gf).cwiseProduct(Eigen::VectorXd::Ones(H) - gf);
    const Eigen::VectorXd dzg =
        dc.cwiseProduct(gi).cwiseProduct(Eigen::VectorXd::Ones(H) - gg.cwiseProduct(gg));

    const double x = window[ts];
    grads.w_i += dzi * x; grads.w_f += dzf * x; grads.w_o += dzo * x; grads.w_c += dzg * x;
    grads.u_i += dzi * h_prev.transpose();
    grads.u_f += dzf * h_prev.transpose();
    grads.u_o += dzo * h_prev.transpose();
    grads.u_c += dzg * h_prev.transpose();
    grads.b_i += dzi; grads.b_f += dzf; grads.b_o += dzo; grads.b_c += dzg;

    dh = m.u_i.transpose() * dzi + m.u_f.transpose() * dzf + m.u_o.transpose() * dzo +
         m.u_c.transpose() * dzg;
    dc = dc.cwiseProduct(gf);
  }
}

}  // namespace detail

// Weights uniform in ±1/sqrt(H); forget-gate bias 1 so memory starts open,
// all other biases 0. Draw order is fixed: (w,u) per gate i,f,o,c, then head.
inline LSTMModel init_lstm(int hidden_size, SeededRng& rng) {
  require(hidden_size >= 1, "hidden size must be at least 1");
  const auto H = static_cast<Eigen::Index>(hidden_size);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  LSTMModel m;
  m.hidden_size = hidden_size;
  m.w_i = detail::random_vector(H, bound, rng);
  m.u_i = detail::random_matrix(H, H, bound, rng);
  m.w_f = detail::random_vector(H, bound, rng);
  m.u_f = detail::random_matrix(H, H, bound, rng);
  m.w_o = detail::random_vector(H, bound, rng);
  m.u_o = detail::random_matrix(H, H, bound, rng);
  m.w_c = detail::random_vector(H, bound, rng);
  m.u_c = detail::random_matrix(H, H, bound, rng);
  m.b_i = Eigen::VectorXd::Zero(H);
  m.b_f = Eigen::VectorXd::Ones(H);
  m.b_o = Eigen::VectorXd::Zero(H);
  m.b_c = Eigen::VectorXd::Zero(H);
  m.head_w = detail::random_vector(H, bound, rng);
  m.head_b = 0.0;
  return m;
}

// One-step prediction from a raw-unit window.
inline double lstm_predict_next(const LSTMModel& model, const std::vector<double>& window) {
  require(!window.empty(), "prediction window must be non-empty");
  std::vector<double> normalized(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    normalized[i] = (window[i] - model.v_mean) / model.v_scale;
  }
  const detail::LstmTrace trace = detail::lstm_forward(model, normalized);
  return trace.prediction * model.v_scale + model.v_mean;
}

struct LstmTrainResult {
  LSTMModel model;
  std::vector<double> loss_history;  // full-batch MSE before each update
};

// Full-batch gradient descent with global-norm clipping over all sliding
// windows of the series. Values are normalized internally; the normalization
// rides along in the model.
inline LstmTrainResult train_lstm(const std::vector<double>& values, const TrainConfig& config) {
  validate_train_config(config);
  require(values.size() > static_cast<std::size_t>(config.window),
          "series must be longer than the window");
  for (double v : values) require(std::isfinite(v), "series values must be finite");

  LstmTrainResult result;
  SeededRng rng(config.seed);
  result.model = init_lstm(config.hidden_size, rng);
  detail::normalization_of(values, result.model.v_mean, result.model.v_scale);
  // normalization_of floors the scale at 1 for time axes; for values we want
  // plain stdev with a zero guard instead.
  {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double stdev = std::sqrt(ss / static_cast<double>(values.size()));
    result.model.v_mean = mean;
    result.model.v_scale = stdev > 0.0 ? stdev : 1.0;
  }

  std::vector<double> norm(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    norm[i] = (values[i] - result.model.v_mean) / result.model.v_scale;
  }
  const auto w = static_cast<std::size_t>(config.window);
  const std::size_t samples = norm.size() - w;
  const auto H = static_cast<Eigen::Index>(config.hidden_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    detail::LstmGrads grads(H);
    double loss = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const std::vector<double> window(norm.begin() + static_cast<std::ptrdiff_t>(s),
                                       norm.begin() + static_cast<std::ptrdiff_t>(s + w));
      const double target = norm[s + w];
      const detail::LstmTrace trace = detail::lstm_forward(result.model, window);
      const double err = trace.prediction - target;
      loss += err * err;
      detail::lstm_backward(result.model, window, trace,
                            2.0 * err / static_cast<double>(samples), grads);
    }
    loss /= static_cast<double>(samples);
    if (!std::isfinite(loss)) {
      throw numeric_error("lstm training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(loss);

    const double norm2 = grads.squared_norm();
    if (norm2 > config.clip_norm * config.clip_norm) {
      grads.scale(config.clip_norm / std::sqrt(norm2));
    }
    const double lr = config.learning_rate;
    result.model.w_i -= lr * grads.w_i; result.model.u_i -= lr * grads.u_i;
    result.model.w_f -= lr * grads.w_f; result.model.u_f -= lr * grads.u_f;
    result.model.w_o -= lr * grads.w_o; result.model.u_o -= lr * grads.u_o;
    result.model.w_c -= lr * grads.w_c; result.model.u_c -= lr * grads.u_c;
    result.model.b_i -= lr * grads.b_i; result.model.b_f -= lr * grads.b_f;
    result.model.b_o -= lr * grads.b_o; result.model.b_c -= lr * grads.b_c;
    result.model.head_w -= lr * grads.head_w;
    result.model.head_b -= lr * grads.head_b;
  }
  return result;
}

// Max relative disagreement between BPTT and central differences (step 1e-5)
// over every parameter, on the squared error of one window/target sample.
// The sample is taken as-is (no normalization), so the check exercises the
// core gradients directly.
inline double gradient_check(const LSTMModel& model, const std::vector<double>& window,
                             double target) {
  require(!window.empty(), "gradient check needs a non-empty window");
  const auto H = static_cast<Eigen::Index>(model.hidden_size);

  detail::LstmGrads analytic(H);
  {
    const detail::LstmTrace trace = detail::lstm_forward(model, window);
    detail::lstm_backward(model, window, trace, 2.0 * (trace.prediction - target), analytic);
  }

  LSTMModel probe = model;
  std::vector<double*> params;
  std::vector<double*> grads;
  const auto add = [&](Eigen::VectorXd& p, Eigen::VectorXd& g) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      params.push_back(p.data() + i);
      grads.push_back(g.data() + i);
    }
  };
  const auto add_m = [&](Eigen::MatrixXd& p, Eigen::MatrixXd& g) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      params.push_back(p.data() + i);
      grads.push_back(g.data() + i);
    }
  };
  add(probe.w_i, analytic.w_i); add_m(probe.u_i, analytic.u_i); add(probe.b_i, analytic.b_i);
  add(probe.w_f, analytic.w_f); add_m(probe.u_f, analytic.u_f); add(probe.b_f, analytic.b_f);
  add(probe.w_o, analytic.w_o); add_m(probe.u_o, analytic.u_o); add(probe.b_o, analytic.b_o);
  add(probe.w_c, analytic.w_c); add_m(probe.u_c, analytic.u_c); add(probe.b_c, analytic.b_c);
  add(probe.head_w, analytic.head_w);
  params.push_back(&probe.head_b);
  grads.push_back(&analytic.head_b);

  const double step = 1e-5;
  double worst = 0.0;
  const auto loss_at = [&]() {
    const double err = detail::lstm_forward(probe, window).prediction - target;
    return err * err;
  };
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + step;
    const double lp = loss_at();
    *params[k] = saved - step;
    const double lm = loss_at();
    *params[k] = saved;
    const double numeric = (lp - lm) / (2.0 * step);
    const double analytic_g = *grads[k];
    const double rel =
        std::abs(analytic_g - numeric) / std::max(1e-8, std::abs(analytic_g) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Forecast roll-out

struct ForecastResult {
  std::vector<double> times;
  std::vector<double> values;
};

namespace detail {

inline double mean_spacing(const std::vector<double>& times) {
  if (times.size() < 2) return 1.0;
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

}  // namespace detail

// Polynomial forecast: direct evaluation at future timestamps continuing the
// training cadence (mean spacing).
inline ForecastResult forecast(const PolyModel& model, const std::vector<double>& times,
                               int horizon) {
  require(horizon >= 1, "forecast horizon must be at least 1");
  require(!times.empty(), "series must be non-empty");
  const double dt = detail::mean_spacing(times);
  ForecastResult out;
  for (int k = 1; k <= horizon; ++k) {
    const double t = times.back() + dt * k;
    out.times.push_back(t);
    out.values.push_back(predict_poly(model, t));
  }
  return out;
}

// LSTM forecast: iterative roll-out feeding the model its own predictions.
inline ForecastResult forecast(const LSTMModel& model, const std::vector<double>& times,
                               const std::vector<double>& values, int window, int horizon) {
  require(horizon >= 1, "forecast horizon must be at least 1");
  require(window >= 1, "window length must be at least 1");
  require(values.size() >= static_cast<std::size_t>(window),
          "series shorter than the window");
  require(times.size() == values.size(), "times and values must have equal length");
  const double dt = detail::mean_spacing(times);

  std::vector<double> tail(values.end() - window, values.end());
  ForecastResult out;
  for (int k = 1; k <= horizon; ++k) {
    const double next = lstm_predict_next(model, tail);
    out.times.push_back(times.back() + dt * k);
    out.values.push_back(next);
    tail.erase(tail.begin());
    tail.push_back(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Held-out comparison of the two families

struct ModelComparison {
  double poly_holdout_mse = 0.0;
  double lstm_holdout_mse = 0.0;
  double poly_holdout_nrmse = 0.0;  // RMSE / stdev of held-out targets (0 stdev -> RMSE)
  double lstm_holdout_nrmse = 0.0;
  int holdout = 0;
};

// Trains both families on the series minus its last `holdout` points and
// reports held-out errors; no automatic winner is declared. Optional additive
// Gaussian-ish noise (uniform, matched variance) perturbs the training values
// to probe robustness.
inline ModelComparison compare_models(const std::vector<double>& times,
                                      const std::vector<double>& values, int poly_degree,
                                      const TrainConfig& lstm_config, int holdout,
                                      double noise_scale = 0.0) {
  require(holdout >= 1, "holdout must be at least 1");
  require(times.size() == values.size(), "times and values must have equal length");
  require(values.size() > static_cast<std::size_t>(holdout) + 1,
          "series too short for the requested holdout");
  const std::size_t n_train = values.size() - static_cast<std::size_t>(holdout);
  std::vector<double> train_t(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<double> train_v(values.begin(),
                              values.begin() + static_cast<std::ptrdiff_t>(n_train));
  if (noise_scale > 0.0) {
    SeededRng noise_rng(lstm_config.seed ^ 0x9e3779b97f4a7c15ull);
    for (double& v : train_v) v += noise_rng.uniform(-noise_scale, noise_scale);
  }

  ModelComparison cmp;
  cmp.holdout = holdout;

  const PolyModel poly = fit_poly(train_t, train_v, poly_degree);
  const ForecastResult poly_fc = forecast(poly, train_t, holdout);

  const LstmTrainResult lstm = train_lstm(train_v, lstm_config);
  const ForecastResult lstm_fc =
      forecast(lstm.model, train_t, train_v, lstm_config.window, holdout);

  double target_mean = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(holdout); ++k) {
    target_mean += values[n_train + k];
  }
  target_mean /= static_cast<double>(holdout);
  double target_ss = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(holdout); ++k) {
    const double d = values[n_train + k] - target_mean;
    target_ss += d * d;
  }
  const double target_stdev = std::sqrt(target_ss / static_cast<double>(holdout));

  for (std::size_t k = 0; k < static_cast<std::size_t>(holdout); ++k) {
    const double truth = values[n_train + k];
    cmp.poly_holdout_mse += (poly_fc.values[k] - truth) * (poly_fc.values[k] - truth);
    cmp.lstm_holdout_mse += (lstm_fc.values[k] - truth) * (lstm_fc.values[k] - truth);
  }
  cmp.poly_holdout_mse /= static_cast<double>(holdout);
  cmp.lstm_holdout_mse /= static_cast<double>(holdout);
  const double denom = target_stdev > 0.0 ? target_stdev : 1.0;
  cmp.poly_holdout_nrmse = std::sqrt(cmp.poly_holdout_mse) / denom;
  cmp.lstm_holdout_nrmse = std::sqrt(cmp.lstm_holdout_mse) / denom;
  return cmp;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_poly_model(const PolyModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "poly";
  doc["degree"] = model.degree;
  doc["t_mean"] = model.t_mean;
  doc["t_scale"] = model.t_scale;
  doc["coefficients"] = model.coefficients;
  detail::write_json_file(path, doc);
}

inline PolyModel load_poly_model(const std::filesystem::path& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  detail::require_model_header(doc, "poly", path.string());
  PolyModel model;
  model.degree = doc.at("degree").get<int>();
  model.t_mean = doc.at("t_mean").get<double>();
  model.t_scale = doc.at("t_scale").get<double>();
  model.coefficients = doc.at("coefficients").get<std::vector<double>>();
  require(model.coefficients.size() == static_cast<std::size_t>(model.degree) + 1,
          path.string() + ": coefficient count does not match degree");
  require(model.t_scale > 0.0, path.string() + ": t_scale must be positive");
  return model;
}

inline void save_lstm_model(const LSTMModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["model_kind"] = "lstm";
  doc["hidden_size"] = model.hidden_size;
  doc["v_mean"] = model.v_mean;
  doc["v_scale"] = model.v_scale;
  doc["w_i"] = detail::vector_to_json(model.w_i);
  doc["w_f"] = detail::vector_to_json(model.w_f);
  doc["w_o"] = detail::vector_to_json(model.w_o);
  doc["w_c"] = detail::vector_to_json(model.w_c);
  doc["u_i"] = detail::matrix_to_json(model.u_i);
  doc["u_f"] = detail::matrix_to_json(model.u_f);
  doc["u_o"] = detail::matrix_to_json(model.u_o);
  doc["u_c"] = detail::matrix_to_json(model.u_c);
  doc["b_i"] = detail::vector_to_json(model.b_i);
  doc["b_f"] = detail::vector_to_json(model.b_f);
  doc["b_o"] = detail::vector_to_json(model.b_o);
  doc["b_c"] = detail::vector_to_json(model.b_c);
  doc["head_w"] = detail::vector_to_json(model.head_w);
  doc["head_b"] = model.head_b;
  detail::write_json_file(path, doc);
}

inline LSTMModel load_lstm_model(const std::filesystem::path& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  detail::require_model_header(doc, "lstm", path.string());
  LSTMModel m;
  m.hidden_size = doc.at("hidden_size").get<int>();
  require(m.hidden_size >= 1, path.string() + ": hidden size must be at least 1");
  m.v_mean = doc.at("v_mean").get<double>();
  m.v_scale = doc.at("v_scale").get<double>();
  const std::string ctx = path.string();
  m.w_i = detail::vector_from_json(doc.at("w_i"), ctx);
  m.w_f = detail::vector_from_json(doc.at("w_f"), ctx);
  m.w_o = detail::vector_from_json(doc.at("w_o"), ctx);
  m.w_c = detail::vector_from_json(doc.at("w_c"), ctx);
  m.u_i = detail::matrix_from_json(doc.at("u_i"), ctx);
  m.u_f = detail::matrix_from_json(doc.at("u_f"), ctx);
  m.u_o = detail::matrix_from_json(doc.at("u_o"), ctx);
  m.u_c = detail::matrix_from_json(doc.at("u_c"), ctx);
  m.b_i = detail::vector_from_json(doc.at("b_i"), ctx);
  m.b_f = detail::vector_from_json(doc.at("b_f"), ctx);
  m.b_o = detail::vector_from_json(doc.at("b_o"), ctx);
  m.b_c = detail::vector_from_json(doc.at("b_c"), ctx);
  m.head_w = detail::vector_from_json(doc.at("head_w"), ctx);
  m.head_b = doc.at("head_b").get<double>();
  const auto H = static_cast<Eigen::Index>(m.hidden_size);
  require(m.w_i.size() == H && m.u_i.rows() == H && m.u_i.cols() == H && m.b_i.size() == H &&
              m.head_w.size() == H,
          ctx + ": parameter shapes do not match hidden size");
  return m;
}

}  // namespace cityadapt
