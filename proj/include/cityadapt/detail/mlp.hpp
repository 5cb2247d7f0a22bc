#pragma once

// Minimal dense MLP used by the fusion deep path and the optional neural
// regressor: tanh hidden layers, optionally a linear last layer.

#include <Eigen/Dense>
#include <vector>

#include "cityadapt/errors.hpp"
#include "cityadapt/rng.hpp"

namespace cityadapt::detail {

struct Mlp {
  std::vector<Eigen::MatrixXd> w;  // per layer, rows = layer size, cols = fan-in
  std::vector<Eigen::VectorXd> b;
  bool linear_output = false;  // skip the tanh on the last layer

  int input_dim() const { return w.empty() ? 0 : static_cast<int>(w.front().cols()); }
  int output_dim() const { return w.empty() ? 0 : static_cast<int>(w.back().rows()); }
};

// Uniform ±1/sqrt(fan_in) per layer, biases zero; draw order is row-major
// layer by layer.
inline Mlp init_mlp(int input_dim, const std::vector<int>& layer_sizes, bool linear_output,
                    SeededRng& rng) {
  require(input_dim >= 1, "mlp input dimension must be at least 1");
  require(!layer_sizes.empty(), "layer size list must be non-empty");
  Mlp mlp;
  mlp.linear_output = linear_output;
  int fan_in = input_dim;
  for (int size : layer_sizes) {
    require(size >= 1, "layer sizes must be at least 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(size, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    mlp.w.push_back(std::move(w));
    mlp.b.push_back(Eigen::VectorXd::Zero(size));
    fan_in = size;
  }
  return mlp;
}

// Activations per layer; index 0 is the input itself.
inline std::vector<Eigen::VectorXd> mlp_forward(const Mlp& mlp, const Eigen::VectorXd& x) {
  require(x.size() == mlp.input_dim(), "mlp input dimension mismatch");
  std::vector<Eigen::VectorXd> acts;
  acts.push_back(x);
  for (std::size_t l = 0; l < mlp.w.size(); ++l) {
    Eigen::VectorXd z = mlp.w[l] * acts.back() + mlp.b[l];
    const bool last = l + 1 == mlp.w.size();
    if (!(last && mlp.linear_output)) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  return acts;
}

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  explicit MlpGrads(const Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.w.size(); ++l) {
      w.push_back(Eigen::MatrixXd::Zero(mlp.w[l].rows(), mlp.w[l].cols()));
      b.push_back(Eigen::VectorXd::Zero(mlp.b[l].size()));
    }
  }
};

// Accumulates parameter gradients for upstream dL/d(output); returns
// dL/d(input).
inline Eigen::VectorXd mlp_backward(const Mlp& mlp, const std::vector<Eigen::VectorXd>& acts,
                                    Eigen::VectorXd d_out, MlpGrads& grads) {
  for (std::size_t l = mlp.w.size(); l-- > 0;) {
    const bool last = l + 1 == mlp.w.size();
    Eigen::VectorXd dz = std::move(d_out);
    if (!(last && mlp.linear_output)) {
      const Eigen::VectorXd& a = acts[l + 1];  // tanh output
      dz = dz.cwiseProduct(Eigen::VectorXd::Ones(a.size()) - a.cwiseProduct(a));
    }
    grads.w[l] += dz * acts[l].transpose();
    grads.b[l] += dz;
    d_out = mlp.w[l].transpose() * dz;
  }
  return d_out;
}

}  // namespace cityadapt::detail
