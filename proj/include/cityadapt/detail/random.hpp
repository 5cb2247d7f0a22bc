#pragma once

// Deterministic Eigen fills from a SeededRng; draw order is row-major.

#include <Eigen/Dense>

#include "cityadapt/rng.hpp"

namespace cityadapt::detail {

inline Eigen::VectorXd random_vector(Eigen::Index n, double bound, SeededRng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-bound, bound);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, double bound, SeededRng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace cityadapt::detail
