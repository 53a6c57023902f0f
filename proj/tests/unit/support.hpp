#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "pmto/gp.hpp"
#include "pmto/random.hpp"

namespace pmto::testing {

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = 0.0, double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline TrainingSet random_training(Rng& rng, Eigen::Index n, Eigen::Index d) {
  TrainingSet ts(Box::unit(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = random_vector(rng, d);
    ts.add(x, std::sin(3.0 * x.sum()) + 0.1 * rng.normal());
  }
  return ts;
}

inline GpHyperparams random_hyperparams(Rng& rng, Eigen::Index d) {
  GpHyperparams h;
  h.lengthscales = random_vector(rng, d, 0.2, 1.5);
  h.signal_variance = rng.uniform(0.5, 2.0);
  h.noise_variance = rng.uniform(1e-3, 1e-1);
  return h;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace pmto::testing
