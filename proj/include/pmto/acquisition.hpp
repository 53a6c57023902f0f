#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "pmto/box.hpp"
#include "pmto/gp.hpp"

namespace pmto {

struct AcquisitionConfig {
  double beta = 1.0;
  int candidate_count = 1024;
  int refine_steps = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

/// UCB in the minimization convention: -μ + β·σ. Higher is better.
/// With a task parameter the model input is the concatenation (x, θ).
double ucb_score(const GpModel& model, const Eigen::VectorXd& x,
                 const std::optional<Eigen::VectorXd>& theta, double beta);

/// Scores `candidate_count` shifted Sobol points in the box, keeps the first
/// best one, then runs `refine_steps` sweeps of coordinate-wise golden-section
/// search around it. Only improving moves are accepted.
Eigen::VectorXd maximize_ucb(const GpModel& model, const std::optional<Eigen::VectorXd>& theta,
                             const Box& bounds, const AcquisitionConfig& cfg);

}  // namespace pmto
