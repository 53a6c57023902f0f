#pragma once

#include <optional>

#include <Eigen/Core>

#include "pmto/box.hpp"

namespace pmto {

inline constexpr double kNoiseFloor = 1e-8;
inline constexpr double kTargetStdFloor = 1e-8;

/// RBF (squared-exponential) hyperparameters with one lengthscale per input
/// dimension. Lengthscales live in normalized [0,1] input units and variances
/// in standardized target units.
struct GpHyperparams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;

  /// ℓ = 0.5, signal variance 1, noise variance 1e-2.
  static GpHyperparams defaults(Eigen::Index dim);

  void validate(Eigen::Index dim) const;

  /// Packs [log ℓ_1..ℓ_d, log sv, log σ²].
  Eigen::VectorXd to_log() const;
  static GpHyperparams from_log(const Eigen::VectorXd& eta);
};

/// sv · exp(-½ Σ ((a_i - b_i)/ℓ_i)²).
double rbf_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& h);

struct TargetScaling {
  double mean = 0.0;
  double scale = 1.0;
};

/// Inputs are stored raw; kernels see them affinely mapped to [0,1] through the
/// box bounds. Targets are standardized with their sample mean/std unless a
/// scaling is fixed explicitly (used to compare models on a common scale).
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(Box input_bounds);

  void add(const Eigen::VectorXd& x, double y);

  Eigen::Index size() const { return targets_.size(); }
  Eigen::Index dim() const { return bounds_.dim(); }
  bool empty() const { return size() == 0; }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Box& bounds() const { return bounds_; }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const { return bounds_.to_unit(x); }
  Eigen::MatrixXd normalized_inputs() const;

  TargetScaling target_scaling() const;
  void fix_target_scaling(TargetScaling scaling) { fixed_scaling_ = scaling; }
  Eigen::VectorXd standardized_targets() const;

 private:
  Box bounds_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  std::optional<TargetScaling> fixed_scaling_;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

struct LmlResult {
  double value = 0.0;
  /// d LML / d [log ℓ..., log sv, log σ²]
  Eigen::VectorXd gradient;
};

/// Exact GP posterior with a cached Cholesky factor of K + (σ² + jitter) I.
/// Immutable once built; prediction is const and thread-safe.
class GpModel {
 public:
  /// Throws NumericalFailure if Cholesky fails at the largest jitter.
  static GpModel fit(TrainingSet training, const GpHyperparams& h);

  /// A data-free model: predictions return the prior.
  static GpModel prior(Box bounds, const GpHyperparams& h, TargetScaling scaling = {});

  Posterior predict(const Eigen::VectorXd& query) const;

  /// Batched prediction over the rows of `queries` (raw input units).
  void predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean,
                     Eigen::VectorXd& variance) const;

  LmlResult log_marginal_likelihood() const;

  /// Kernel value between two inputs given in raw units.
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  /// Kernel value between two inputs already mapped to [0,1].
  double kernel_unit(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return rbf_kernel(a, b, hyper_);
  }

  const GpHyperparams& hyperparams() const { return hyper_; }
  const TrainingSet& training() const { return training_; }
  const TargetScaling& scaling() const { return scaling_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  Eigen::Index dim() const { return training_.dim(); }

 private:
  GpModel() = default;

  GpHyperparams hyper_;
  TrainingSet training_;
  TargetScaling scaling_;
  Eigen::MatrixXd unit_inputs_;
  Eigen::VectorXd y_std_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

inline GpModel fit_posterior(TrainingSet training, const GpHyperparams& h) {
  return GpModel::fit(std::move(training), h);
}

/// Adam ascent on the log marginal likelihood over log-hyperparameters.
/// Returns the best iterate seen, so LML(result) >= LML(init).
GpHyperparams fit_hyperparams(const TrainingSet& training, const GpHyperparams& init, int epochs,
                              double lr);

/// ½ log|I + σ⁻² K_cond| for the samples of `target_task`, where K_cond is the
/// Schur complement of the target block after conditioning on every other
/// task's samples. Task parameters are the trailing target_task.size() input
/// coordinates and are matched exactly.
double conditional_information_gain(const TrainingSet& full, const Eigen::VectorXd& target_task,
                                    const GpHyperparams& h);

/// Same quantity for a GP that only ever sees the target task's samples.
double independent_information_gain(const TrainingSet& full, const Eigen::VectorXd& target_task,
                                    const GpHyperparams& h);

}  // namespace pmto
