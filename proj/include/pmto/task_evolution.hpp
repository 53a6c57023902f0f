#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pmto/box.hpp"
#include "pmto/dataset.hpp"
#include "pmto/random.hpp"
#include "pmto/task_model.hpp"

namespace pmto {

struct EaConfig {
  int population_size = 100;
  int generations = 50;
  double eta_c = 15.0;
  double eta_m = 20.0;
  double p_c = 0.9;
  double p_m = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Diagonal jitter added to every Q_v before taking its determinant.
inline constexpr double kDiversityJitter = 1e-8;

/// Σ_v det Q_v, where Q_v is the kernel matrix of pool ∪ {θ} under the v-th
/// task-model kernel (noise-free, inputs normalized by the task bounds).
double diversity_objective(const Eigen::VectorXd& theta, const TaskPool& pool,
                           const TaskModel& model);

/// Bounded simulated binary crossover. Each variable is recombined with
/// probability 0.5 once crossover fires (probability p_c), and the two
/// children are swapped per variable with probability 0.5.
std::pair<Eigen::VectorXd, Eigen::VectorXd> sbx_crossover(const Eigen::VectorXd& parent_a,
                                                          const Eigen::VectorXd& parent_b,
                                                          const Box& bounds, double eta_c,
                                                          double p_c, Rng& rng);

/// Bounded polynomial mutation, applied per variable with probability p_m.
Eigen::VectorXd polynomial_mutation(const Eigen::VectorXd& individual, const Box& bounds,
                                    double eta_m, double p_m, Rng& rng);

struct EvolutionResult {
  Eigen::VectorXd best;
  double best_score = 0.0;
  /// Best score after initialization (index 0) and after each generation.
  std::vector<double> best_trace;
  std::size_t evaluations = 0;
};

using Fitness = std::function<double(const Eigen::VectorXd&)>;

/// Generational EA maximizing `fitness`: binary tournament, SBX, PM and
/// (μ+λ) truncation to the best P. `initial` overrides the uniform random
/// initial population when non-empty.
EvolutionResult evolve(const Fitness& fitness, const Box& bounds, const EaConfig& cfg,
                       const std::vector<Eigen::VectorXd>& initial = {});

/// Next task parameter: the EA maximizer of diversity_objective.
EvolutionResult evolve_task_detailed(const TaskPool& pool, const TaskModel& model,
                                     const Box& theta_bounds, const EaConfig& cfg,
                                     const std::vector<Eigen::VectorXd>& initial = {});

inline Eigen::VectorXd evolve_task(const TaskPool& pool, const TaskModel& model,
                                   const Box& theta_bounds, const EaConfig& cfg) {
  return evolve_task_detailed(pool, model, theta_bounds, cfg).best;
}

}  // namespace pmto
