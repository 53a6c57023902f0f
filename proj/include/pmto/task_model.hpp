#pragma once

#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "pmto/box.hpp"
#include "pmto/dataset.hpp"
#include "pmto/gp.hpp"

namespace pmto {

/// One record per pool task holding its lowest-objective sample. Ties go to
/// the earliest evaluated sample. Throws InvalidState if a task has no samples.
std::vector<EliteRecord> build_elite_set(const UnifiedDataset& dataset, const TaskPool& pool);

/// Keeps the ⌈p/100 · M⌉ records with the lowest best_y, in their original order.
std::vector<EliteRecord> filter_top_p(const std::vector<EliteRecord>& records, double p);

struct TaskModelOptions {
  int epochs = 500;
  double lr = 0.01;
  bool optimize = true;
  /// Per-dimension starting points (e.g. the previous fit); empty means defaults.
  std::vector<GpHyperparams> warm_start;
};

/// Map from task parameters to solutions: one independent GP per solution
/// dimension, each trained on (θ_m, x*_{m,v}).
class TaskModel {
 public:
  /// Builds posteriors from given per-dimension hyperparameters (no fitting).
  static TaskModel from_hyperparams(std::vector<EliteRecord> records, Box solution_bounds,
                                    Box task_bounds, const std::vector<GpHyperparams>& hyper);

  /// Posterior means clamped to the solution box.
  Eigen::VectorXd predict_solution(const Eigen::VectorXd& theta) const;
  /// Per-dimension posteriors (diagnostics; unclamped).
  std::vector<Posterior> predict_marginals(const Eigen::VectorXd& theta) const;

  const GpModel& component(std::size_t v) const { return components_.at(v); }
  std::size_t component_count() const { return components_.size(); }
  Eigen::Index solution_dim() const { return solution_bounds_.dim(); }
  Eigen::Index task_dim() const { return task_bounds_.dim(); }
  const Box& solution_bounds() const { return solution_bounds_; }
  const Box& task_bounds() const { return task_bounds_; }
  const std::vector<EliteRecord>& trained_on() const { return records_; }
  std::vector<GpHyperparams> hyperparams() const;

  nlohmann::json to_json() const;
  static TaskModel from_json(const nlohmann::json& j);

 private:
  std::vector<GpModel> components_;
  Box solution_bounds_;
  Box task_bounds_;
  std::vector<EliteRecord> records_;
};

/// Throws InsufficientData for fewer than two records.
TaskModel fit_task_model(const std::vector<EliteRecord>& records, const Box& solution_bounds,
                         const Box& task_bounds, const TaskModelOptions& options = {});

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace pmto
