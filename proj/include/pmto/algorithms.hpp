#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pmto/acquisition.hpp"
#include "pmto/dataset.hpp"
#include "pmto/gp.hpp"
#include "pmto/problems.hpp"
#include "pmto/task_evolution.hpp"
#include "pmto/task_model.hpp"

namespace pmto {

struct RunConfig {
  int n_init = 200;
  int n_tot = 2000;
  int initial_tasks = 20;  // M
  double beta = 1.0;
  EaConfig ea;
  AcquisitionConfig acquisition;
  std::uint64_t seed = 0;
  int epochs_initial = 500;
  int epochs_warm = 100;
  double lr = 0.01;
  double top_p = 70.0;
  /// When set, GP hyperparameters are held fixed instead of being fitted.
  std::optional<GpHyperparams> fixed_hyperparams;

  /// Checks n_init < n_tot, M >= 1 and N_init divisible by M.
  void validate() const;
};

struct TraceRow {
  int iter = 0;  // 0 = initialization
  std::size_t task_id = 0;
  Eigen::VectorXd theta;
  Eigen::VectorXd x;
  double y = 0.0;
  double best_so_far = 0.0;  // of this task, including this row
  int cum_evals = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;

  /// Objective values of one task in evaluation order.
  std::vector<double> task_values(std::size_t task) const;
  std::size_t task_count() const;
  void write_csv(std::ostream& os) const;
};

struct RunResult {
  RunTrace trace;
  TaskPool pool;
  UnifiedDataset dataset;
  std::vector<EliteRecord> elites;
  /// Only the task-evolving algorithm builds one during the run.
  std::optional<TaskModel> task_model;
  int evaluations = 0;
};

enum class TaskSource { Evolved, Random };

/// Independent GP-UCB per task: N_init/M LHS points, then acquisitions until
/// the per-task budget N_tot/M is spent.
RunResult run_single_task_baseline(const ProblemSpec& problem,
                                   const std::vector<Eigen::VectorXd>& tasks, const RunConfig& cfg);

/// Fixed-task search with one unified GP over (x, θ).
RunResult run_pmto_ft(const ProblemSpec& problem, const std::vector<Eigen::VectorXd>& tasks,
                      const RunConfig& cfg);

/// Task-evolving search: M LHS tasks, one new task per outer iteration, and a
/// final task model trained on the top-p% elites.
RunResult run_pmto(const ProblemSpec& problem, const RunConfig& cfg, TaskSource source);

/// M Latin-hypercube task parameters in the problem's task box.
std::vector<Eigen::VectorXd> sample_tasks(const ProblemSpec& problem, int count, std::uint64_t seed);

/// Task model for algorithms that do not build one online: trained on every
/// elite of the run (no top-p filtering).
TaskModel fit_offline_task_model(const RunResult& run, const ProblemSpec& problem,
                                 const RunConfig& cfg);

struct RegretCurves {
  std::vector<std::vector<double>> instantaneous;  // per task, evaluation order
  std::vector<std::vector<double>> cumulative;
};

/// r_m(t) = f_m(x_m^(t)) - f_m*. Throws ConsistencyError when r < -1e-9.
RegretCurves compute_regret(const RunTrace& trace, const std::vector<double>& optima);

}  // namespace pmto
