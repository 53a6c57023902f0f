#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pmto/algorithms.hpp"
#include "pmto/problems.hpp"
#include "pmto/task_evolution.hpp"
#include "pmto/task_model.hpp"

namespace pmto {

inline const std::vector<double> kDefaultAlphas = {0.05, 0.25, 0.50, 0.75, 0.95};

/// Linear interpolation between closest ranks: position h = (n-1)·α on the
/// sorted values. Throws InvalidArgument on empty input or α outside [0, 1].
double quantile(std::vector<double> values, double alpha);
std::vector<double> quantiles(std::vector<double> values, const std::vector<double>& alphas);

struct EvalGrid {
  Eigen::MatrixXd thetas;  // K × D, one task parameter per row
  std::string scheme;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return thetas.rows(); }
  static EvalGrid sobol(const Box& task_bounds, Eigen::Index count, std::uint64_t seed);
};

/// 100² for two task dimensions, 10⁵ for five, 10⁴ otherwise.
Eigen::Index default_grid_size(Eigen::Index task_dim);

/// F(θ_k) = f(M(θ_k), θ_k) for every grid point.
std::vector<double> evaluate_task_model(const TaskModel& model, const ProblemSpec& problem,
                                        const EvalGrid& grid);

struct QuantileReport {
  std::vector<double> alphas;
  std::vector<std::vector<double>> per_trial;  // [u][alpha index]
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation, 0 when U = 1
  std::size_t samples = 0;  // K
  std::size_t trials() const { return per_trial.size(); }

  void write_csv(std::ostream& os, const std::string& problem, const std::string& algorithm,
                 std::uint64_t seed) const;
};

QuantileReport aggregate_trials(const std::vector<std::vector<double>>& per_trial,
                                const std::vector<double>& alphas = kDefaultAlphas,
                                std::size_t samples = 0);

// ------------------------------------------------------------------ minimax

struct MinimaxResult {
  Eigen::VectorXd design;
  double design_h = 0.0;
  RunResult inner;  // the worst-case search; its task model predicts worst errors
  int inner_evaluations = 0;
  int outer_evaluations = 0;
};

/// Generations available to an EA of population P within `budget` evaluations:
/// budget/P - 1. Throws InvalidConfig when fewer than one generation fits.
int generations_for_budget(int budget, int population);

/// The worst-case search maximizes f over the error box, so the task-evolving
/// run is applied to -f. Its task model M then drives an EA over the design
/// box minimizing h(θ) = f(M(θ), θ) on true evaluations.
MinimaxResult solve_minimax(const ProblemSpec& problem, const RunConfig& pmto_cfg,
                            const EaConfig& outer_cfg, int outer_budget);

struct NominalResult {
  Eigen::VectorXd design;
  double value = 0.0;
  int evaluations = 0;
};

/// EA minimization of f(0, θ) over the design box with the given budget.
NominalResult solve_nominal(const ProblemSpec& problem, const EaConfig& cfg, int budget);

struct RobustnessSummary {
  std::vector<Eigen::VectorXd> errors;
  std::vector<double> values;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  std::vector<double> quantiles;  // at kDefaultAlphas
};

/// f(x_j, θ) for n_errors uniform error vectors drawn from the solution box.
RobustnessSummary assess_robustness(const Eigen::VectorXd& theta, const ProblemSpec& problem,
                                    int n_errors = 800, std::uint64_t seed = 0);

}  // namespace pmto
