#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmto/algorithms.hpp"
#include "pmto/evaluation.hpp"

namespace pmto {

inline constexpr const char* kVersion = "0.1.0";

enum class Algorithm { Baseline, PmtoFt, Pmto, PmtoRt };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct MinimaxSettings {
  int total_budget = 2000;
  double pmto_fraction = 0.7;
  EaConfig outer;  // population 20 by default; generations follow from the budget
  int robustness_errors = 800;

  MinimaxSettings() { outer.population_size = 20; }
  int inner_budget() const;
  int outer_budget() const { return total_budget - inner_budget(); }
};

struct ExperimentConfig {
  std::string problem;
  nlohmann::json problem_overrides = nlohmann::json::object();
  Algorithm algorithm = Algorithm::Pmto;
  RunConfig run;
  int trials = 1;
  Eigen::Index grid_size = 0;  // 0: default for the task dimension
  std::uint64_t grid_seed = 12345;
  MinimaxSettings minimax;

  /// Unknown keys and unresolvable names raise InvalidConfig naming the key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::uint64_t trial_seed(int u) const { return run.seed + static_cast<std::uint64_t>(u); }
};

/// Every recognised key with its default value.
nlohmann::json default_config_json();

/// Applies "a.b=value" to a config document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct TrialResult {
  RunResult run;
  TaskModel model;
  std::vector<double> grid_values;  // F(θ_k)
  std::vector<double> quantiles;    // at kDefaultAlphas
};

/// One trial of the configured algorithm with seed `seed`, scored on `grid`.
TrialResult run_trial(const ExperimentConfig& cfg, const ProblemSpec& problem, const EvalGrid& grid,
                      std::uint64_t seed);

struct ExperimentSummary {
  QuantileReport report;
  std::vector<int> evaluations;  // per trial
  double wall_seconds = 0.0;
};

/// Runs all trials and writes trace_trial{u}.csv, taskmodel_trial{u}.json,
/// trial_quantiles.csv, quantiles.csv and manifest.json into `out_dir`.
/// Refuses to overwrite existing outputs unless `force`.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 bool force);

struct MinimaxTrial {
  MinimaxResult robust;
  NominalResult nominal;
  RobustnessSummary robust_assessment;
  RobustnessSummary nominal_assessment;
};

MinimaxTrial run_minimax_trial(const ExperimentConfig& cfg, const ProblemSpec& problem,
                               std::uint64_t seed);

/// Writes robustness_trial{u}.csv (n_errors rows per design),
/// designs.csv and manifest.json.
std::vector<MinimaxTrial> run_minimax(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                      bool force);

/// Re-scores a saved task model on a fresh grid; writes grid_values.csv and
/// quantiles.csv.
QuantileReport evaluate_saved_model(const std::filesystem::path& model_path, const std::string& problem,
                                    const nlohmann::json& overrides, Eigen::Index grid_size,
                                    std::uint64_t grid_seed, const std::filesystem::path& out_dir,
                                    bool force);

}  // namespace pmto
