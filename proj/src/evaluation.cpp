#include "pmto/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "pmto/errors.hpp"
#include "pmto/random.hpp"
#include "pmto/sampling.hpp"

namespace pmto {

double quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw InvalidArgument("quantile of an empty vector");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * alpha;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> quantiles(std::vector<double> values, const std::vector<double>& alphas) {
  if (values.empty()) throw InvalidArgument("quantile of an empty vector");
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  out.reserve(alphas.size());
  for (double a : alphas) out.push_back(quantile(values, a));
  return out;
}

EvalGrid EvalGrid::sobol(const Box& task_bounds, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("grid size must be >= 1");
  return EvalGrid{sobol_points(count, task_bounds, seed), "sobol", seed};
}

Eigen::Index default_grid_size(Eigen::Index task_dim) {
  if (task_dim == 2) return 10000;
  if (task_dim == 5) return 100000;
  return 10000;
}

std::vector<double> evaluate_task_model(const TaskModel& model, const ProblemSpec& problem,
                                        const EvalGrid& grid) {
  if (model.task_dim() != problem.task_dim() || model.solution_dim() != problem.solution_dim()) {
    throw InvalidArgument("task model and problem dimensions disagree");
  }
  if (grid.thetas.cols() != problem.task_dim()) throw InvalidArgument("grid dimension mismatch");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid.size()));
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd theta = grid.thetas.row(k).transpose();
    out.push_back(problem.evaluate(model.predict_solution(theta), theta));
  }
  return out;
}

QuantileReport aggregate_trials(const std::vector<std::vector<double>>& per_trial,
                                const std::vector<double>& alphas, std::size_t samples) {
  if (per_trial.empty()) throw InvalidArgument("aggregate_trials needs at least one trial");
  QuantileReport r;
  r.alphas = alphas;
  r.per_trial = per_trial;
  r.samples = samples;
  const std::size_t u = per_trial.size();
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    double sum = 0.0;
    for (const auto& t : per_trial) {
      if (t.size() != alphas.size()) throw InvalidArgument("trial row length differs from alphas");
      sum += t[a];
    }
    const double m = sum / static_cast<double>(u);
    double ss = 0.0;
    for (const auto& t : per_trial) ss += (t[a] - m) * (t[a] - m);
    r.mean.push_back(m);
    r.std.push_back(u > 1 ? std::sqrt(ss / static_cast<double>(u - 1)) : 0.0);
  }
  return r;
}

void QuantileReport::write_csv(std::ostream& os, const std::string& problem,
                               const std::string& algorithm, std::uint64_t seed) const {
  os << "problem,algorithm,alpha,mean,std,U,K,seed\n";
  char buf[160];
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%zu,%zu,%llu\n", alphas[a], mean[a], std[a],
                  trials(), samples, static_cast<unsigned long long>(seed));
    os << problem << ',' << algorithm << buf;
  }
}

// ------------------------------------------------------------------ minimax

int generations_for_budget(int budget, int population) {
  if (population < 2) throw InvalidConfig("outer population must be >= 2");
  const int g = budget / population - 1;
  if (g < 1) {
    throw InvalidConfig("outer budget " + std::to_string(budget) +
                        " is exhausted before one EA generation (population " +
                        std::to_string(population) + ")");
  }
  return g;
}

namespace {

// EA minimizing `objective` over `bounds`; tracks the argmin over every
// evaluation, first occurrence wins.
struct TrackedMinimum {
  Eigen::VectorXd arg;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

TrackedMinimum minimize_with_ea(const std::function<double(const Eigen::VectorXd&)>& objective,
                                const Box& bounds, const EaConfig& base, int budget) {
  EaConfig cfg = base;
  cfg.generations = generations_for_budget(budget, cfg.population_size);
  TrackedMinimum best;
  auto fitness = [&](const Eigen::VectorXd& theta) {
    const double v = objective(theta);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.arg = theta;
    }
    return -v;
  };
  evolve(fitness, bounds, cfg);
  return best;
}

}  // namespace

MinimaxResult solve_minimax(const ProblemSpec& problem, const RunConfig& pmto_cfg,
                            const EaConfig& outer_cfg, int outer_budget) {
  generations_for_budget(outer_budget, outer_cfg.population_size);
  ProblemSpec worst = problem;
  worst.name = problem.name + "-worst-case";
  const Objective f = problem.evaluate;
  worst.evaluate = [f](const Eigen::VectorXd& x, const Eigen::VectorXd& theta) { return -f(x, theta); };
  worst.optimum = nullptr;

  MinimaxResult out;
  out.inner = run_pmto(worst, pmto_cfg, TaskSource::Evolved);
  out.inner_evaluations = out.inner.evaluations;
  const TaskModel& model = *out.inner.task_model;

  const auto h = [&](const Eigen::VectorXd& theta) {
    return problem.evaluate(model.predict_solution(theta), theta);
  };
  const TrackedMinimum best = minimize_with_ea(h, problem.task_bounds, outer_cfg, outer_budget);
  out.design = best.arg;
  out.design_h = best.value;
  out.outer_evaluations = best.evaluations;
  return out;
}

NominalResult solve_nominal(const ProblemSpec& problem, const EaConfig& cfg, int budget) {
  const Eigen::VectorXd zero = problem.solution_bounds.clamp(Eigen::VectorXd::Zero(problem.solution_dim()));
  const auto nominal = [&](const Eigen::VectorXd& theta) { return problem.evaluate(zero, theta); };
  const TrackedMinimum best = minimize_with_ea(nominal, problem.task_bounds, cfg, budget);
  return NominalResult{best.arg, best.value, best.evaluations};
}

RobustnessSummary assess_robustness(const Eigen::VectorXd& theta, const ProblemSpec& problem,
                                    int n_errors, std::uint64_t seed) {
  if (n_errors < 1) throw InvalidArgument("n_errors must be >= 1");
  Rng rng(seed);
  RobustnessSummary s;
  const Eigen::Index v = problem.solution_dim();
  for (int j = 0; j < n_errors; ++j) {
    Eigen::VectorXd u(v);
    for (Eigen::Index i = 0; i < v; ++i) u[i] = rng.uniform();
    Eigen::VectorXd x = problem.solution_bounds.from_unit(u);
    s.values.push_back(problem.evaluate(x, theta));
    s.errors.push_back(std::move(x));
  }
  s.min = *std::min_element(s.values.begin(), s.values.end());
  s.max = *std::max_element(s.values.begin(), s.values.end());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(n_errors);
  s.quantiles = quantiles(s.values, kDefaultAlphas);
  return s;
}

}  // namespace pmto
