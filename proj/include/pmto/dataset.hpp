#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace pmto {

/// One evaluated (solution, task parameter, objective) triple.
struct EvaluatedSample {
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  double y = 0.0;
  std::size_t task = 0;  // index into the task pool at evaluation time
};

using UnifiedDataset = std::vector<EvaluatedSample>;

/// The evolving set of task parameters.
struct TaskPool {
  std::vector<Eigen::VectorXd> thetas;

  std::size_t size() const { return thetas.size(); }
  bool empty() const { return thetas.empty(); }
  void add(Eigen::VectorXd theta) { thetas.push_back(std::move(theta)); }
};

/// Best evaluated solution of one task.
struct EliteRecord {
  Eigen::VectorXd theta;
  Eigen::VectorXd best_x;
  double best_y = 0.0;
};

}  // namespace pmto
