#include "pmto/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pmto {

std::vector<EliteRecord> build_elite_set(const UnifiedDataset& dataset, const TaskPool& pool) {
  std::vector<EliteRecord> out;
  out.reserve(pool.size());
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const Eigen::VectorXd& theta = pool.thetas[m];
    const EvaluatedSample* best = nullptr;
    for (const auto& s : dataset) {
      if (s.theta.size() != theta.size() || !(s.theta.array() == theta.array()).all()) continue;
      if (best == nullptr || s.y < best->y) best = &s;
    }
    if (best == nullptr) {
      throw InvalidState("build_elite_set: task " + std::to_string(m) + " has no samples");
    }
    out.push_back(EliteRecord{theta, best->x, best->y});
  }
  return out;
}

std::vector<EliteRecord> filter_top_p(const std::vector<EliteRecord>& records, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw InvalidArgument("filter_top_p: p must be in (0, 100]");
  if (records.empty()) return {};
  const std::size_t m = records.size();
  const auto keep = static_cast<std::size_t>(std::ceil(p * static_cast<double>(m) / 100.0 - 1e-9));

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].best_y < records[b].best_y;
  });
  std::vector<bool> kept(m, false);
  for (std::size_t i = 0; i < std::min(keep, m); ++i) kept[order[i]] = true;

  std::vector<EliteRecord> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < m; ++i) {
    if (kept[i]) out.push_back(records[i]);
  }
  return out;
}

namespace {

TrainingSet component_training(const std::vector<EliteRecord>& records, const Box& task_bounds,
                               Eigen::Index v) {
  TrainingSet ts(task_bounds);
  for (const auto& r : records) ts.add(r.theta, r.best_x[v]);
  return ts;
}

void check_records(const std::vector<EliteRecord>& records, const Box& solution_bounds,
                   const Box& task_bounds) {
  if (records.size() < 2) {
    throw InsufficientData("task model needs at least 2 elite records, got " +
                           std::to_string(records.size()));
  }
  for (const auto& r : records) {
    if (r.theta.size() != task_bounds.dim() || r.best_x.size() != solution_bounds.dim()) {
      throw InvalidArgument("task model: record dimensions do not match the bounds");
    }
  }
}

}  // namespace

TaskModel TaskModel::from_hyperparams(std::vector<EliteRecord> records, Box solution_bounds,
                                      Box task_bounds, const std::vector<GpHyperparams>& hyper) {
  check_records(records, solution_bounds, task_bounds);
  if (static_cast<Eigen::Index>(hyper.size()) != solution_bounds.dim()) {
    throw InvalidArgument("task model: need one hyperparameter set per solution dimension");
  }
  TaskModel tm;
  for (Eigen::Index v = 0; v < solution_bounds.dim(); ++v) {
    tm.components_.push_back(
        GpModel::fit(component_training(records, task_bounds, v), hyper[static_cast<std::size_t>(v)]));
  }
  tm.solution_bounds_ = std::move(solution_bounds);
  tm.task_bounds_ = std::move(task_bounds);
  tm.records_ = std::move(records);
  return tm;
}

TaskModel fit_task_model(const std::vector<EliteRecord>& records, const Box& solution_bounds,
                         const Box& task_bounds, const TaskModelOptions& options) {
  check_records(records, solution_bounds, task_bounds);
  const auto vdim = static_cast<std::size_t>(solution_bounds.dim());
  if (!options.warm_start.empty() && options.warm_start.size() != vdim) {
    throw InvalidArgument("task model: warm start size does not match the solution dimension");
  }
  std::vector<GpHyperparams> hyper;
  hyper.reserve(vdim);
  for (std::size_t v = 0; v < vdim; ++v) {
    GpHyperparams init = options.warm_start.empty() ? GpHyperparams::defaults(task_bounds.dim())
                                                    : options.warm_start[v];
    if (options.optimize) {
      init = fit_hyperparams(component_training(records, task_bounds, static_cast<Eigen::Index>(v)),
                             init, options.epochs, options.lr);
    }
    hyper.push_back(init);
  }
  return TaskModel::from_hyperparams(records, solution_bounds, task_bounds, hyper);
}

Eigen::VectorXd TaskModel::predict_solution(const Eigen::VectorXd& theta) const {
  if (theta.size() != task_dim()) throw InvalidArgument("predict_solution: theta dimension mismatch");
  Eigen::VectorXd x(solution_dim());
  for (std::size_t v = 0; v < components_.size(); ++v) {
    x[static_cast<Eigen::Index>(v)] = components_[v].predict(theta).mean;
  }
  return solution_bounds_.clamp(x);
}

std::vector<Posterior> TaskModel::predict_marginals(const Eigen::VectorXd& theta) const {
  if (theta.size() != task_dim()) throw InvalidArgument("predict_marginals: theta dimension mismatch");
  std::vector<Posterior> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(c.predict(theta));
  return out;
}

std::vector<GpHyperparams> TaskModel::hyperparams() const {
  std::vector<GpHyperparams> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(c.hyperparams());
  return out;
}

// ------------------------------------------------------------------ json

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

namespace {

nlohmann::json box_to_json(const Box& b) {
  return {{"lower", vector_to_json(b.lower)}, {"upper", vector_to_json(b.upper)}};
}

Box box_from_json(const nlohmann::json& j) {
  return Box(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")));
}

}  // namespace

nlohmann::json TaskModel::to_json() const {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : records_) {
    records.push_back({{"theta", vector_to_json(r.theta)},
                       {"best_x", vector_to_json(r.best_x)},
                       {"best_y", r.best_y}});
  }
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components_) {
    const auto& h = c.hyperparams();
    comps.push_back({{"lengthscales", vector_to_json(h.lengthscales)},
                     {"signal_variance", h.signal_variance},
                     {"noise_variance", h.noise_variance}});
  }
  return {{"solution_bounds", box_to_json(solution_bounds_)},
          {"task_bounds", box_to_json(task_bounds_)},
          {"records", records},
          {"components", comps}};
}

TaskModel TaskModel::from_json(const nlohmann::json& j) {
  std::vector<EliteRecord> records;
  for (const auto& r : j.at("records")) {
    records.push_back(EliteRecord{vector_from_json(r.at("theta")), vector_from_json(r.at("best_x")),
                                  r.at("best_y").get<double>()});
  }
  std::vector<GpHyperparams> hyper;
  for (const auto& c : j.at("components")) {
    GpHyperparams h;
    h.lengthscales = vector_from_json(c.at("lengthscales"));
    h.signal_variance = c.at("signal_variance").get<double>();
    h.noise_variance = c.at("noise_variance").get<double>();
    hyper.push_back(std::move(h));
  }
  return from_hyperparams(std::move(records), box_from_json(j.at("solution_bounds")),
                          box_from_json(j.at("task_bounds")), hyper);
}

}  // namespace pmto
