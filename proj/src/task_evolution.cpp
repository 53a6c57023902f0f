#include "pmto/task_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace pmto {

void EaConfig::validate() const {
  if (population_size < 2) throw InvalidArgument("EaConfig: population_size must be >= 2");
  if (generations < 1) throw InvalidArgument("EaConfig: generations must be >= 1");
  if (!(eta_c > 0.0) || !(eta_m > 0.0)) throw InvalidArgument("EaConfig: indices must be > 0");
  if (!(p_c >= 0.0 && p_c <= 1.0) || !(p_m >= 0.0 && p_m <= 1.0)) {
    throw InvalidArgument("EaConfig: probabilities must be in [0, 1]");
  }
}

// ------------------------------------------------------------------ objective

namespace {

double determinant(const Eigen::MatrixXd& q) {
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() == Eigen::Success) {
    const double d = Eigen::MatrixXd(llt.matrixL()).diagonal().prod();
    return d * d;
  }
  return q.partialPivLu().determinant();
}

// Pool block per component is fixed during one EA run; only the candidate's
// row and column change between evaluations.
class DiversityScorer {
 public:
  DiversityScorer(const TaskPool& pool, const TaskModel& model) : model_(model) {
    const Box& tb = model.task_bounds();
    for (const auto& t : pool.thetas) {
      if (t.size() != tb.dim()) throw InvalidArgument("diversity_objective: pool dimension mismatch");
      unit_pool_.push_back(tb.to_unit(t));
    }
    const auto m = static_cast<Eigen::Index>(unit_pool_.size());
    for (std::size_t v = 0; v < model.component_count(); ++v) {
      Eigen::MatrixXd q(m + 1, m + 1);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          q(i, j) = q(j, i) = model.component(v).kernel_unit(unit_pool_[static_cast<std::size_t>(i)],
                                                             unit_pool_[static_cast<std::size_t>(j)]);
        }
        q(i, i) += kDiversityJitter;
      }
      blocks_.push_back(std::move(q));
    }
  }

  double operator()(const Eigen::VectorXd& theta) {
    const Box& tb = model_.task_bounds();
    if (theta.size() != tb.dim()) throw InvalidArgument("diversity_objective: theta dimension mismatch");
    const Eigen::VectorXd u = tb.to_unit(theta);
    const auto m = static_cast<Eigen::Index>(unit_pool_.size());
    double total = 0.0;
    for (std::size_t v = 0; v < blocks_.size(); ++v) {
      Eigen::MatrixXd& q = blocks_[v];
      const GpModel& c = model_.component(v);
      for (Eigen::Index i = 0; i < m; ++i) {
        q(i, m) = q(m, i) = c.kernel_unit(unit_pool_[static_cast<std::size_t>(i)], u);
      }
      q(m, m) = c.kernel_unit(u, u) + kDiversityJitter;
      total += determinant(q);
    }
    return total;
  }

 private:
  const TaskModel& model_;
  std::vector<Eigen::VectorXd> unit_pool_;
  std::vector<Eigen::MatrixXd> blocks_;
};

}  // namespace

double diversity_objective(const Eigen::VectorXd& theta, const TaskPool& pool,
                           const TaskModel& model) {
  DiversityScorer scorer(pool, model);
  return scorer(theta);
}

// ------------------------------------------------------------------ operators

std::pair<Eigen::VectorXd, Eigen::VectorXd> sbx_crossover(const Eigen::VectorXd& parent_a,
                                                          const Eigen::VectorXd& parent_b,
                                                          const Box& bounds, double eta_c,
                                                          double p_c, Rng& rng) {
  Eigen::VectorXd ca = parent_a, cb = parent_b;
  if (rng.uniform() >= p_c) return {ca, cb};
  constexpr double kEps = 1e-14;
  const double expo = 1.0 / (eta_c + 1.0);
  for (Eigen::Index i = 0; i < parent_a.size(); ++i) {
    if (rng.uniform() > 0.5) continue;
    const double yl = bounds.lower[i], yu = bounds.upper[i];
    if (std::abs(parent_a[i] - parent_b[i]) <= kEps || yu - yl <= 0.0) continue;
    const double y1 = std::min(parent_a[i], parent_b[i]);
    const double y2 = std::max(parent_a[i], parent_b[i]);
    const double u = rng.uniform();

    auto spread = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta_c + 1.0));
      return u <= 1.0 / alpha ? std::pow(u * alpha, expo)
                              : std::pow(1.0 / (2.0 - u * alpha), expo);
    };
    const double bq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
    const double bq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
    double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), yl, yu);
    double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), yl, yu);
    if (rng.uniform() <= 0.5) std::swap(c1, c2);
    ca[i] = c1;
    cb[i] = c2;
  }
  return {ca, cb};
}

Eigen::VectorXd polynomial_mutation(const Eigen::VectorXd& individual, const Box& bounds,
                                    double eta_m, double p_m, Rng& rng) {
  Eigen::VectorXd out = individual;
  const double expo = 1.0 / (eta_m + 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (rng.uniform() >= p_m) continue;
    const double yl = bounds.lower[i], yu = bounds.upper[i];
    const double width = yu - yl;
    if (width <= 0.0) continue;
    const double y = out[i];
    const double d1 = (y - yl) / width;
    const double d2 = (yu - y) / width;
    const double r = rng.uniform();
    double dq;
    if (r <= 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta_m + 1.0);
      dq = std::pow(val, expo) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta_m + 1.0);
      dq = 1.0 - std::pow(val, expo);
    }
    out[i] = std::clamp(y + dq * width, yl, yu);
  }
  return out;
}

// ------------------------------------------------------------------ EA

EvolutionResult evolve(const Fitness& fitness, const Box& bounds, const EaConfig& cfg,
                       const std::vector<Eigen::VectorXd>& initial) {
  cfg.validate();
  const auto pop_size = static_cast<std::size_t>(cfg.population_size);
  Rng rng(cfg.seed);

  std::vector<Eigen::VectorXd> pop;
  if (!initial.empty()) {
    if (initial.size() != pop_size) throw InvalidArgument("evolve: initial population size != P");
    for (const auto& ind : initial) pop.push_back(bounds.clamp(ind));
  } else {
    for (std::size_t i = 0; i < pop_size; ++i) {
      Eigen::VectorXd u(bounds.dim());
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = rng.uniform();
      pop.push_back(bounds.from_unit(u));
    }
  }

  EvolutionResult res;
  std::vector<double> score(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) score[i] = fitness(pop[i]);
  res.evaluations = pop_size;

  auto record_best = [&]() {
    const auto it = std::max_element(score.begin(), score.end());
    res.best_trace.push_back(*it);
  };
  record_best();

  std::vector<std::size_t> order;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    auto tournament = [&]() {
      const std::size_t a = rng.index(pop_size);
      const std::size_t b = rng.index(pop_size);
      return score[b] > score[a] ? b : a;
    };
    std::vector<Eigen::VectorXd> offspring;
    offspring.reserve(pop_size + 1);
    while (offspring.size() < pop_size) {
      const std::size_t pa = tournament();
      const std::size_t pb = tournament();
      auto [ca, cb] = sbx_crossover(pop[pa], pop[pb], bounds, cfg.eta_c, cfg.p_c, rng);
      offspring.push_back(polynomial_mutation(ca, bounds, cfg.eta_m, cfg.p_m, rng));
      offspring.push_back(polynomial_mutation(cb, bounds, cfg.eta_m, cfg.p_m, rng));
    }
    offspring.resize(pop_size);

    std::vector<Eigen::VectorXd> merged = pop;
    std::vector<double> merged_score = score;
    for (auto& child : offspring) {
      merged_score.push_back(fitness(child));
      merged.push_back(std::move(child));
    }
    res.evaluations += pop_size;

    order.resize(merged.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return merged_score[a] > merged_score[b]; });
    for (std::size_t i = 0; i < pop_size; ++i) {
      pop[i] = merged[order[i]];
      score[i] = merged_score[order[i]];
    }
    record_best();
  }

  const auto best = static_cast<std::size_t>(
      std::distance(score.begin(), std::max_element(score.begin(), score.end())));
  res.best = pop[best];
  res.best_score = score[best];
  return res;
}

EvolutionResult evolve_task_detailed(const TaskPool& pool, const TaskModel& model,
                                     const Box& theta_bounds, const EaConfig& cfg,
                                     const std::vector<Eigen::VectorXd>& initial) {
  if (model.component_count() == 0) throw InvalidState("evolve_task: task model is empty");
  DiversityScorer scorer(pool, model);
  return evolve([&](const Eigen::VectorXd& t) { return scorer(t); }, theta_bounds, cfg, initial);
}

}  // namespace pmto
