#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pmto/algorithms.hpp"
#include "pmto/errors.hpp"
#include "support.hpp"

using namespace pmto;
using pmto::testing::random_vector;

namespace {

RunConfig small_config(int m, int n_init, int n_tot, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.initial_tasks = m;
  cfg.n_init = n_init;
  cfg.n_tot = n_tot;
  cfg.seed = seed;
  cfg.epochs_initial = 30;
  cfg.epochs_warm = 5;
  cfg.acquisition.candidate_count = 64;
  cfg.acquisition.refine_steps = 4;
  cfg.ea.population_size = 10;
  cfg.ea.generations = 5;
  return cfg;
}

ProblemSpec quadratic_1d() {
  ProblemSpec p;
  p.name = "quadratic";
  p.solution_bounds = Box::unit(1);
  p.task_bounds = Box::unit(1);
  p.evaluate = [](const Eigen::VectorXd& x, const Eigen::VectorXd& t) {
    const double d = x[0] - 0.2 - 0.6 * t[0];
    return d * d;
  };
  return p;
}

void check_trace_invariants(const RunResult& r, const ProblemSpec& p) {
  std::vector<double> best(r.pool.size(), std::numeric_limits<double>::infinity());
  int count = 0;
  for (const auto& row : r.trace.rows) {
    ++count;
    CHECK(row.cum_evals == count);
    REQUIRE(row.task_id < r.pool.size());
    CHECK(row.theta == r.pool.thetas[row.task_id]);
    CHECK(p.solution_bounds.contains(row.x));
    best[row.task_id] = std::min(best[row.task_id], row.y);
    CHECK(row.best_so_far == best[row.task_id]);
  }
  for (const auto& t : r.pool.thetas) CHECK(p.task_bounds.contains(t));
  REQUIRE(r.elites.size() == r.pool.size());
  for (std::size_t m = 0; m < r.pool.size(); ++m) {
    const auto v = r.trace.task_values(m);
    REQUIRE(!v.empty());
    CHECK(r.elites[m].best_y == *std::min_element(v.begin(), v.end()));
    CHECK(r.elites[m].theta == r.pool.thetas[m]);
  }
}

std::string csv(const RunResult& r) {
  std::ostringstream os;
  r.trace.write_csv(os);
  return os.str();
}

}  // namespace

TEST_CASE("run config validation") {
  RunConfig cfg = small_config(4, 8, 20);
  CHECK_NOTHROW(cfg.validate());
  cfg.n_init = 10;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_config(4, 24, 20);
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg = small_config(0, 8, 20);
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("baseline spends exactly the per-task budget") {
  const ProblemSpec p = make_problem("sphere-i");
  const RunConfig cfg = small_config(3, 6, 24);
  const auto tasks = sample_tasks(p, 3, 7);
  const RunResult r = run_single_task_baseline(p, tasks, cfg);
  CHECK(r.evaluations == 24);
  CHECK(r.trace.rows.size() == 24);
  for (std::size_t m = 0; m < 3; ++m) CHECK(r.trace.task_values(m).size() == 8);
  check_trace_invariants(r, p);
  CHECK_FALSE(r.task_model.has_value());
}

TEST_CASE("baseline with n_init = n_tot is pure space filling") {
  const ProblemSpec p = make_problem("sphere-i");
  const auto tasks = sample_tasks(p, 2, 7);
  const RunResult r = run_single_task_baseline(p, tasks, small_config(2, 10, 10));
  CHECK(r.evaluations == 10);
  for (const auto& row : r.trace.rows) CHECK(row.iter == 0);
  // one point per stratum in every solution dimension
  for (std::size_t m = 0; m < 2; ++m) {
    for (Eigen::Index v = 0; v < 4; ++v) {
      std::vector<int> hits(5, 0);
      for (const auto& row : r.trace.rows)
        if (row.task_id == m) ++hits[std::min(4, static_cast<int>(row.x[v] * 5))];
      for (int h : hits) CHECK(h == 1);
    }
  }
}

TEST_CASE("baseline rejects budgets that do not split over tasks") {
  const ProblemSpec p = make_problem("sphere-i");
  const auto tasks = sample_tasks(p, 3, 7);
  CHECK_THROWS_AS(run_single_task_baseline(p, tasks, small_config(3, 6, 25)), InvalidConfig);
  CHECK_THROWS_AS(run_single_task_baseline(p, {}, small_config(3, 6, 24)), InvalidConfig);
}

TEST_CASE("baseline beats random search on a 1-D quadratic") {
  const ProblemSpec p = quadratic_1d();
  std::vector<double> gp_best, random_best;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RunConfig cfg = small_config(1, 5, 30, seed);
    cfg.acquisition.candidate_count = 256;
    cfg.epochs_initial = 100;
    cfg.epochs_warm = 20;
    const RunResult r = run_single_task_baseline(p, {Eigen::VectorXd::Constant(1, 0.5)}, cfg);
    gp_best.push_back(r.trace.rows.back().best_so_far);
    Rng rng(1000 + seed);
    double b = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 30; ++i) b = std::min(b, p.evaluate(random_vector(rng, 1), Eigen::VectorXd::Constant(1, 0.5)));
    random_best.push_back(b);
  }
  std::sort(gp_best.begin(), gp_best.end());
  std::sort(random_best.begin(), random_best.end());
  const double gp_median = 0.5 * (gp_best[4] + gp_best[5]);
  const double rs_median = 0.5 * (random_best[4] + random_best[5]);
  MESSAGE("gp median " << gp_median << " random median " << rs_median);
  CHECK(gp_median <= rs_median);
}

TEST_CASE("fixed-task search spends exactly the budget, evenly") {
  const ProblemSpec p = make_problem("ackley-i");
  const RunConfig cfg = small_config(4, 8, 40);
  const RunResult r = run_pmto_ft(p, sample_tasks(p, 4, 3), cfg);
  CHECK(r.evaluations == 40);
  for (std::size_t m = 0; m < 4; ++m) CHECK(r.trace.task_values(m).size() == 10);
  check_trace_invariants(r, p);
}

TEST_CASE("fixed-task search stops mid-iteration at the budget") {
  const ProblemSpec p = make_problem("sphere-i");
  const RunResult r = run_pmto_ft(p, sample_tasks(p, 4, 3), small_config(4, 8, 18));
  CHECK(r.evaluations == 18);
  CHECK(r.trace.rows.size() == 18);
}

TEST_CASE("task-evolving search grows the pool by one per iteration") {
  const ProblemSpec p = make_problem("sphere-i");
  for (TaskSource src : {TaskSource::Evolved, TaskSource::Random}) {
    const RunConfig cfg = small_config(4, 8, 8 + 5 + 6 + 7);
    const RunResult r = run_pmto(p, cfg, src);
    CHECK(r.evaluations == cfg.n_tot);
    CHECK(r.pool.size() == 4 + 3);
    int last_iter = 0;
    for (const auto& row : r.trace.rows) last_iter = std::max(last_iter, row.iter);
    CHECK(last_iter == 3);
    for (int k = 1; k <= 3; ++k) {
      int n = 0;
      for (const auto& row : r.trace.rows) n += row.iter == k;
      CHECK(n == 4 + k);
    }
    check_trace_invariants(r, p);
    REQUIRE(r.task_model.has_value());
    CHECK(r.task_model->component_count() == 4);
  }
}

TEST_CASE("task-evolving search drops a new task left without samples") {
  const ProblemSpec p = make_problem("sphere-i");
  const RunConfig cfg = small_config(4, 8, 13);  // one full iteration of 5
  const RunResult r = run_pmto(p, cfg, TaskSource::Evolved);
  CHECK(r.evaluations == 13);
  CHECK(r.pool.size() == 5);
  const RunResult s = run_pmto(p, small_config(4, 8, 15), TaskSource::Evolved);
  CHECK(s.evaluations == 15);
  CHECK(s.pool.size() == 5);  // the sixth task never got a sample
  check_trace_invariants(s, p);
}

TEST_CASE("runs are deterministic under a seed") {
  const ProblemSpec p = make_problem("griewank-ii");
  const RunConfig cfg = small_config(3, 6, 21, 11);
  const auto tasks = sample_tasks(p, 3, 11);
  CHECK(csv(run_single_task_baseline(p, tasks, cfg)) == csv(run_single_task_baseline(p, tasks, cfg)));
  CHECK(csv(run_pmto_ft(p, tasks, cfg)) == csv(run_pmto_ft(p, tasks, cfg)));
  CHECK(csv(run_pmto(p, cfg, TaskSource::Evolved)) == csv(run_pmto(p, cfg, TaskSource::Evolved)));
  CHECK(csv(run_pmto(p, cfg, TaskSource::Random)) != csv(run_pmto(p, small_config(3, 6, 21, 12), TaskSource::Random)));
}

TEST_CASE("trace csv layout") {
  const ProblemSpec p = make_problem("sphere-i");
  const RunResult r = run_single_task_baseline(p, sample_tasks(p, 1, 0), small_config(1, 2, 3));
  std::istringstream in(csv(r));
  std::string header;
  std::getline(in, header);
  CHECK(header == "iter,task_id,theta0,theta1,theta2,theta3,theta4,x0,x1,x2,x3,y,best_so_far,cum_evals");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("sampled tasks lie in the task box") {
  const ProblemSpec p = make_problem("crane-load-ii");
  for (const auto& t : sample_tasks(p, 20, 5)) CHECK(p.task_bounds.contains(t));
}

TEST_CASE("regret arithmetic") {
  RunTrace t;
  const double ys[] = {3.0, 2.5, 2.25};
  for (int i = 0; i < 3; ++i) t.rows.push_back(TraceRow{0, 0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), ys[i], 0, i + 1});
  const RegretCurves r = compute_regret(t, {2.0});
  REQUIRE(r.instantaneous[0].size() == 3);
  CHECK(r.instantaneous[0][2] == 0.25);
  CHECK(r.cumulative[0].back() == 1.75);
  for (std::size_t i = 1; i < 3; ++i) CHECK(r.cumulative[0][i] >= r.cumulative[0][i - 1]);

  CHECK_THROWS_AS(compute_regret(t, {2.3}), ConsistencyError);
  RunTrace at_opt;
  for (int i = 0; i < 4; ++i) at_opt.rows.push_back(TraceRow{0, 0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 1.0, 1.0, i + 1});
  CHECK(compute_regret(at_opt, {1.0}).cumulative[0].back() == 0.0);
}

TEST_CASE("synthetic regret is never negative") {
  for (const char* name : {"sphere-i", "ackley-ii", "rastrigin-i", "griewank-ii"}) {
    const ProblemSpec p = make_problem(name);
    const RunResult r = run_pmto(p, small_config(3, 6, 21), TaskSource::Evolved);
    std::vector<double> optima;
    for (const auto& t : r.pool.thetas) optima.push_back(known_optimum(p, t).value);
    const RegretCurves c = compute_regret(r.trace, optima);
    for (const auto& task : c.instantaneous)
      for (double v : task) CHECK(v >= -1e-9);
  }
}

TEST_CASE("unified model without task correlation is block diagonal") {
  const ProblemSpec p = make_problem("sphere-i");
  Rng rng(9);
  const auto tasks = sample_tasks(p, 3, 2);
  const Box joint = Box::concat(p.solution_bounds, p.task_bounds);
  TrainingSet unified(joint);
  std::vector<TrainingSet> single(3, TrainingSet(p.solution_bounds));
  for (int i = 0; i < 8; ++i) {
    for (std::size_t m = 0; m < 3; ++m) {
      const Eigen::VectorXd x = random_vector(rng, 4);
      const double y = p.evaluate(x, tasks[m]);
      Eigen::VectorXd z(9);
      z << x, tasks[m];
      unified.add(z, y);
      single[m].add(x, y);
    }
  }
  const TargetScaling scaling = unified.target_scaling();
  unified.fix_target_scaling(scaling);
  GpHyperparams hu = GpHyperparams::defaults(9);
  hu.lengthscales.tail(5).setConstant(1e-4);
  hu.noise_variance = 1e-3;
  GpHyperparams hs = GpHyperparams::defaults(4);
  hs.noise_variance = 1e-3;
  const GpModel mu = GpModel::fit(unified, hu);
  for (std::size_t m = 0; m < 3; ++m) {
    single[m].fix_target_scaling(scaling);
    const GpModel ms = GpModel::fit(single[m], hs);
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd x = random_vector(rng, 4);
      Eigen::VectorXd z(9);
      z << x, tasks[m];
      const Posterior a = mu.predict(z), b = ms.predict(x);
      const double s = scaling.scale;  // compare in standardized units
      CHECK(std::abs(a.mean - b.mean) / s <= 1e-6);
      CHECK(std::abs(a.variance - b.variance) / (s * s) <= 1e-6);
    }
  }
}
