#include "pmto/algorithms.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "pmto/sampling.hpp"

namespace pmto {

void RunConfig::validate() const {
  if (initial_tasks < 1) throw InvalidConfig("initial_tasks must be >= 1");
  if (n_init < 1) throw InvalidConfig("n_init must be >= 1");
  if (n_init > n_tot) throw InvalidConfig("n_init must not exceed n_tot");
  if (n_init % initial_tasks != 0) throw InvalidConfig("n_init must be divisible by initial_tasks");
  if (epochs_initial < 1 || epochs_warm < 1) throw InvalidConfig("epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidConfig("lr must be > 0");
  if (!(top_p > 0.0 && top_p <= 100.0)) throw InvalidConfig("top_p must be in (0, 100]");
  if (!(beta >= 0.0)) throw InvalidConfig("beta must be >= 0");
  acquisition.validate();
  ea.validate();
}

// ------------------------------------------------------------------ trace

std::vector<double> RunTrace::task_values(std::size_t task) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.task_id == task) out.push_back(r.y);
  }
  return out;
}

std::size_t RunTrace::task_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n = std::max(n, r.task_id + 1);
  return n;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void RunTrace::write_csv(std::ostream& os) const {
  const Eigen::Index dt = rows.empty() ? 0 : rows.front().theta.size();
  const Eigen::Index dx = rows.empty() ? 0 : rows.front().x.size();
  os << "iter,task_id";
  for (Eigen::Index i = 0; i < dt; ++i) os << ",theta" << i;
  for (Eigen::Index i = 0; i < dx; ++i) os << ",x" << i;
  os << ",y,best_so_far,cum_evals\n";
  for (const auto& r : rows) {
    os << r.iter << ',' << r.task_id;
    for (Eigen::Index i = 0; i < dt; ++i) os << ',', put(os, r.theta[i]);
    for (Eigen::Index i = 0; i < dx; ++i) os << ',', put(os, r.x[i]);
    os << ',';
    put(os, r.y);
    os << ',';
    put(os, r.best_so_far);
    os << ',' << r.cum_evals << '\n';
  }
}

// ------------------------------------------------------------------ shared machinery

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Salt : std::uint64_t { Tasks = 1, Init = 2, Acquisition = 3, Evolution = 4, RandomTask = 5 };

Eigen::VectorXd concat(const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
  Eigen::VectorXd z(x.size() + theta.size());
  z << x, theta;
  return z;
}

// Bookkeeping common to all algorithms: evaluation counting, trace rows,
// per-task best-so-far and the unified dataset.
class Recorder {
 public:
  Recorder(const ProblemSpec& problem, RunResult& out) : problem_(problem), out_(out) {}

  double evaluate(std::size_t task, const Eigen::VectorXd& theta, const Eigen::VectorXd& x, int iter) {
    const double y = problem_.evaluate(x, theta);
    if (!std::isfinite(y)) throw NumericalError("objective returned a non-finite value");
    if (task >= best_.size()) best_.resize(task + 1, std::numeric_limits<double>::infinity());
    best_[task] = std::min(best_[task], y);
    ++out_.evaluations;
    out_.trace.rows.push_back(TraceRow{iter, task, theta, x, y, best_[task], out_.evaluations});
    out_.dataset.push_back(EvaluatedSample{x, theta, y, task});
    return y;
  }

 private:
  const ProblemSpec& problem_;
  RunResult& out_;
  std::vector<double> best_;
};

GpHyperparams fit_or_fixed(const TrainingSet& ts, const GpHyperparams& start, int epochs,
                           const RunConfig& cfg) {
  if (cfg.fixed_hyperparams) return *cfg.fixed_hyperparams;
  return fit_hyperparams(ts, start, epochs, cfg.lr);
}

AcquisitionConfig acquisition_for(const RunConfig& cfg, std::uint64_t counter) {
  AcquisitionConfig a = cfg.acquisition;
  a.beta = cfg.beta;
  a.seed = mix(cfg.seed, static_cast<std::uint64_t>(Salt::Acquisition) * 1000003ULL + counter);
  return a;
}

void check_tasks(const ProblemSpec& problem, const std::vector<Eigen::VectorXd>& tasks) {
  if (tasks.empty()) throw InvalidConfig("no tasks given");
  for (const auto& t : tasks) {
    if (t.size() != problem.task_dim()) throw InvalidConfig("task parameter dimension mismatch");
  }
}

// LHS initialization of n_init/M points per task into a unified training set.
void initialize_unified(const ProblemSpec& problem, const TaskPool& pool, int per_task,
                        const RunConfig& cfg, Recorder& rec, TrainingSet& ts) {
  Rng rng(mix(cfg.seed, static_cast<std::uint64_t>(Salt::Init)));
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const Eigen::MatrixXd xs = latin_hypercube(per_task, problem.solution_bounds, rng);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::VectorXd x = xs.row(i).transpose();
      const double y = rec.evaluate(m, pool.thetas[m], x, 0);
      ts.add(concat(x, pool.thetas[m]), y);
    }
  }
}

}  // namespace

std::vector<Eigen::VectorXd> sample_tasks(const ProblemSpec& problem, int count, std::uint64_t seed) {
  Rng rng(mix(seed, static_cast<std::uint64_t>(Salt::Tasks)));
  const Eigen::MatrixXd t = latin_hypercube(count, problem.task_bounds, rng);
  std::vector<Eigen::VectorXd> out;
  for (Eigen::Index i = 0; i < t.rows(); ++i) out.push_back(t.row(i).transpose());
  return out;
}

// ------------------------------------------------------------------ baseline

RunResult run_single_task_baseline(const ProblemSpec& problem,
                                   const std::vector<Eigen::VectorXd>& tasks, const RunConfig& cfg) {
  cfg.validate();
  check_tasks(problem, tasks);
  const int m_tasks = static_cast<int>(tasks.size());
  if (cfg.n_init % m_tasks != 0 || cfg.n_tot % m_tasks != 0) {
    throw InvalidConfig("baseline: n_init and n_tot must be divisible by the number of tasks");
  }
  const int per_init = cfg.n_init / m_tasks;
  const int per_budget = cfg.n_tot / m_tasks;

  RunResult out;
  out.pool.thetas = tasks;
  Recorder rec(problem, out);
  Rng rng(mix(cfg.seed, static_cast<std::uint64_t>(Salt::Init)));
  std::uint64_t acq_counter = 0;

  for (std::size_t m = 0; m < tasks.size(); ++m) {
    const Eigen::VectorXd& theta = tasks[m];
    TrainingSet ts(problem.solution_bounds);
    const Eigen::MatrixXd xs = latin_hypercube(per_init, problem.solution_bounds, rng);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const Eigen::VectorXd x = xs.row(i).transpose();
      ts.add(x, rec.evaluate(m, theta, x, 0));
    }
    if (per_init >= per_budget) continue;

    GpHyperparams h = fit_or_fixed(ts, GpHyperparams::defaults(ts.dim()), cfg.epochs_initial, cfg);
    GpModel model = GpModel::fit(ts, h);
    for (int iter = 1; per_init + iter - 1 < per_budget; ++iter) {
      const Eigen::VectorXd x =
          maximize_ucb(model, std::nullopt, problem.solution_bounds, acquisition_for(cfg, acq_counter++));
      ts.add(x, rec.evaluate(m, theta, x, iter));
      if (per_init + iter < per_budget) {
        h = fit_or_fixed(ts, h, cfg.epochs_warm, cfg);
        model = GpModel::fit(ts, h);
      }
    }
  }
  out.elites = build_elite_set(out.dataset, out.pool);
  return out;
}

// ------------------------------------------------------------------ unified GP loops

namespace {

struct UnifiedState {
  TrainingSet ts;
  GpHyperparams h;
  std::optional<GpModel> model;
};

// One sweep of acquisitions over the pool against the unified GP. The
// posterior is refreshed after every new point with the current
// hyperparameters. Stops early when the budget is exhausted.
void acquisition_sweep(const ProblemSpec& problem, const TaskPool& pool, int iter,
                       const RunConfig& cfg, Recorder& rec, UnifiedState& st, RunResult& out,
                       std::uint64_t& acq_counter) {
  for (std::size_t m = 0; m < pool.size(); ++m) {
    if (out.evaluations >= cfg.n_tot) return;
    const Eigen::VectorXd& theta = pool.thetas[m];
    const Eigen::VectorXd x =
        maximize_ucb(*st.model, theta, problem.solution_bounds, acquisition_for(cfg, acq_counter++));
    st.ts.add(concat(x, theta), rec.evaluate(m, theta, x, iter));
    st.model = GpModel::fit(st.ts, st.h);
  }
}

void refit_unified(UnifiedState& st, int epochs, const RunConfig& cfg) {
  st.h = fit_or_fixed(st.ts, st.h, epochs, cfg);
  st.model = GpModel::fit(st.ts, st.h);
}

}  // namespace

RunResult run_pmto_ft(const ProblemSpec& problem, const std::vector<Eigen::VectorXd>& tasks,
                      const RunConfig& cfg) {
  cfg.validate();
  check_tasks(problem, tasks);
  const int m_tasks = static_cast<int>(tasks.size());
  if (cfg.n_init % m_tasks != 0) throw InvalidConfig("pmto-ft: n_init must be divisible by M");

  RunResult out;
  out.pool.thetas = tasks;
  Recorder rec(problem, out);
  UnifiedState st{TrainingSet(Box::concat(problem.solution_bounds, problem.task_bounds)),
                  GpHyperparams::defaults(problem.solution_dim() + problem.task_dim()), std::nullopt};
  initialize_unified(problem, out.pool, cfg.n_init / m_tasks, cfg, rec, st.ts);
  refit_unified(st, cfg.epochs_initial, cfg);

  std::uint64_t acq_counter = 0;
  for (int iter = 1; out.evaluations < cfg.n_tot; ++iter) {
    acquisition_sweep(problem, out.pool, iter, cfg, rec, st, out, acq_counter);
    if (out.evaluations < cfg.n_tot) refit_unified(st, cfg.epochs_warm, cfg);
  }
  out.elites = build_elite_set(out.dataset, out.pool);
  return out;
}

RunResult run_pmto(const ProblemSpec& problem, const RunConfig& cfg, TaskSource source) {
  cfg.validate();
  RunResult out;
  out.pool.thetas = sample_tasks(problem, cfg.initial_tasks, cfg.seed);
  Recorder rec(problem, out);
  UnifiedState st{TrainingSet(Box::concat(problem.solution_bounds, problem.task_bounds)),
                  GpHyperparams::defaults(problem.solution_dim() + problem.task_dim()), std::nullopt};
  initialize_unified(problem, out.pool, cfg.n_init / cfg.initial_tasks, cfg, rec, st.ts);
  refit_unified(st, cfg.epochs_initial, cfg);

  TaskModelOptions tm_opts;
  tm_opts.epochs = cfg.epochs_initial;
  tm_opts.lr = cfg.lr;
  auto fit_tm = [&](const std::vector<EliteRecord>& elites, const TaskModelOptions& o) {
    return fit_task_model(elites, problem.solution_bounds, problem.task_bounds, o);
  };

  out.elites = build_elite_set(out.dataset, out.pool);
  std::optional<TaskModel> tm;
  if (out.elites.size() >= 2) tm = fit_tm(out.elites, tm_opts);

  Rng task_rng(mix(cfg.seed, static_cast<std::uint64_t>(Salt::RandomTask)));
  std::uint64_t acq_counter = 0;
  for (int iter = 1; out.evaluations < cfg.n_tot; ++iter) {
    Eigen::VectorXd theta_new;
    if (source == TaskSource::Evolved && tm) {
      EaConfig ea = cfg.ea;
      ea.seed = mix(cfg.seed, static_cast<std::uint64_t>(Salt::Evolution) * 1000003ULL +
                                  static_cast<std::uint64_t>(iter));
      theta_new = evolve_task(out.pool, *tm, problem.task_bounds, ea);
    } else {
      Eigen::VectorXd u(problem.task_dim());
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = task_rng.uniform();
      theta_new = problem.task_bounds.from_unit(u);
    }
    out.pool.add(theta_new);

    const int before = out.evaluations;
    acquisition_sweep(problem, out.pool, iter, cfg, rec, st, out, acq_counter);
    // A task added in a sweep cut short by the budget never got evaluated.
    if (out.evaluations - before < static_cast<int>(out.pool.size())) {
      const std::size_t last = out.pool.size() - 1;
      const bool sampled = std::any_of(out.dataset.begin(), out.dataset.end(),
                                       [&](const EvaluatedSample& s) { return s.task == last; });
      if (!sampled) out.pool.thetas.pop_back();
    }
    if (out.evaluations < cfg.n_tot) refit_unified(st, cfg.epochs_warm, cfg);

    out.elites = build_elite_set(out.dataset, out.pool);
    if (out.evaluations < cfg.n_tot && out.elites.size() >= 2) {
      TaskModelOptions warm = tm_opts;
      if (tm) {
        warm.epochs = cfg.epochs_warm;
        warm.warm_start = tm->hyperparams();
      }
      tm = fit_tm(out.elites, warm);
    }
  }

  // Online model: top-p% elites only.
  out.task_model = fit_tm(filter_top_p(out.elites, cfg.top_p), tm_opts);
  return out;
}

TaskModel fit_offline_task_model(const RunResult& run, const ProblemSpec& problem,
                                 const RunConfig& cfg) {
  TaskModelOptions opts;
  opts.epochs = cfg.epochs_initial;
  opts.lr = cfg.lr;
  return fit_task_model(run.elites, problem.solution_bounds, problem.task_bounds, opts);
}

// ------------------------------------------------------------------ regret

RegretCurves compute_regret(const RunTrace& trace, const std::vector<double>& optima) {
  RegretCurves out;
  out.instantaneous.resize(optima.size());
  out.cumulative.resize(optima.size());
  for (const auto& r : trace.rows) {
    if (r.task_id >= optima.size()) throw InvalidArgument("compute_regret: missing optimum for task");
    const double regret = r.y - optima[r.task_id];
    if (regret < -1e-9) {
      throw ConsistencyError("negative regret " + std::to_string(regret) + " for task " +
                             std::to_string(r.task_id) + ": optimum is wrong");
    }
    auto& inst = out.instantaneous[r.task_id];
    auto& cum = out.cumulative[r.task_id];
    inst.push_back(regret);
    cum.push_back((cum.empty() ? 0.0 : cum.back()) + regret);
  }
  return out;
}

}  // namespace pmto
