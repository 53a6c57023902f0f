#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pmto/acquisition.hpp"
#include "pmto/algorithms.hpp"
#include "pmto/errors.hpp"
#include "pmto/evaluation.hpp"
#include "pmto/experiment.hpp"
#include "pmto/gp.hpp"
#include "pmto/problems.hpp"
#include "pmto/task_evolution.hpp"
#include "pmto/task_model.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

json to_json(const py::object& obj) {
  if (obj.is_none()) return json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object from_json(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

pmto::TrainingSet make_training(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (x.rows() != y.size()) throw pmto::InvalidArgument("X and y row counts differ");
  pmto::TrainingSet ts(pmto::Box(lower, upper));
  for (Eigen::Index i = 0; i < x.rows(); ++i) ts.add(x.row(i).transpose(), y[i]);
  return ts;
}

py::dict trace_to_dict(const pmto::RunResult& r) {
  const auto& rows = r.trace.rows;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dt = n ? rows[0].theta.size() : 0;
  const Eigen::Index dx = n ? rows[0].x.size() : 0;
  Eigen::MatrixXd theta(n, dt), x(n, dx);
  Eigen::VectorXd y(n), best(n);
  Eigen::VectorXi iter(n), task(n), cum(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    theta.row(i) = row.theta.transpose();
    x.row(i) = row.x.transpose();
    y[i] = row.y;
    best[i] = row.best_so_far;
    iter[i] = row.iter;
    task[i] = static_cast<int>(row.task_id);
    cum[i] = row.cum_evals;
  }
  py::dict d;
  d["iter"] = iter;
  d["task_id"] = task;
  d["theta"] = theta;
  d["x"] = x;
  d["y"] = y;
  d["best_so_far"] = best;
  d["cum_evals"] = cum;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pmto, m) {
  m.doc() = "Parametric multi-task optimization core";

  py::register_exception<pmto::InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<pmto::InvalidConfig>(m, "InvalidConfig", PyExc_ValueError);
  py::register_exception<pmto::InsufficientData>(m, "InsufficientData", PyExc_ValueError);
  py::register_exception<pmto::NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
  py::register_exception<pmto::Unsupported>(m, "Unsupported", PyExc_NotImplementedError);
  py::register_exception<pmto::ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  py::class_<pmto::Box>(m, "Box")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("lower"), py::arg("upper"))
      .def_readonly("lower", &pmto::Box::lower)
      .def_readonly("upper", &pmto::Box::upper)
      .def_property_readonly("dim", &pmto::Box::dim)
      .def("contains", &pmto::Box::contains, py::arg("x"), py::arg("tol") = 0.0);

  py::class_<pmto::GpHyperparams>(m, "GpHyperparams")
      .def(py::init([](Eigen::VectorXd l, double sv, double noise) {
             return pmto::GpHyperparams{std::move(l), sv, noise};
           }),
           py::arg("lengthscales"), py::arg("signal_variance") = 1.0, py::arg("noise_variance") = 1e-2)
      .def_static("defaults", &pmto::GpHyperparams::defaults)
      .def_readwrite("lengthscales", &pmto::GpHyperparams::lengthscales)
      .def_readwrite("signal_variance", &pmto::GpHyperparams::signal_variance)
      .def_readwrite("noise_variance", &pmto::GpHyperparams::noise_variance)
      .def("__repr__", [](const pmto::GpHyperparams& h) {
        return "GpHyperparams(dim=" + std::to_string(h.lengthscales.size()) +
               ", signal_variance=" + std::to_string(h.signal_variance) +
               ", noise_variance=" + std::to_string(h.noise_variance) + ")";
      });

  py::class_<pmto::GpModel>(m, "GpModel")
      .def("predict",
           [](const pmto::GpModel& g, const Eigen::MatrixXd& x) {
             Eigen::VectorXd mean, var;
             g.predict_batch(x, mean, var);
             return py::make_tuple(mean, var);
           },
           py::arg("X"), "Posterior mean and variance for each row of X.")
      .def("log_marginal_likelihood",
           [](const pmto::GpModel& g) {
             const auto r = g.log_marginal_likelihood();
             return py::make_tuple(r.value, r.gradient);
           })
      .def_property_readonly("hyperparams", &pmto::GpModel::hyperparams)
      .def_property_readonly("jitter", &pmto::GpModel::jitter);

  m.def(
      "fit_gp",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, std::optional<pmto::GpHyperparams> h, int epochs, double lr) {
        auto ts = make_training(x, y, lower, upper);
        pmto::GpHyperparams hp = h ? *h : pmto::GpHyperparams::defaults(ts.dim());
        if (epochs > 0) hp = pmto::fit_hyperparams(ts, hp, epochs, lr);
        return pmto::GpModel::fit(std::move(ts), hp);
      },
      py::arg("X"), py::arg("y"), py::arg("lower"), py::arg("upper"), py::arg("hyperparams") = py::none(),
      py::arg("epochs") = 0, py::arg("lr") = 0.01,
      "Exact GP posterior; with epochs > 0 the hyperparameters are fitted first.");

  m.def(
      "information_gain",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, const Eigen::VectorXd& target_task, const pmto::GpHyperparams& h) {
        const auto ts = make_training(x, y, lower, upper);
        return py::make_tuple(pmto::conditional_information_gain(ts, target_task, h),
                              pmto::independent_information_gain(ts, target_task, h));
      },
      py::arg("X"), py::arg("y"), py::arg("lower"), py::arg("upper"), py::arg("target_task"),
      py::arg("hyperparams"), "(conditional, independent) information gain of the target task.");

  py::class_<pmto::ProblemSpec>(m, "Problem")
      .def_readonly("name", &pmto::ProblemSpec::name)
      .def_readonly("solution_bounds", &pmto::ProblemSpec::solution_bounds)
      .def_readonly("task_bounds", &pmto::ProblemSpec::task_bounds)
      .def_property_readonly("solution_dim", &pmto::ProblemSpec::solution_dim)
      .def_property_readonly("task_dim", &pmto::ProblemSpec::task_dim)
      .def("evaluate", [](const pmto::ProblemSpec& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& theta) { return p.evaluate(x, theta); },
           py::arg("x"), py::arg("theta"))
      .def("known_optimum", [](const pmto::ProblemSpec& p, const Eigen::VectorXd& theta) {
        const auto o = pmto::known_optimum(p, theta);
        return py::make_tuple(o.x, o.value);
      });

  m.def("make_problem",
        [](const std::string& name, const py::object& overrides) {
          return pmto::make_problem(name, to_json(overrides));
        },
        py::arg("name"), py::arg("overrides") = py::none());
  m.def("problem_names", &pmto::problem_names);

  py::class_<pmto::EaConfig>(m, "EaConfig")
      .def(py::init<>())
      .def_readwrite("population_size", &pmto::EaConfig::population_size)
      .def_readwrite("generations", &pmto::EaConfig::generations)
      .def_readwrite("eta_c", &pmto::EaConfig::eta_c)
      .def_readwrite("eta_m", &pmto::EaConfig::eta_m)
      .def_readwrite("p_c", &pmto::EaConfig::p_c)
      .def_readwrite("p_m", &pmto::EaConfig::p_m)
      .def_readwrite("seed", &pmto::EaConfig::seed);

  py::class_<pmto::AcquisitionConfig>(m, "AcquisitionConfig")
      .def(py::init<>())
      .def_readwrite("beta", &pmto::AcquisitionConfig::beta)
      .def_readwrite("candidate_count", &pmto::AcquisitionConfig::candidate_count)
      .def_readwrite("refine_steps", &pmto::AcquisitionConfig::refine_steps)
      .def_readwrite("seed", &pmto::AcquisitionConfig::seed);

  py::class_<pmto::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("n_init", &pmto::RunConfig::n_init)
      .def_readwrite("n_tot", &pmto::RunConfig::n_tot)
      .def_readwrite("initial_tasks", &pmto::RunConfig::initial_tasks)
      .def_readwrite("beta", &pmto::RunConfig::beta)
      .def_readwrite("ea", &pmto::RunConfig::ea)
      .def_readwrite("acquisition", &pmto::RunConfig::acquisition)
      .def_readwrite("seed", &pmto::RunConfig::seed)
      .def_readwrite("epochs_initial", &pmto::RunConfig::epochs_initial)
      .def_readwrite("epochs_warm", &pmto::RunConfig::epochs_warm)
      .def_readwrite("lr", &pmto::RunConfig::lr)
      .def_readwrite("top_p", &pmto::RunConfig::top_p)
      .def("validate", &pmto::RunConfig::validate);

  py::class_<pmto::TaskModel>(m, "TaskModel")
      .def("predict_solution", &pmto::TaskModel::predict_solution, py::arg("theta"))
      .def_property_readonly("solution_dim", &pmto::TaskModel::solution_dim)
      .def_property_readonly("task_dim", &pmto::TaskModel::task_dim)
      .def("to_json", [](const pmto::TaskModel& t) { return from_json(t.to_json()); })
      .def_static("from_json", [](const py::object& o) { return pmto::TaskModel::from_json(to_json(o)); });

  py::class_<pmto::RunResult>(m, "RunResult")
      .def_property_readonly("trace", &trace_to_dict)
      .def_readonly("evaluations", &pmto::RunResult::evaluations)
      .def_property_readonly("pool", [](const pmto::RunResult& r) { return r.pool.thetas; })
      .def_readonly("task_model", &pmto::RunResult::task_model)
      .def("trace_csv", [](const pmto::RunResult& r) {
        std::ostringstream os;
        r.trace.write_csv(os);
        return os.str();
      });

  py::enum_<pmto::TaskSource>(m, "TaskSource")
      .value("EVOLVED", pmto::TaskSource::Evolved)
      .value("RANDOM", pmto::TaskSource::Random);

  m.def("sample_tasks", &pmto::sample_tasks, py::arg("problem"), py::arg("count"), py::arg("seed"));
  m.def("run_single_task_baseline", &pmto::run_single_task_baseline, py::arg("problem"), py::arg("tasks"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_pmto_ft", &pmto::run_pmto_ft, py::arg("problem"), py::arg("tasks"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("run_pmto", &pmto::run_pmto, py::arg("problem"), py::arg("config"),
        py::arg("source") = pmto::TaskSource::Evolved, py::call_guard<py::gil_scoped_release>());

  m.def("diversity_objective",
        [](const Eigen::VectorXd& theta, const std::vector<Eigen::VectorXd>& pool, const pmto::TaskModel& model) {
          return pmto::diversity_objective(theta, pmto::TaskPool{pool}, model);
        },
        py::arg("theta"), py::arg("pool"), py::arg("model"));
  m.def("evolve_task",
        [](const std::vector<Eigen::VectorXd>& pool, const pmto::TaskModel& model, const pmto::Box& bounds,
           const pmto::EaConfig& cfg) { return pmto::evolve_task(pmto::TaskPool{pool}, model, bounds, cfg); },
        py::arg("pool"), py::arg("model"), py::arg("bounds"), py::arg("config"));
  m.def("sbx_crossover",
        [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const pmto::Box& bounds, double eta_c,
           double p_c, std::uint64_t seed) {
          pmto::Rng rng(seed);
          return pmto::sbx_crossover(a, b, bounds, eta_c, p_c, rng);
        },
        py::arg("a"), py::arg("b"), py::arg("bounds"), py::arg("eta_c") = 15.0, py::arg("p_c") = 0.9,
        py::arg("seed") = 0);
  m.def("polynomial_mutation",
        [](const Eigen::VectorXd& x, const pmto::Box& bounds, double eta_m, double p_m, std::uint64_t seed) {
          pmto::Rng rng(seed);
          return pmto::polynomial_mutation(x, bounds, eta_m, p_m, rng);
        },
        py::arg("x"), py::arg("bounds"), py::arg("eta_m") = 20.0, py::arg("p_m") = 0.9, py::arg("seed") = 0);

  m.def("quantiles", &pmto::quantiles, py::arg("values"), py::arg("alphas") = pmto::kDefaultAlphas);
  m.def("evaluate_task_model",
        [](const pmto::TaskModel& model, const pmto::ProblemSpec& problem, long grid_size, std::uint64_t seed) {
          const auto grid = pmto::EvalGrid::sobol(problem.task_bounds, grid_size, seed);
          return pmto::evaluate_task_model(model, problem, grid);
        },
        py::arg("model"), py::arg("problem"), py::arg("grid_size"), py::arg("seed") = 12345);

  m.def("default_config", [] { return from_json(pmto::default_config_json()); });
  m.def("run_experiment",
        [](const py::object& config, const std::filesystem::path& out, bool force) {
          const auto cfg = pmto::ExperimentConfig::from_json(to_json(config));
          py::gil_scoped_release release;
          const auto s = pmto::run_experiment(cfg, out, force);
          py::gil_scoped_acquire acquire;
          return py::make_tuple(s.report.mean, s.report.std);
        },
        py::arg("config"), py::arg("out_dir"), py::arg("force") = false,
        "Runs an experiment and returns the cross-trial quantile means and standard deviations.");

  m.attr("__version__") = pmto::kVersion;
}
