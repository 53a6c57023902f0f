#include "pmto/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "pmto/errors.hpp"

#ifndef PMTO_GIT_REVISION
#define PMTO_GIT_REVISION "unknown"
#endif

namespace pmto {

namespace fs = std::filesystem;
using nlohmann::json;

Algorithm parse_algorithm(const std::string& name) {
  if (name == "baseline") return Algorithm::Baseline;
  if (name == "pmto-ft") return Algorithm::PmtoFt;
  if (name == "pmto") return Algorithm::Pmto;
  if (name == "pmto-rt") return Algorithm::PmtoRt;
  throw InvalidConfig("config key 'algorithm': unknown algorithm '" + name +
                      "' (expected baseline, pmto-ft, pmto or pmto-rt)");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Baseline: return "baseline";
    case Algorithm::PmtoFt: return "pmto-ft";
    case Algorithm::Pmto: return "pmto";
    case Algorithm::PmtoRt: return "pmto-rt";
  }
  return "?";
}

int MinimaxSettings::inner_budget() const {
  return static_cast<int>(std::lround(pmto_fraction * total_budget));
}

// ------------------------------------------------------------------ config

json default_config_json() {
  const RunConfig r;
  const MinimaxSettings m;
  return json{
      {"problem", ""},
      {"problem_overrides", json::object()},
      {"algorithm", "pmto"},
      {"n_init", r.n_init},
      {"n_tot", r.n_tot},
      {"initial_tasks", r.initial_tasks},
      {"beta", r.beta},
      {"seed", r.seed},
      {"trials", 1},
      {"epochs_initial", r.epochs_initial},
      {"epochs_warm", r.epochs_warm},
      {"lr", r.lr},
      {"top_p", r.top_p},
      {"ea",
       {{"population_size", r.ea.population_size},
        {"generations", r.ea.generations},
        {"eta_c", r.ea.eta_c},
        {"eta_m", r.ea.eta_m},
        {"p_c", r.ea.p_c},
        {"p_m", r.ea.p_m}}},
      {"acquisition",
       {{"candidate_count", r.acquisition.candidate_count}, {"refine_steps", r.acquisition.refine_steps}}},
      {"grid", {{"size", 0}, {"seed", 12345}}},
      {"minimax",
       {{"total_budget", m.total_budget},
        {"pmto_fraction", m.pmto_fraction},
        {"outer_population", m.outer.population_size},
        {"robustness_errors", m.robustness_errors}}},
  };
}

namespace {

void merge_checked(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw InvalidConfig("config key '" + prefix + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw InvalidConfig("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && key != "problem_overrides") {
      merge_checked(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T get_key(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidConfig("config key '" + path + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& input) {
  json j = default_config_json();
  merge_checked(j, input, "");

  ExperimentConfig c;
  c.problem = get_key<std::string>(j, "problem", "problem");
  if (c.problem.empty()) throw InvalidConfig("missing required config key 'problem'");
  c.problem_overrides = j.at("problem_overrides");
  try {
    make_problem(c.problem, c.problem_overrides);
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(std::string("config key 'problem': ") + e.what());
  }
  c.algorithm = parse_algorithm(get_key<std::string>(j, "algorithm", "algorithm"));

  RunConfig& r = c.run;
  r.n_init = get_key<int>(j, "n_init", "n_init");
  r.n_tot = get_key<int>(j, "n_tot", "n_tot");
  r.initial_tasks = get_key<int>(j, "initial_tasks", "initial_tasks");
  r.beta = get_key<double>(j, "beta", "beta");
  r.seed = get_key<std::uint64_t>(j, "seed", "seed");
  r.epochs_initial = get_key<int>(j, "epochs_initial", "epochs_initial");
  r.epochs_warm = get_key<int>(j, "epochs_warm", "epochs_warm");
  r.lr = get_key<double>(j, "lr", "lr");
  r.top_p = get_key<double>(j, "top_p", "top_p");
  const json& ea = j.at("ea");
  r.ea.population_size = get_key<int>(ea, "population_size", "ea.population_size");
  r.ea.generations = get_key<int>(ea, "generations", "ea.generations");
  r.ea.eta_c = get_key<double>(ea, "eta_c", "ea.eta_c");
  r.ea.eta_m = get_key<double>(ea, "eta_m", "ea.eta_m");
  r.ea.p_c = get_key<double>(ea, "p_c", "ea.p_c");
  r.ea.p_m = get_key<double>(ea, "p_m", "ea.p_m");
  const json& acq = j.at("acquisition");
  r.acquisition.candidate_count = get_key<int>(acq, "candidate_count", "acquisition.candidate_count");
  r.acquisition.refine_steps = get_key<int>(acq, "refine_steps", "acquisition.refine_steps");
  r.acquisition.beta = r.beta;

  c.trials = get_key<int>(j, "trials", "trials");
  if (c.trials < 1) throw InvalidConfig("config key 'trials' must be >= 1");
  c.grid_size = get_key<Eigen::Index>(j.at("grid"), "size", "grid.size");
  if (c.grid_size < 0) throw InvalidConfig("config key 'grid.size' must be >= 0");
  c.grid_seed = get_key<std::uint64_t>(j.at("grid"), "seed", "grid.seed");

  const json& mm = j.at("minimax");
  c.minimax.total_budget = get_key<int>(mm, "total_budget", "minimax.total_budget");
  c.minimax.pmto_fraction = get_key<double>(mm, "pmto_fraction", "minimax.pmto_fraction");
  if (!(c.minimax.pmto_fraction > 0.0 && c.minimax.pmto_fraction < 1.0)) {
    throw InvalidConfig("config key 'minimax.pmto_fraction' must be in (0, 1)");
  }
  c.minimax.outer = r.ea;
  c.minimax.outer.population_size = get_key<int>(mm, "outer_population", "minimax.outer_population");
  c.minimax.robustness_errors = get_key<int>(mm, "robustness_errors", "minimax.robustness_errors");

  try {
    r.validate();
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(std::string("invalid run settings: ") + e.what());
  }
  return c;
}

json ExperimentConfig::to_json() const {
  return json{
      {"problem", problem},
      {"problem_overrides", problem_overrides},
      {"algorithm", algorithm_name(algorithm)},
      {"n_init", run.n_init},
      {"n_tot", run.n_tot},
      {"initial_tasks", run.initial_tasks},
      {"beta", run.beta},
      {"seed", run.seed},
      {"trials", trials},
      {"epochs_initial", run.epochs_initial},
      {"epochs_warm", run.epochs_warm},
      {"lr", run.lr},
      {"top_p", run.top_p},
      {"ea",
       {{"population_size", run.ea.population_size},
        {"generations", run.ea.generations},
        {"eta_c", run.ea.eta_c},
        {"eta_m", run.ea.eta_m},
        {"p_c", run.ea.p_c},
        {"p_m", run.ea.p_m}}},
      {"acquisition",
       {{"candidate_count", run.acquisition.candidate_count},
        {"refine_steps", run.acquisition.refine_steps}}},
      {"grid", {{"size", grid_size}, {"seed", grid_seed}}},
      {"minimax",
       {{"total_budget", minimax.total_budget},
        {"pmto_fraction", minimax.pmto_fraction},
        {"outer_population", minimax.outer.population_size},
        {"robustness_errors", minimax.robustness_errors}}},
  };
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidConfig("--set expects KEY=VALUE, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InvalidConfig("--set: malformed key '" + key + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// ------------------------------------------------------------------ trials

namespace {

std::vector<Eigen::VectorXd> fixed_tasks(const ProblemSpec& problem, const RunConfig& run) {
  return sample_tasks(problem, run.initial_tasks, run.seed);
}

Eigen::Index grid_size_for(const ExperimentConfig& cfg, const ProblemSpec& problem) {
  return cfg.grid_size > 0 ? cfg.grid_size : default_grid_size(problem.task_dim());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void prepare_output(const fs::path& dir, const std::vector<std::string>& files, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  if (force) return;
  for (const auto& f : files) {
    if (fs::exists(dir / f)) {
      throw IoError("output file '" + (dir / f).string() + "' exists (use --force to overwrite)");
    }
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
  return os;
}

void close_checked(std::ofstream& os, const fs::path& p) {
  os.close();
  if (!os) throw IoError("failed writing '" + p.string() + "'");
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_base(const ExperimentConfig& cfg, const std::string& command) {
  return json{{"command", command},
              {"version", kVersion},
              {"git_revision", PMTO_GIT_REVISION},
              {"config", cfg.to_json()},
              {"started_at", utc_now()}};
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, const ProblemSpec& problem, const EvalGrid& grid,
                      std::uint64_t seed) {
  RunConfig run = cfg.run;
  run.seed = seed;
  std::optional<RunResult> result;
  switch (cfg.algorithm) {
    case Algorithm::Baseline:
      result = run_single_task_baseline(problem, fixed_tasks(problem, run), run);
      break;
    case Algorithm::PmtoFt:
      result = run_pmto_ft(problem, fixed_tasks(problem, run), run);
      break;
    case Algorithm::Pmto:
      result = run_pmto(problem, run, TaskSource::Evolved);
      break;
    case Algorithm::PmtoRt:
      result = run_pmto(problem, run, TaskSource::Random);
      break;
  }
  TaskModel model = result->task_model ? *result->task_model : fit_offline_task_model(*result, problem, run);
  std::vector<double> values = evaluate_task_model(model, problem, grid);
  std::vector<double> q = quantiles(values, kDefaultAlphas);
  return TrialResult{std::move(*result), std::move(model), std::move(values), std::move(q)};
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec problem = make_problem(cfg.problem, cfg.problem_overrides);
  std::vector<std::string> files = {"quantiles.csv", "trial_quantiles.csv", "manifest.json"};
  for (int u = 0; u < cfg.trials; ++u) {
    files.push_back("trace_trial" + std::to_string(u) + ".csv");
    files.push_back("taskmodel_trial" + std::to_string(u) + ".json");
  }
  prepare_output(out_dir, files, force);
  json manifest = manifest_base(cfg, "run");

  const EvalGrid grid = EvalGrid::sobol(problem.task_bounds, grid_size_for(cfg, problem), cfg.grid_seed);
  ExperimentSummary summary;
  std::vector<std::vector<double>> per_trial;
  json trials = json::array();
  for (int u = 0; u < cfg.trials; ++u) {
    const std::uint64_t seed = cfg.trial_seed(u);
    TrialResult t = run_trial(cfg, problem, grid, seed);
    {
      const fs::path p = out_dir / ("trace_trial" + std::to_string(u) + ".csv");
      std::ofstream os = open_out(p);
      t.run.trace.write_csv(os);
      close_checked(os, p);
    }
    {
      const fs::path p = out_dir / ("taskmodel_trial" + std::to_string(u) + ".json");
      std::ofstream os = open_out(p);
      os << t.model.to_json().dump(2) << '\n';
      close_checked(os, p);
    }
    per_trial.push_back(t.quantiles);
    summary.evaluations.push_back(t.run.evaluations);
    trials.push_back({{"trial", u},
                      {"seed", seed},
                      {"optimization_evaluations", t.run.evaluations},
                      {"evaluation_protocol_calls", t.grid_values.size()},
                      {"final_pool_size", t.run.pool.size()}});
  }
  summary.report = aggregate_trials(per_trial, kDefaultAlphas, static_cast<std::size_t>(grid.size()));
  {
    const fs::path p = out_dir / "quantiles.csv";
    std::ofstream os = open_out(p);
    summary.report.write_csv(os, problem.name, algorithm_name(cfg.algorithm), cfg.run.seed);
    close_checked(os, p);
  }
  {
    const fs::path p = out_dir / "trial_quantiles.csv";
    std::ofstream os = open_out(p);
    os << "trial,seed,alpha,value\n";
    for (std::size_t u = 0; u < per_trial.size(); ++u) {
      for (std::size_t a = 0; a < kDefaultAlphas.size(); ++a) {
        os << u << ',' << cfg.trial_seed(static_cast<int>(u)) << ',' << format_double(kDefaultAlphas[a])
           << ',' << format_double(per_trial[u][a]) << '\n';
      }
    }
    close_checked(os, p);
  }
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["trials"] = trials;
  manifest["grid"] = {{"scheme", grid.scheme}, {"size", grid.size()}, {"seed", grid.seed}};
  manifest["finished_at"] = utc_now();
  manifest["wall_seconds"] = summary.wall_seconds;
  {
    const fs::path p = out_dir / "manifest.json";
    std::ofstream os = open_out(p);
    os << manifest.dump(2) << '\n';
    close_checked(os, p);
  }
  return summary;
}

// ------------------------------------------------------------------ minimax

MinimaxTrial run_minimax_trial(const ExperimentConfig& cfg, const ProblemSpec& problem,
                               std::uint64_t seed) {
  RunConfig inner = cfg.run;
  inner.seed = seed;
  inner.n_tot = cfg.minimax.inner_budget();
  EaConfig outer = cfg.minimax.outer;
  outer.seed = seed ^ 0x6d696e696d6178ULL;

  MinimaxTrial t;
  t.robust = solve_minimax(problem, inner, outer, cfg.minimax.outer_budget());
  EaConfig nominal = outer;
  nominal.seed = seed ^ 0x6e6f6d696e616cULL;
  t.nominal = solve_nominal(problem, nominal, cfg.minimax.total_budget);
  const std::uint64_t error_seed = seed ^ 0x6572726f7273ULL;
  t.robust_assessment = assess_robustness(t.robust.design, problem, cfg.minimax.robustness_errors, error_seed);
  t.nominal_assessment = assess_robustness(t.nominal.design, problem, cfg.minimax.robustness_errors, error_seed);
  return t;
}

std::vector<MinimaxTrial> run_minimax(const ExperimentConfig& cfg, const fs::path& out_dir, bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemSpec problem = make_problem(cfg.problem, cfg.problem_overrides);
  if (problem.name != "truss") throw InvalidConfig("config key 'problem': minimax requires 'truss'");
  std::vector<std::string> files = {"designs.csv", "manifest.json"};
  for (int u = 0; u < cfg.trials; ++u) files.push_back("robustness_trial" + std::to_string(u) + ".csv");
  prepare_output(out_dir, files, force);
  json manifest = manifest_base(cfg, "minimax");

  std::vector<MinimaxTrial> out;
  json trials = json::array();
  const fs::path designs_path = out_dir / "designs.csv";
  std::ofstream designs = open_out(designs_path);
  designs << "trial,design";
  for (Eigen::Index i = 0; i < problem.task_dim(); ++i) designs << ",theta" << i;
  designs << ",f_nominal,max_sampled,mean_sampled\n";
  for (int u = 0; u < cfg.trials; ++u) {
    const std::uint64_t seed = cfg.trial_seed(u);
    MinimaxTrial t = run_minimax_trial(cfg, problem, seed);

    const fs::path p = out_dir / ("robustness_trial" + std::to_string(u) + ".csv");
    std::ofstream os = open_out(p);
    os << "design,error_index";
    for (Eigen::Index i = 0; i < problem.solution_dim(); ++i) os << ",x" << i;
    os << ",f\n";
    const auto dump = [&](const char* name, const RobustnessSummary& s, const Eigen::VectorXd& theta) {
      for (std::size_t j = 0; j < s.values.size(); ++j) {
        os << name << ',' << j;
        for (Eigen::Index i = 0; i < s.errors[j].size(); ++i) os << ',' << format_double(s.errors[j][i]);
        os << ',' << format_double(s.values[j]) << '\n';
      }
      designs << u << ',' << name;
      for (Eigen::Index i = 0; i < theta.size(); ++i) designs << ',' << format_double(theta[i]);
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.solution_dim());
      designs << ',' << format_double(problem.evaluate(zero, theta)) << ',' << format_double(s.max) << ','
              << format_double(s.mean) << '\n';
    };
    dump("robust", t.robust_assessment, t.robust.design);
    dump("nominal", t.nominal_assessment, t.nominal.design);
    close_checked(os, p);

    trials.push_back({{"trial", u},
                      {"seed", seed},
                      {"evaluation_split",
                       {{"pmto_phase", t.robust.inner_evaluations},
                        {"outer_search", t.robust.outer_evaluations},
                        {"nominal_search", t.nominal.evaluations},
                        {"robustness_assessment_per_design", cfg.minimax.robustness_errors}}},
                      {"robust_design", vector_to_json(t.robust.design)},
                      {"nominal_design", vector_to_json(t.nominal.design)},
                      {"robust_max", t.robust_assessment.max},
                      {"nominal_max", t.nominal_assessment.max}});
    out.push_back(std::move(t));
  }
  close_checked(designs, designs_path);
  manifest["trials"] = trials;
  manifest["budget"] = {{"total", cfg.minimax.total_budget},
                        {"pmto_phase", cfg.minimax.inner_budget()},
                        {"outer_search", cfg.minimax.outer_budget()}};
  manifest["finished_at"] = utc_now();
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path mp = out_dir / "manifest.json";
  std::ofstream ms = open_out(mp);
  ms << manifest.dump(2) << '\n';
  close_checked(ms, mp);
  return out;
}

QuantileReport evaluate_saved_model(const fs::path& model_path, const std::string& problem_name,
                                    const json& overrides, Eigen::Index grid_size, std::uint64_t grid_seed,
                                    const fs::path& out_dir, bool force) {
  std::ifstream is(model_path);
  if (!is) throw IoError("cannot read task model '" + model_path.string() + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed task model '" + model_path.string() + "': " + e.what());
  }
  const TaskModel model = TaskModel::from_json(j);
  const ProblemSpec problem = make_problem(problem_name, overrides);
  const Eigen::Index k = grid_size > 0 ? grid_size : default_grid_size(problem.task_dim());
  const EvalGrid grid = EvalGrid::sobol(problem.task_bounds, k, grid_seed);
  const std::vector<double> values = evaluate_task_model(model, problem, grid);

  prepare_output(out_dir, {"grid_values.csv", "quantiles.csv"}, force);
  {
    const fs::path p = out_dir / "grid_values.csv";
    std::ofstream os = open_out(p);
    os << "k";
    for (Eigen::Index i = 0; i < problem.task_dim(); ++i) os << ",theta" << i;
    os << ",F\n";
    for (Eigen::Index r = 0; r < grid.size(); ++r) {
      os << r;
      for (Eigen::Index i = 0; i < problem.task_dim(); ++i) os << ',' << format_double(grid.thetas(r, i));
      os << ',' << format_double(values[static_cast<std::size_t>(r)]) << '\n';
    }
    close_checked(os, p);
  }
  QuantileReport report =
      aggregate_trials({quantiles(values, kDefaultAlphas)}, kDefaultAlphas, static_cast<std::size_t>(k));
  const fs::path p = out_dir / "quantiles.csv";
  std::ofstream os = open_out(p);
  report.write_csv(os, problem.name, "saved-model", grid_seed);
  close_checked(os, p);
  return report;
}

}  // namespace pmto
