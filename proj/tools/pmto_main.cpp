#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmto/errors.hpp"
#include "pmto/experiment.hpp"
#include "pmto/problems.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--set", o.sets, "Override a config key (KEY=VALUE, dotted keys for nested)");
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--seed", o.seed, "Base seed (trial u uses seed + u)");
  cmd->add_option("--trials", o.trials, "Number of trials");
  cmd->add_flag("--force", o.force, "Overwrite existing outputs");
}

pmto::ExperimentConfig load_config(const CommonOptions& o) {
  json doc = json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw pmto::IoError("cannot read config '" + o.config_path + "'");
    try {
      is >> doc;
    } catch (const json::exception& e) {
      throw pmto::InvalidConfig("malformed config '" + o.config_path + "': " + e.what());
    }
  }
  for (const auto& s : o.sets) pmto::apply_override(doc, s);
  if (o.seed) doc["seed"] = *o.seed;
  if (o.trials) doc["trials"] = *o.trials;
  return pmto::ExperimentConfig::from_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric multi-task optimization experiments"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Run U trials of one algorithm and score the task models");
  add_common(run, run_opts);

  CommonOptions mm_opts;
  CLI::App* minimax = app.add_subcommand("minimax", "Robust truss design via the minimax pipeline");
  add_common(minimax, mm_opts);

  std::string model_path, problem, eval_out;
  std::vector<std::string> eval_sets;
  long long grid_size = 0;
  std::uint64_t grid_seed = 12345;
  bool eval_force = false;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Re-score a saved task model on a new grid");
  evaluate->add_option("--model", model_path, "taskmodel_trial{u}.json")->required();
  evaluate->add_option("--problem", problem, "Problem name")->required();
  evaluate->add_option("--set", eval_sets, "Problem constant override (KEY=VALUE)");
  evaluate->add_option("--grid-size", grid_size, "Number of grid points (0: default)");
  evaluate->add_option("--seed", grid_seed, "Grid seed");
  evaluate->add_option("--out", eval_out, "Output directory")->required();
  evaluate->add_flag("--force", eval_force, "Overwrite existing outputs");

  CLI::App* list = app.add_subcommand("list-problems", "Print the registered problem names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load_config(run_opts);
      const auto summary = pmto::run_experiment(cfg, run_opts.out, run_opts.force);
      std::cout << "problem " << cfg.problem << ", algorithm " << pmto::algorithm_name(cfg.algorithm)
                << ", " << cfg.trials << " trial(s), " << summary.wall_seconds << " s\n";
      for (std::size_t a = 0; a < summary.report.alphas.size(); ++a) {
        std::cout << "  P" << summary.report.alphas[a] << " mean " << summary.report.mean[a] << " std "
                  << summary.report.std[a] << '\n';
      }
    } else if (*minimax) {
      const auto cfg = load_config(mm_opts);
      const auto trials = pmto::run_minimax(cfg, mm_opts.out, mm_opts.force);
      for (std::size_t u = 0; u < trials.size(); ++u) {
        std::cout << "trial " << u << ": robust max " << trials[u].robust_assessment.max << ", nominal max "
                  << trials[u].nominal_assessment.max << '\n';
      }
    } else if (*evaluate) {
      json overrides = json::object();
      for (const auto& s : eval_sets) pmto::apply_override(overrides, s);
      const auto report = pmto::evaluate_saved_model(model_path, problem, overrides, grid_size, grid_seed,
                                                     eval_out, eval_force);
      for (std::size_t a = 0; a < report.alphas.size(); ++a) {
        std::cout << "P" << report.alphas[a] << ' ' << report.mean[a] << '\n';
      }
    } else if (*list) {
      for (const auto& name : pmto::problem_names()) std::cout << name << '\n';
    }
  } catch (const pmto::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pmto::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
