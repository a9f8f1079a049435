#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "srn/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for partially observed stochastic reaction networks"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, in_dir, truth_path;
  bool traj_csv = false;
  bool verbose = false;
  int draws = 20;
  double tol = 1e-4;

  auto* simulate = app.add_subcommand("simulate", "generate synthetic datasets");
  simulate->add_option("--config", config_path, "experiment config file")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_flag("--traj-csv", traj_csv, "also export event-level trajectories");

  auto* infer = app.add_subcommand("infer", "run the configured posterior samplers");
  infer->add_option("--config", config_path, "experiment config file")->required();
  infer->add_option("--data", data_path, "directory with dataset_rep<r>.json files")->required();
  infer->add_option("--out", out_dir, "output directory")->required();
  infer->add_flag("--verbose", verbose, "dump filter diagnostics at the true parameters");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic and finite-difference posterior gradients");
  gradcheck->add_option("--config", config_path, "experiment config file")->required();
  gradcheck->add_option("--data", data_path, "dataset file")->required();
  gradcheck->add_option("--draws", draws, "number of prior draws")->required();
  gradcheck->add_option("--tol", tol, "maximum tolerated relative error");

  auto* evaluate = app.add_subcommand("evaluate", "aggregate chains into RMSE tables and traces");
  evaluate->add_option("--in", in_dir, "directory with chain files")->required();
  evaluate->add_option("--truth", truth_path, "experiment config with the true parameters")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const srn::LoadedExperiment ex = srn::load_experiment(config_path);
      srn::run_simulate(ex, out_dir, traj_csv);
      std::cout << "wrote " << ex.cfg.replications << " dataset(s) to " << out_dir << "\n";
    } else if (infer->parsed()) {
      const srn::LoadedExperiment ex = srn::load_experiment(config_path);
      srn::run_infer(ex, data_path, out_dir, srn::worker_count_from_env(), verbose);
      std::cout << "wrote " << ex.cfg.samplers.size() * ex.cfg.replications
                << " chain(s) to " << out_dir << "\n";
    } else if (gradcheck->parsed()) {
      const srn::LoadedExperiment ex = srn::load_experiment(config_path);
      const srn::GradcheckReport report = srn::run_gradcheck(ex, data_path, draws, tol);
      std::cout << report.text;
      return report.pass ? 0 : 1;
    } else if (evaluate->parsed()) {
      const srn::LoadedExperiment truth = srn::load_experiment(truth_path);
      srn::run_evaluate(truth, in_dir, out_dir);
      std::cout << "wrote RMSE tables and traces to " << out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
