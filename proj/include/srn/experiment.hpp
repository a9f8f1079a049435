#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "srn/lna.hpp"
#include "srn/observation.hpp"
#include "srn/posterior.hpp"
#include "srn/reaction_network.hpp"
#include "srn/sampler.hpp"
#include "srn/ssa.hpp"

namespace srn {

/// Observation schedule as written in the configuration file. Times are
/// either a uniform grid or an explicit list; the observed-species sets are
/// either one set shared by all times or one list per time. Species indices
/// are 1-based in files, 0-based here.
struct ObservationScheduleConfig {
  bool uniform_times = true;
  double start = 0.0;
  double step = 1.0;
  int count = 0;
  std::vector<double> explicit_times;
  bool shared_observed = true;
  std::vector<int> shared_set;
  std::vector<std::vector<int>> per_time_sets;
  int batch = 1;
  std::map<int, double> sigma_true;

  Eigen::VectorXd times() const;
  std::vector<std::vector<int>> observed_sets() const;
};

struct SamplerCellConfig {
  std::string name;
  Algorithm algorithm = Algorithm::mala;
  LikelihoodVariant likelihood_variant = LikelihoodVariant::bayesian_updating;
  double step_size = 1e-3;
  long burn_in = 0;
  long samples = 1;
  long thin = 1;
};

/// One reproducible experiment: data generation, inference cells, and
/// evaluation settings. Loaded from a single JSON document.
struct ExperimentConfig {
  std::string network_path;          // as written in the file
  Eigen::VectorXd theta_true;        // ordered like the network's constants
  CountVector x0;
  double t_end = 0.0;
  ObservationScheduleConfig schedule;
  Eigen::VectorXd init_mean;
  Eigen::VectorXd init_pert_mean;    // optional, defaults to zero
  Eigen::MatrixXd init_cov;
  SolverConfig solver;
  std::vector<std::array<double, 2>> theta_priors;  // per kinetic constant
  std::map<int, std::array<double, 2>> sigma_priors;  // per observed species
  bool include_log_jacobian = true;
  std::vector<SamplerCellConfig> samplers;
  int replications = 1;
  std::uint64_t seed = 0;
};

/// A configuration together with its resolved network, canonical serialized
/// form, and content hash (canonical JSON plus the network document).
struct LoadedExperiment {
  ExperimentConfig cfg;
  ReactionNetwork net;
  std::string canonical_json;
  std::string config_hash;

  ObservationModel observation_model() const;
  LnaState initial_state() const;
  UniformPrior prior() const;
  ParameterVector true_params() const;
  /// Column labels of the sampled coordinates: log_<param>, log_sigma_<j>.
  std::vector<std::string> param_labels() const;
};

LoadedExperiment load_experiment(const std::string& path);
LoadedExperiment parse_experiment(const std::string& text,
                                  const std::string& base_dir);
std::string experiment_to_json_text(const ExperimentConfig& cfg,
                                    const ReactionNetwork& net);

/// Generates one dataset file per replication (plus optional event-level
/// trajectory exports) under out_dir. Fully determined by the master seed.
void run_simulate(const LoadedExperiment& ex, const std::string& out_dir,
                  bool trajectory_csv = false);

/// Runs every (sampler cell x replication) chain and writes one chain CSV
/// and one summary JSON per run. Tasks execute on `workers` threads; output
/// bytes are independent of the worker count. With verbose=true also dumps
/// per-step filter diagnostics evaluated at the true parameters.
void run_infer(const LoadedExperiment& ex, const std::string& data_dir,
               const std::string& out_dir, int workers, bool verbose = false);

struct GradcheckReport {
  int draws = 0;
  double max_rel_error = 0.0;
  std::vector<double> per_draw;
  bool pass = true;
  std::string text;
};

/// Compares the analytic log-posterior gradient against central finite
/// differences (step fd_step in the log scale) at prior draws.
GradcheckReport run_gradcheck(const LoadedExperiment& ex,
                              const std::string& dataset_path, int draws,
                              double tolerance, double fd_step = 1e-5);

struct EvaluateResult {
  std::vector<std::string> cells;
  std::vector<std::string> param_labels;
  std::map<std::string, Eigen::MatrixXd> rmse_by_cell;  // replications x L
  std::map<std::string, Eigen::VectorXd> mean_by_cell;
  std::map<std::string, Eigen::VectorXd> ci_half_by_cell;
};

/// Aggregates chain files from in_dir: per-cell RMSE of the retained
/// log-scale samples against the true log-parameters (mean and 95%
/// confidence half-width over replications) and per-iteration convergence
/// traces. Writes rmse_reps.csv, rmse_table.csv and trace_<cell>.csv.
EvaluateResult run_evaluate(const LoadedExperiment& truth,
                            const std::string& in_dir,
                            const std::string& out_dir);

/// Worker count from the SRN_WORKERS environment variable, falling back to
/// the hardware concurrency.
int worker_count_from_env();

}  // namespace srn
