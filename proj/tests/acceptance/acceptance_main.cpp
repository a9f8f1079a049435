// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Usage: acceptance_tests <configs_dir> <work_dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "srn/experiment.hpp"
#include "srn/io.hpp"
#include "srn/lna.hpp"
#include "srn/sampler.hpp"
#include "srn/ssa.hpp"
#include "../support/test_helpers.hpp"

using namespace srn;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string summary;
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void progress(const std::string& msg) {
  std::printf("[%7.1fs] %s\n", now_seconds(), msg.c_str());
  std::fflush(stdout);
}

class StdNormalTarget : public Target {
 public:
  explicit StdNormalTarget(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  TargetValue eval(const Eigen::VectorXd& x, bool need_grad) override {
    TargetValue tv;
    tv.value = -0.5 * x.squaredNorm();
    if (need_grad) {
      tv.grad = -x;
      tv.has_grad = true;
    }
    tv.finite = true;
    return tv;
  }

 private:
  int dim_;
};

bool same_bytes(const fs::path& a, const fs::path& b) {
  return read_text_file(a.string()) == read_text_file(b.string());
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <configs_dir> <work_dir>\n", argv[0]);
    return 2;
  }
  const std::string configs = argv[1];
  const fs::path work = argv[2];
  fs::remove_all(work);
  fs::create_directories(work);

  std::vector<Criterion> results;
  const LoadedExperiment mm = load_experiment(configs + "/mm_h16.json");
  const LoadedExperiment toy = load_experiment(configs + "/birth_death_experiment.json");

  progress("generating synthetic datasets (run 1)");
  const fs::path data1 = work / "run1" / "data";
  run_simulate(mm, data1.string());
  const fs::path toy_data = work / "toy_data";
  run_simulate(toy, toy_data.string());

  // ---- criterion 1: gradient correctness, 20 prior draws, < 1 minute ----
  {
    Criterion c{1, "gradient correctness (analytic vs central differences)"};
    progress("criterion 1: gradient checks");
    const double t0 = now_seconds();
    const GradcheckReport mm_report =
        run_gradcheck(mm, (data1 / "dataset_rep0.json").string(), 20, 1e-4);
    const GradcheckReport toy_report =
        run_gradcheck(toy, (toy_data / "dataset_rep0.json").string(), 20, 1e-6);
    const double elapsed = now_seconds() - t0;
    c.pass = mm_report.pass && toy_report.pass && elapsed < 60.0;
    c.detail = "max rel err " + fmt(mm_report.max_rel_error) + " (tol 1e-4), toy " +
               fmt(toy_report.max_rel_error) + " (tol 1e-6), " + fmt(elapsed) + " s";
    results.push_back(c);
  }

  // ---- criterion 2: likelihood converges to the exact linear-Gaussian filter ----
  {
    Criterion c{2, "linear-oracle likelihood equivalence"};
    progress("criterion 2: linear-Gaussian oracle ladder");
    const ReactionNetwork net = testing::make_birth_death();
    const std::vector<double> times{0, 1, 2, 3, 4};
    const std::vector<double> y{11.2, 9.4, 10.8, 8.9, 10.1};
    const double sigma = 1.0;
    Dataset ds;
    ds.model.times = Eigen::Map<const Eigen::VectorXd>(times.data(), 5);
    ds.model.observed.assign(5, {0});
    ds.model.batch = 1;
    ds.model.noise_variances[0] = sigma;
    for (double v : y) ds.y.push_back(Eigen::VectorXd::Constant(1, v));

    const double exact =
        testing::bd_exact_kalman_loglik(1.0, 0.1, 10.0, 2.0, sigma, times, y);
    LnaFilter filter(net, ds.model);
    ParameterVector params;
    params.theta = Eigen::Vector2d(1.0, 0.1);
    params.sigma = Eigen::VectorXd::Constant(1, sigma);
    const LnaState init =
        LnaState::make(Eigen::VectorXd::Constant(1, 10.0), Eigen::MatrixXd::Constant(1, 1, 2.0));

    std::vector<double> errs;
    for (int substeps : {10, 100, 1000}) {  // dz = 0.1, 0.01, 0.001
      SolverConfig cfg;
      cfg.substeps = substeps;
      const FilterOutput out = filter.log_likelihood(
          ds, params, init, cfg, LikelihoodVariant::bayesian_updating, false);
      errs.push_back(std::abs(out.loglik - exact));
    }
    c.pass = errs[2] < 1e-3 && errs[1] < errs[0] / 4.0 && errs[2] < errs[1] / 4.0;
    c.detail = "errors " + fmt(errs[0]) + " -> " + fmt(errs[1]) + " -> " + fmt(errs[2]) +
               " (|err| at dz=0.001 < 1e-3, ~linear shrink)";
    results.push_back(c);
  }

  // ---- criterion 3: sampler calibration on a 4-D standard Gaussian ----
  {
    Criterion c{3, "sampler calibration (4-D standard Gaussian)"};
    progress("criterion 3: sampler calibration");
    bool pass = true;
    std::string detail;
    for (const Algorithm alg : {Algorithm::mala, Algorithm::mh}) {
      StdNormalTarget target(4);
      SamplerConfig cfg;
      cfg.algorithm = alg;
      cfg.step_size = 0.1;
      cfg.burn_in = 0;
      cfg.samples = 100000;
      cfg.thin = 1;
      Rng rng(alg == Algorithm::mala ? 1101 : 2202);
      const Chain chain = run_mcmc(target, cfg, Eigen::VectorXd::Zero(4), rng);
      double worst_mean = 0.0, lo_var = 1.0, hi_var = 1.0;
      for (int l = 0; l < 4; ++l) {
        const double mean = chain.retained_states.col(l).mean();
        const double var = (chain.retained_states.col(l).array() - mean).square().sum() /
                           (cfg.samples - 1);
        worst_mean = std::max(worst_mean, std::abs(mean));
        lo_var = std::min(lo_var, var);
        hi_var = std::max(hi_var, var);
        pass = pass && std::abs(mean) < 0.03 && var > 0.94 && var < 1.06;
      }
      detail += std::string(alg == Algorithm::mala ? "mala" : "mh") + ": worst |mean| " +
                fmt(worst_mean) + ", var in [" + fmt(lo_var) + ", " + fmt(hi_var) + "]; ";
    }
    c.pass = pass;
    c.detail = detail + "bounds |mean| < 0.03, var in [0.94, 1.06]";
    results.push_back(c);
  }

  // ---- criterion 4: exact simulation ----
  {
    Criterion c{4, "SSA exactness (decay mean, conservation laws)"};
    progress("criterion 4: SSA checks");
    const ReactionNetwork decay = testing::make_decay();
    Eigen::VectorXd theta(1);
    theta << 0.05;
    const double t = 20.0;
    const int reps = 10000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) {
      CountVector x0(1);
      x0 << 100;
      sum += static_cast<double>(ssa_simulate(decay, theta, x0, t, 40000 + r).state_at(t)(0));
    }
    const double mean = sum / reps;
    const double p = std::exp(-1.0);
    const double expected = 100.0 * p;
    const double se = std::sqrt(100.0 * p * (1.0 - p)) / std::sqrt(double(reps));
    const bool decay_ok = std::abs(mean - expected) < 3.0 * se;

    bool conserved = true;
    for (int r = 0; r < 50 && conserved; ++r) {
      const Trajectory traj =
          ssa_simulate(mm.net, mm.cfg.theta_true, mm.cfg.x0, mm.cfg.t_end, 77000 + r);
      for (const CountVector& x : traj.states)
        conserved = conserved && (x(0) + x(2) == 100) && (x.array() >= 0).all();
    }
    c.pass = decay_ok && conserved;
    c.detail = "decay mean " + fmt(mean) + " vs " + fmt(expected) + " (3se " +
               fmt(3.0 * se) + "); enzyme+complex = 100 at every event of 50 paths: " +
               (conserved ? "yes" : "no");
    results.push_back(c);
  }

  // ---- criterion 6: posterior feedback beats open-loop propagation ----
  {
    Criterion c{6, "posterior-feedback likelihood dominates the open-loop variant"};
    progress("criterion 6: filter-variant comparison at the truth");
    const ObservationModel model = mm.observation_model();
    LnaFilter filter(mm.net, model);
    const ParameterVector truth = mm.true_params();
    const LnaState init = mm.initial_state();
    int wins = 0;
    for (int rep = 0; rep < mm.cfg.replications; ++rep) {
      const Dataset ds =
          load_dataset_json((data1 / ("dataset_rep" + std::to_string(rep) + ".json")).string());
      const FilterOutput updating = filter.log_likelihood(
          ds, truth, init, mm.cfg.solver, LikelihoodVariant::bayesian_updating, false);
      const FilterOutput open_loop = filter.log_likelihood(
          ds, truth, init, mm.cfg.solver, LikelihoodVariant::original_lna, false);
      if (updating.finite && open_loop.finite && updating.loglik >= open_loop.loglik) ++wins;
    }
    c.pass = wins >= 8;
    c.detail = "updating >= open-loop on " + std::to_string(wins) + "/10 datasets (need >= 8)";
    results.push_back(c);
  }

  // ---- criterion 5: quantitative reproduction of the reference experiment ----
  {
    Criterion c{5, "reference-experiment reproduction (RMSE levels and ordering)"};
    progress("criterion 5: full inference grid, run 1 (this is the long step)");
    run_infer(mm, data1.string(), (work / "run1" / "chains").string(), 0);
    progress("criterion 5: evaluating run 1");
    const EvaluateResult eval1 = run_evaluate(mm, (work / "run1" / "chains").string(),
                                              (work / "run1" / "eval").string());

    const Eigen::VectorXd& mala_mean = eval1.mean_by_cell.at("mala_updating");
    const Eigen::MatrixXd& mala_rmse = eval1.rmse_by_cell.at("mala_updating");
    const Eigen::MatrixXd& mh_rmse = eval1.rmse_by_cell.at("mh_updating");
    int wins1 = 0, wins2 = 0;
    for (int r = 0; r < mala_rmse.rows(); ++r) {
      wins1 += mala_rmse(r, 0) < mh_rmse(r, 0) ? 1 : 0;
      wins2 += mala_rmse(r, 1) < mh_rmse(r, 1) ? 1 : 0;
    }
    bool rates_ok = true;
    double rate_lo = 1.0, rate_hi = 0.0;
    for (int rep = 0; rep < mm.cfg.replications; ++rep) {
      const auto doc = nlohmann::json::parse(read_text_file(
          (work / "run1" / "chains" /
           ("summary_mala_updating_rep" + std::to_string(rep) + ".json"))
              .string()));
      const double rate = doc.at("acceptance_rate").get<double>();
      rate_lo = std::min(rate_lo, rate);
      rate_hi = std::max(rate_hi, rate);
      rates_ok = rates_ok && rate > 0.1 && rate < 0.9;
    }
    c.pass = mala_mean(0) < 0.9 && mala_mean(2) < 0.5 && wins1 >= 7 && wins2 >= 7 && rates_ok;
    c.detail = "mean RMSE log_theta1 " + fmt(mala_mean(0)) + " (< 0.9), log_theta3 " +
               fmt(mala_mean(2)) + " (< 0.5); mala beats mh " + std::to_string(wins1) +
               "/10 and " + std::to_string(wins2) +
               "/10 on log_theta1/log_theta2 (need >= 7); mala acceptance in [" +
               fmt(rate_lo) + ", " + fmt(rate_hi) + "] (band (0.1, 0.9))";
    results.push_back(c);
  }

  // ---- criterion 7: byte-identical determinism of the full pipeline ----
  {
    Criterion c{7, "pipeline determinism (byte-identical outputs)"};
    progress("criterion 7: full pipeline, run 2");
    const fs::path data2 = work / "run2" / "data";
    run_simulate(mm, data2.string());
    run_infer(mm, data2.string(), (work / "run2" / "chains").string(), 0);
    run_evaluate(mm, (work / "run2" / "chains").string(), (work / "run2" / "eval").string());

    bool identical = true;
    std::string first_diff;
    for (int rep = 0; rep < mm.cfg.replications && identical; ++rep) {
      const std::string ds_name = "dataset_rep" + std::to_string(rep) + ".json";
      if (!same_bytes(data1 / ds_name, data2 / ds_name)) {
        identical = false;
        first_diff = ds_name;
        break;
      }
      for (const auto& cell : mm.cfg.samplers) {
        const std::string chain_name =
            "chain_" + cell.name + "_rep" + std::to_string(rep) + ".csv";
        if (!same_bytes(work / "run1" / "chains" / chain_name,
                        work / "run2" / "chains" / chain_name)) {
          identical = false;
          first_diff = chain_name;
          break;
        }
      }
    }
    if (identical &&
        !same_bytes(work / "run1" / "eval" / "rmse_table.csv",
                    work / "run2" / "eval" / "rmse_table.csv")) {
      identical = false;
      first_diff = "rmse_table.csv";
    }
    c.pass = identical;
    c.detail = identical ? "datasets, all chain files and the RMSE table match byte for byte"
                         : "first difference in " + first_diff;
    results.push_back(c);
  }

  std::sort(results.begin(), results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  bool all_pass = true;
  std::printf("\n");
  for (const Criterion& c : results) {
    std::printf("[%s] criterion %d: %s — %s\n", c.pass ? "PASS" : "FAIL", c.id,
                c.summary.c_str(), c.detail.c_str());
    all_pass = all_pass && c.pass;
  }
  std::printf("%s (%.1f s total)\n", all_pass ? "ALL CRITERIA PASSED" : "CRITERIA FAILED",
              now_seconds());
  return all_pass ? 0 : 1;
}
