#include "srn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "srn/io.hpp"
#include "srn/rng.hpp"

namespace srn {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::VectorXd ObservationScheduleConfig::times() const {
  if (uniform_times) {
    Eigen::VectorXd t(count);
    for (int i = 0; i < count; ++i) t(i) = start + i * step;
    return t;
  }
  return Eigen::Map<const Eigen::VectorXd>(explicit_times.data(),
                                           static_cast<Eigen::Index>(explicit_times.size()));
}

std::vector<std::vector<int>> ObservationScheduleConfig::observed_sets() const {
  const int n = static_cast<int>(times().size());
  if (shared_observed) return std::vector<std::vector<int>>(n, shared_set);
  return per_time_sets;
}

ObservationModel LoadedExperiment::observation_model() const {
  ObservationModel model;
  model.times = cfg.schedule.times();
  model.observed = cfg.schedule.observed_sets();
  model.batch = cfg.schedule.batch;
  model.noise_variances = cfg.schedule.sigma_true;
  model.validate(net.species_count());
  return model;
}

LnaState LoadedExperiment::initial_state() const {
  LnaState st = LnaState::make(cfg.init_mean, cfg.init_cov, cfg.schedule.times()(0));
  if (cfg.init_pert_mean.size() > 0) st.pert_mean = cfg.init_pert_mean;
  return st;
}

UniformPrior LoadedExperiment::prior() const {
  const int N = net.param_count();
  const std::vector<int> jy = observation_model().observed_union();
  UniformPrior prior;
  prior.lo.resize(N + static_cast<int>(jy.size()));
  prior.hi.resize(prior.lo.size());
  for (int n = 0; n < N; ++n) {
    prior.lo(n) = cfg.theta_priors[n][0];
    prior.hi(n) = cfg.theta_priors[n][1];
  }
  for (std::size_t i = 0; i < jy.size(); ++i) {
    const auto it = cfg.sigma_priors.find(jy[i]);
    if (it == cfg.sigma_priors.end())
      throw std::invalid_argument("missing noise prior for an observed species");
    prior.lo(N + static_cast<int>(i)) = it->second[0];
    prior.hi(N + static_cast<int>(i)) = it->second[1];
  }
  prior.validate();
  return prior;
}

ParameterVector LoadedExperiment::true_params() const {
  ParameterVector p;
  p.theta = cfg.theta_true;
  const std::vector<int> jy = observation_model().observed_union();
  p.sigma.resize(static_cast<Eigen::Index>(jy.size()));
  for (std::size_t i = 0; i < jy.size(); ++i)
    p.sigma(static_cast<Eigen::Index>(i)) = cfg.schedule.sigma_true.at(jy[i]);
  return p;
}

std::vector<std::string> LoadedExperiment::param_labels() const {
  std::vector<std::string> labels;
  for (int n = 0; n < net.param_count(); ++n) {
    const std::string base = net.param_names().empty()
                                 ? "theta" + std::to_string(n + 1)
                                 : net.param_names()[n];
    labels.push_back("log_" + base);
  }
  for (int j : observation_model().observed_union())
    labels.push_back("log_sigma_" + std::to_string(j + 1));
  return labels;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key))
      throw std::invalid_argument("unknown key \"" + key + "\" in " + where);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw std::invalid_argument("missing key \"" + key + "\" in " + where);
  return *it;
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "mala") return Algorithm::mala;
  if (s == "mh") return Algorithm::mh;
  throw std::invalid_argument("unknown algorithm \"" + s + "\" (expected mala or mh)");
}

LikelihoodVariant parse_variant(const std::string& s) {
  if (s == "bayesian_updating") return LikelihoodVariant::bayesian_updating;
  if (s == "original_lna") return LikelihoodVariant::original_lna;
  throw std::invalid_argument("unknown likelihood variant \"" + s + "\"");
}

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::mala ? "mala" : "mh";
}

std::string variant_name(LikelihoodVariant v) {
  return v == LikelihoodVariant::bayesian_updating ? "bayesian_updating" : "original_lna";
}

std::vector<int> parse_species_set(const json& arr) {
  std::vector<int> set;
  for (const json& j : arr) {
    const int idx = j.get<int>();
    if (idx < 1) throw std::invalid_argument("species indices are 1-based");
    set.push_back(idx - 1);
  }
  std::sort(set.begin(), set.end());
  return set;
}

}  // namespace

LoadedExperiment parse_experiment(const std::string& text, const std::string& base_dir) {
  const json doc = json::parse(text);
  reject_unknown_keys(doc,
                      {"network", "theta_true", "x0", "t_end", "observation", "lna_init",
                       "solver", "priors", "include_log_jacobian", "samplers",
                       "replications", "seed"},
                      "experiment config");

  ExperimentConfig cfg;
  cfg.network_path = require(doc, "network", "config").get<std::string>();
  const fs::path net_path = fs::path(base_dir) / cfg.network_path;
  const std::string network_text = read_text_file(net_path.string());
  ReactionNetwork net = parse_network_json(network_text);
  const int J = net.species_count();
  const int N = net.param_count();

  const json& jtheta = require(doc, "theta_true", "config");
  cfg.theta_true.resize(N);
  reject_unknown_keys(jtheta,
                      std::set<std::string>(net.param_names().begin(),
                                            net.param_names().end()),
                      "theta_true");
  for (int n = 0; n < N; ++n)
    cfg.theta_true(n) = require(jtheta, net.param_names()[n], "theta_true").get<double>();

  const std::vector<std::int64_t> x0 =
      require(doc, "x0", "config").get<std::vector<std::int64_t>>();
  if (static_cast<int>(x0.size()) != J)
    throw std::invalid_argument("x0 length does not match species count");
  cfg.x0 = Eigen::Map<const CountVector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  cfg.t_end = require(doc, "t_end", "config").get<double>();
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");

  {
    const json& jobs = require(doc, "observation", "config");
    reject_unknown_keys(jobs, {"times", "observed", "batch", "sigma_true"}, "observation");
    auto& sch = cfg.schedule;
    const json& jtimes = require(jobs, "times", "observation");
    if (jtimes.is_object()) {
      reject_unknown_keys(jtimes, {"start", "step", "count"}, "observation.times");
      sch.uniform_times = true;
      sch.start = require(jtimes, "start", "times").get<double>();
      sch.step = require(jtimes, "step", "times").get<double>();
      sch.count = require(jtimes, "count", "times").get<int>();
      if (sch.count < 1 || !(sch.step > 0.0))
        throw std::invalid_argument("times grid needs count >= 1 and step > 0");
    } else {
      sch.uniform_times = false;
      sch.explicit_times = jtimes.get<std::vector<double>>();
      if (sch.explicit_times.empty()) throw std::invalid_argument("empty time list");
    }
    const json& jobserved = require(jobs, "observed", "observation");
    if (!jobserved.is_array() || jobserved.empty())
      throw std::invalid_argument("observed must be a non-empty array");
    if (jobserved.front().is_array()) {
      sch.shared_observed = false;
      for (const json& one : jobserved) sch.per_time_sets.push_back(parse_species_set(one));
      if (sch.per_time_sets.size() != static_cast<std::size_t>(sch.times().size()))
        throw std::invalid_argument("need one observed set per observation time");
    } else {
      sch.shared_observed = true;
      sch.shared_set = parse_species_set(jobserved);
    }
    if (jobs.contains("batch")) sch.batch = jobs.at("batch").get<int>();
    for (const auto& [key, var] : require(jobs, "sigma_true", "observation").items()) {
      const int idx = std::stoi(key);
      if (idx < 1) throw std::invalid_argument("species indices are 1-based");
      sch.sigma_true[idx - 1] = var.get<double>();
    }
  }

  {
    const json& jinit = require(doc, "lna_init", "config");
    reject_unknown_keys(jinit, {"mean", "phi", "cov"}, "lna_init");
    const std::vector<double> mean =
        require(jinit, "mean", "lna_init").get<std::vector<double>>();
    if (static_cast<int>(mean.size()) != J)
      throw std::invalid_argument("lna_init.mean length does not match species count");
    cfg.init_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                      static_cast<Eigen::Index>(mean.size()));
    if (jinit.contains("phi")) {
      const std::vector<double> phi = jinit.at("phi").get<std::vector<double>>();
      if (static_cast<int>(phi.size()) != J)
        throw std::invalid_argument("lna_init.phi length does not match species count");
      cfg.init_pert_mean = Eigen::Map<const Eigen::VectorXd>(
          phi.data(), static_cast<Eigen::Index>(phi.size()));
    }
    const json& jcov = require(jinit, "cov", "lna_init");
    if (jcov.is_string()) {
      if (jcov.get<std::string>() != "identity")
        throw std::invalid_argument("lna_init.cov string form must be \"identity\"");
      cfg.init_cov = Eigen::MatrixXd::Identity(J, J);
    } else if (jcov.is_object()) {
      reject_unknown_keys(jcov, {"diag"}, "lna_init.cov");
      const std::vector<double> diag =
          require(jcov, "diag", "lna_init.cov").get<std::vector<double>>();
      if (static_cast<int>(diag.size()) != J)
        throw std::invalid_argument("lna_init.cov.diag length does not match species count");
      cfg.init_cov = Eigen::Map<const Eigen::VectorXd>(
                         diag.data(), static_cast<Eigen::Index>(diag.size()))
                         .asDiagonal();
    } else {
      const auto rows = jcov.get<std::vector<std::vector<double>>>();
      if (static_cast<int>(rows.size()) != J)
        throw std::invalid_argument("lna_init.cov must be J x J");
      cfg.init_cov.resize(J, J);
      for (int i = 0; i < J; ++i) {
        if (static_cast<int>(rows[i].size()) != J)
          throw std::invalid_argument("lna_init.cov must be J x J");
        for (int j = 0; j < J; ++j) cfg.init_cov(i, j) = rows[i][j];
      }
    }
  }

  {
    const json& jsolver = require(doc, "solver", "config");
    reject_unknown_keys(jsolver, {"substeps", "dz", "jitter"}, "solver");
    if (jsolver.contains("substeps")) cfg.solver.substeps = jsolver.at("substeps").get<int>();
    if (jsolver.contains("dz")) cfg.solver.dz_target = jsolver.at("dz").get<double>();
    if (jsolver.contains("jitter")) cfg.solver.jitter = jsolver.at("jitter").get<double>();
    if (cfg.solver.substeps < 1) throw std::invalid_argument("solver.substeps must be >= 1");
  }

  {
    const json& jpriors = require(doc, "priors", "config");
    reject_unknown_keys(jpriors, {"theta", "sigma"}, "priors");
    const json& jtheta_priors = require(jpriors, "theta", "priors");
    if (static_cast<int>(jtheta_priors.size()) != N)
      throw std::invalid_argument("need one theta prior per kinetic constant");
    for (const json& pair : jtheta_priors) {
      const auto bounds = pair.get<std::vector<double>>();
      if (bounds.size() != 2) throw std::invalid_argument("prior bounds must be [lo, hi]");
      cfg.theta_priors.push_back({bounds[0], bounds[1]});
    }
    for (const auto& [key, pair] : require(jpriors, "sigma", "priors").items()) {
      const int idx = std::stoi(key);
      if (idx < 1) throw std::invalid_argument("species indices are 1-based");
      const auto bounds = pair.get<std::vector<double>>();
      if (bounds.size() != 2) throw std::invalid_argument("prior bounds must be [lo, hi]");
      cfg.sigma_priors[idx - 1] = {bounds[0], bounds[1]};
    }
  }

  if (doc.contains("include_log_jacobian"))
    cfg.include_log_jacobian = doc.at("include_log_jacobian").get<bool>();

  std::set<std::string> seen_names;
  for (const json& jcell : require(doc, "samplers", "config")) {
    reject_unknown_keys(jcell,
                        {"name", "algorithm", "likelihood", "step_size", "burn_in",
                         "samples", "thin"},
                        "sampler");
    SamplerCellConfig cell;
    cell.name = require(jcell, "name", "sampler").get<std::string>();
    if (cell.name.empty() || !seen_names.insert(cell.name).second)
      throw std::invalid_argument("sampler names must be unique and non-empty");
    cell.algorithm = parse_algorithm(require(jcell, "algorithm", "sampler").get<std::string>());
    cell.likelihood_variant =
        parse_variant(require(jcell, "likelihood", "sampler").get<std::string>());
    cell.step_size = require(jcell, "step_size", "sampler").get<double>();
    cell.burn_in = require(jcell, "burn_in", "sampler").get<long>();
    cell.samples = require(jcell, "samples", "sampler").get<long>();
    cell.thin = require(jcell, "thin", "sampler").get<long>();
    cfg.samplers.push_back(std::move(cell));
  }
  if (cfg.samplers.empty()) throw std::invalid_argument("need at least one sampler");

  if (doc.contains("replications")) cfg.replications = doc.at("replications").get<int>();
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  cfg.seed = require(doc, "seed", "config").get<std::uint64_t>();

  LoadedExperiment ex{std::move(cfg), std::move(net), "", ""};
  ex.canonical_json = experiment_to_json_text(ex.cfg, ex.net);
  ex.config_hash = hex64(fnv1a64(ex.canonical_json + "\n" + network_text));

  // cross-validation of the assembled pieces
  ex.observation_model();
  ex.prior();
  ex.initial_state();
  for (const auto& cell : ex.cfg.samplers) {
    SamplerConfig scfg;
    scfg.step_size = cell.step_size;
    scfg.burn_in = cell.burn_in;
    scfg.samples = cell.samples;
    scfg.thin = cell.thin;
    scfg.validate();
  }
  if ((ex.cfg.x0.array() < 0).any())
    throw std::invalid_argument("x0 counts must be non-negative");
  return ex;
}

LoadedExperiment load_experiment(const std::string& path) {
  try {
    return parse_experiment(read_text_file(path), fs::path(path).parent_path().string());
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string experiment_to_json_text(const ExperimentConfig& cfg,
                                    const ReactionNetwork& net) {
  json doc;
  doc["network"] = cfg.network_path;
  json jtheta;
  for (int n = 0; n < net.param_count(); ++n)
    jtheta[net.param_names()[n]] = cfg.theta_true(n);
  doc["theta_true"] = jtheta;
  doc["x0"] = std::vector<std::int64_t>(cfg.x0.begin(), cfg.x0.end());
  doc["t_end"] = cfg.t_end;

  json jobs;
  if (cfg.schedule.uniform_times)
    jobs["times"] = {{"start", cfg.schedule.start},
                     {"step", cfg.schedule.step},
                     {"count", cfg.schedule.count}};
  else
    jobs["times"] = cfg.schedule.explicit_times;
  auto set_to_json = [](const std::vector<int>& set) {
    json arr = json::array();
    for (int j : set) arr.push_back(j + 1);
    return arr;
  };
  if (cfg.schedule.shared_observed) {
    jobs["observed"] = set_to_json(cfg.schedule.shared_set);
  } else {
    json arr = json::array();
    for (const auto& set : cfg.schedule.per_time_sets) arr.push_back(set_to_json(set));
    jobs["observed"] = arr;
  }
  jobs["batch"] = cfg.schedule.batch;
  json jsigma;
  for (const auto& [j, var] : cfg.schedule.sigma_true) jsigma[std::to_string(j + 1)] = var;
  jobs["sigma_true"] = jsigma;
  doc["observation"] = jobs;

  json jinit;
  jinit["mean"] = std::vector<double>(cfg.init_mean.begin(), cfg.init_mean.end());
  if (cfg.init_pert_mean.size() > 0 && !cfg.init_pert_mean.isZero())
    jinit["phi"] = std::vector<double>(cfg.init_pert_mean.begin(), cfg.init_pert_mean.end());
  const int J = static_cast<int>(cfg.init_mean.size());
  if (cfg.init_cov.isIdentity()) {
    jinit["cov"] = "identity";
  } else if (cfg.init_cov.isDiagonal()) {
    jinit["cov"] = {{"diag", std::vector<double>(cfg.init_cov.diagonal().begin(),
                                                 cfg.init_cov.diagonal().end())}};
  } else {
    json rows = json::array();
    for (int i = 0; i < J; ++i) {
      json row = json::array();
      for (int j = 0; j < J; ++j) row.push_back(cfg.init_cov(i, j));
      rows.push_back(row);
    }
    jinit["cov"] = rows;
  }
  doc["lna_init"] = jinit;

  json jsolver;
  if (cfg.solver.dz_target > 0.0)
    jsolver["dz"] = cfg.solver.dz_target;
  else
    jsolver["substeps"] = cfg.solver.substeps;
  jsolver["jitter"] = cfg.solver.jitter;
  doc["solver"] = jsolver;

  json jpriors;
  json jtheta_priors = json::array();
  for (const auto& bounds : cfg.theta_priors)
    jtheta_priors.push_back(std::vector<double>{bounds[0], bounds[1]});
  jpriors["theta"] = jtheta_priors;
  json jsigma_priors;
  for (const auto& [j, bounds] : cfg.sigma_priors)
    jsigma_priors[std::to_string(j + 1)] = std::vector<double>{bounds[0], bounds[1]};
  jpriors["sigma"] = jsigma_priors;
  doc["priors"] = jpriors;

  doc["include_log_jacobian"] = cfg.include_log_jacobian;

  json jcells = json::array();
  for (const auto& cell : cfg.samplers) {
    json jc;
    jc["name"] = cell.name;
    jc["algorithm"] = algorithm_name(cell.algorithm);
    jc["likelihood"] = variant_name(cell.likelihood_variant);
    jc["step_size"] = cell.step_size;
    jc["burn_in"] = cell.burn_in;
    jc["samples"] = cell.samples;
    jc["thin"] = cell.thin;
    jcells.push_back(jc);
  }
  doc["samplers"] = jcells;
  doc["replications"] = cfg.replications;
  doc["seed"] = cfg.seed;
  return doc.dump(2) + "\n";
}

namespace {

std::string dataset_file(const std::string& dir, int rep) {
  return (fs::path(dir) / ("dataset_rep" + std::to_string(rep) + ".json")).string();
}

std::string chain_file(const std::string& dir, const std::string& cell, int rep) {
  return (fs::path(dir) / ("chain_" + cell + "_rep" + std::to_string(rep) + ".csv")).string();
}

std::string summary_file(const std::string& dir, const std::string& cell, int rep) {
  return (fs::path(dir) / ("summary_" + cell + "_rep" + std::to_string(rep) + ".json")).string();
}

}  // namespace

void run_simulate(const LoadedExperiment& ex, const std::string& out_dir,
                  bool trajectory_csv) {
  fs::create_directories(out_dir);
  const ObservationModel model = ex.observation_model();
  for (int rep = 0; rep < ex.cfg.replications; ++rep) {
    std::vector<Trajectory> trajs;
    trajs.reserve(model.batch);
    for (int m = 0; m < model.batch; ++m)
      trajs.push_back(ssa_simulate(ex.net, ex.cfg.theta_true, ex.cfg.x0, ex.cfg.t_end,
                                   derive_seed(ex.cfg.seed, kSeedTrajectory, rep, m)));
    Dataset ds = observe(trajs, model, ex.net.system_size(),
                         derive_seed(ex.cfg.seed, kSeedObservation, rep));
    ds.provenance.present = true;
    ds.provenance.seed = ex.cfg.seed;
    ds.provenance.theta = ex.cfg.theta_true;
    ds.provenance.config_hash = ex.config_hash;
    save_dataset_json(ds, dataset_file(out_dir, rep));
    if (trajectory_csv) {
      for (int m = 0; m < model.batch; ++m) {
        const std::string path =
            (fs::path(out_dir) /
             ("trajectory_rep" + std::to_string(rep) + "_b" + std::to_string(m) + ".csv"))
                .string();
        write_trajectory_csv(trajs[m], path,
                             "config_hash=" + ex.config_hash +
                                 " seed=" + std::to_string(ex.cfg.seed));
      }
    }
  }
}

namespace {

void write_chain_csv(const std::string& path, const Chain& chain,
                     const std::vector<std::string>& labels,
                     const std::string& header_comment) {
  std::ostringstream out;
  out << "# " << header_comment << "\n";
  out << "iter";
  for (const auto& label : labels) out << "," << label;
  out << ",logpost,accepted\n";
  const Eigen::Index rows = chain.trace_states.rows();
  for (Eigen::Index tau = 0; tau < rows; ++tau) {
    out << tau;
    for (Eigen::Index l = 0; l < chain.trace_states.cols(); ++l)
      out << "," << format_double(chain.trace_states(tau, l));
    out << "," << format_double(chain.trace_logpost(tau)) << ","
        << int(chain.trace_accepted[static_cast<std::size_t>(tau)]) << "\n";
  }
  write_text_file(path, out.str());
}

void write_filter_diag_csv(const std::string& path, const std::vector<FilterStepRecord>& steps,
                           int J, const std::string& header_comment) {
  std::ostringstream out;
  out << "# " << header_comment << "\n";
  out << "time";
  for (int j = 0; j < J; ++j) out << ",prior_mean_" << (j + 1);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) out << ",prior_cov_" << (i + 1) << "_" << (j + 1);
  for (int j = 0; j < J; ++j) out << ",post_mean_" << (j + 1);
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) out << ",post_cov_" << (i + 1) << "_" << (j + 1);
  out << ",log_pred\n";
  for (const auto& rec : steps) {
    out << format_double(rec.time);
    for (int j = 0; j < J; ++j) out << "," << format_double(rec.prior_mean(j));
    for (int i = 0; i < J; ++i)
      for (int j = 0; j < J; ++j) out << "," << format_double(rec.prior_cov(i, j));
    for (int j = 0; j < J; ++j) out << "," << format_double(rec.post_mean(j));
    for (int i = 0; i < J; ++i)
      for (int j = 0; j < J; ++j) out << "," << format_double(rec.post_cov(i, j));
    out << "," << format_double(rec.log_pred) << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace

void run_infer(const LoadedExperiment& ex, const std::string& data_dir,
               const std::string& out_dir, int workers, bool verbose) {
  fs::create_directories(out_dir);
  const ObservationModel model = ex.observation_model();
  const UniformPrior prior = ex.prior();
  const LnaState init = ex.initial_state();
  const std::vector<std::string> labels = ex.param_labels();
  const Eigen::VectorXd truth_log = ex.true_params().log_concat();

  std::vector<Dataset> datasets;
  datasets.reserve(ex.cfg.replications);
  for (int rep = 0; rep < ex.cfg.replications; ++rep) {
    Dataset ds = load_dataset_json(dataset_file(data_dir, rep));
    if (!(ds.model == model))
      throw std::invalid_argument("dataset " + dataset_file(data_dir, rep) +
                                  " does not match the configured observation model");
    datasets.push_back(std::move(ds));
  }

  if (verbose) {
    for (int rep = 0; rep < ex.cfg.replications; ++rep) {
      LnaFilter filter(ex.net, model);
      const FilterOutput fo =
          filter.log_likelihood(datasets[rep], ex.true_params(), init, ex.cfg.solver,
                                LikelihoodVariant::bayesian_updating, false, true);
      write_filter_diag_csv(
          (fs::path(out_dir) / ("filter_truth_rep" + std::to_string(rep) + ".csv")).string(),
          fo.steps, ex.net.species_count(),
          "config_hash=" + ex.config_hash + " seed=" + std::to_string(ex.cfg.seed) +
              " loglik=" + format_double(fo.loglik));
    }
  }

  struct Task {
    int cell;
    int rep;
  };
  std::vector<Task> tasks;
  for (int c = 0; c < static_cast<int>(ex.cfg.samplers.size()); ++c)
    for (int rep = 0; rep < ex.cfg.replications; ++rep) tasks.push_back({c, rep});

  if (workers <= 0) workers = worker_count_from_env();
  workers = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      const Task task = tasks[i];
      try {
        const SamplerCellConfig& cell = ex.cfg.samplers[task.cell];
        SamplerConfig scfg;
        scfg.name = cell.name;
        scfg.algorithm = cell.algorithm;
        scfg.likelihood_variant = cell.likelihood_variant;
        scfg.step_size = cell.step_size;
        scfg.burn_in = cell.burn_in;
        scfg.samples = cell.samples;
        scfg.thin = cell.thin;
        scfg.seed = derive_seed(ex.cfg.seed, kSeedChain, task.rep, task.cell);

        const Chain chain = run_chain(ex.net, datasets[task.rep], prior, init,
                                      ex.cfg.solver, scfg, ex.cfg.include_log_jacobian);

        const std::string header = "config_hash=" + ex.config_hash +
                                   " seed=" + std::to_string(scfg.seed) +
                                   " cell=" + cell.name + " rep=" + std::to_string(task.rep);
        write_chain_csv(chain_file(out_dir, cell.name, task.rep), chain, labels, header);

        const Eigen::VectorXd chain_rmse = rmse(chain, truth_log);
        json summary;
        summary["cell"] = cell.name;
        summary["rep"] = task.rep;
        summary["seed"] = scfg.seed;
        summary["config_hash"] = ex.config_hash;
        summary["algorithm"] = algorithm_name(cell.algorithm);
        summary["likelihood"] = variant_name(cell.likelihood_variant);
        summary["acceptance_rate"] = chain.acceptance_rate();
        summary["accepted"] = chain.accept_count;
        summary["proposals"] = chain.total_proposals;
        json jrmse;
        for (std::size_t l = 0; l < labels.size(); ++l)
          jrmse[labels[l]] = chain_rmse(static_cast<Eigen::Index>(l));
        summary["rmse_log"] = jrmse;
        summary["config"] = json::parse(ex.canonical_json);
        write_text_file(summary_file(out_dir, cell.name, task.rep), summary.dump(2) + "\n");
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error("inference failed: " + first_error);
}

GradcheckReport run_gradcheck(const LoadedExperiment& ex, const std::string& dataset_path,
                              int draws, double tolerance, double fd_step) {
  GradcheckReport report;
  report.draws = draws;
  std::ostringstream text;
  if (draws == 0) {
    report.text = "no draws requested\n";
    return report;
  }

  const Dataset ds = load_dataset_json(dataset_path);
  const ObservationModel model = ex.observation_model();
  if (!(ds.model == model))
    throw std::invalid_argument("dataset does not match the configured observation model");
  const UniformPrior prior = ex.prior();
  LogPosterior target(ex.net, ds, prior, ex.initial_state(), ex.cfg.solver,
                      LikelihoodVariant::bayesian_updating, ex.cfg.include_log_jacobian);
  Rng rng(derive_seed(ex.cfg.seed, kSeedGradcheck));

  const int L = prior.dim();
  constexpr int kMaxTries = 1000;
  for (int d = 0; d < draws; ++d) {
    double draw_err = -1.0;
    Eigen::VectorXd x;
    for (int attempt = 0; attempt < kMaxTries && draw_err < 0.0; ++attempt) {
      const Eigen::VectorXd eta = prior.sample(rng);
      if (!(eta.array() > 0.0).all()) continue;
      x = eta.array().log();
      const TargetValue center = target.eval(x, true);
      if (!center.finite) continue;
      double max_err = 0.0;
      bool usable = true;
      for (int l = 0; l < L && usable; ++l) {
        Eigen::VectorXd xp = x, xm = x;
        xp(l) += fd_step;
        xm(l) -= fd_step;
        const TargetValue fp = target.eval(xp, false);
        const TargetValue fm = target.eval(xm, false);
        if (!fp.finite || !fm.finite) {
          usable = false;
          break;
        }
        const double fd = (fp.value - fm.value) / (2.0 * fd_step);
        const double a = center.grad(l);
        const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
        max_err = std::max(max_err, err);
      }
      if (usable) draw_err = max_err;
    }
    if (draw_err < 0.0)
      throw std::runtime_error("could not find a usable prior draw for the gradient check");
    report.per_draw.push_back(draw_err);
    report.max_rel_error = std::max(report.max_rel_error, draw_err);
    text << "draw " << d << ": x = [" << x.transpose() << "], max rel err = "
         << format_double(draw_err) << "\n";
  }
  report.pass = report.max_rel_error <= tolerance;
  text << "max relative error over " << draws << " draws: "
       << format_double(report.max_rel_error) << " (tolerance " << format_double(tolerance)
       << ") -> " << (report.pass ? "PASS" : "FAIL") << "\n";
  report.text = text.str();
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

struct ChainTrace {
  Eigen::MatrixXd states;  // iterations+1 x L
  Eigen::VectorXd logpost;
};

ChainTrace read_chain_csv(const std::string& path, const std::vector<std::string>& labels) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<int> col_of_label;
  std::vector<Eigen::VectorXd> rows;
  int logpost_col = -1;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      for (const auto& label : labels) {
        const auto it = std::find(fields.begin(), fields.end(), label);
        if (it == fields.end())
          throw std::invalid_argument(path + ": missing column " + label);
        col_of_label.push_back(static_cast<int>(it - fields.begin()));
      }
      const auto it = std::find(fields.begin(), fields.end(), "logpost");
      if (it == fields.end()) throw std::invalid_argument(path + ": missing logpost column");
      logpost_col = static_cast<int>(it - fields.begin());
      continue;
    }
    Eigen::VectorXd row(labels.size() + 1);
    for (std::size_t l = 0; l < labels.size(); ++l)
      row(static_cast<Eigen::Index>(l)) = std::stod(fields[col_of_label[l]]);
    row(static_cast<Eigen::Index>(labels.size())) = std::stod(fields[logpost_col]);
    rows.push_back(std::move(row));
  }
  ChainTrace trace;
  trace.states.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(labels.size()));
  trace.logpost.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    trace.states.row(static_cast<Eigen::Index>(i)) = rows[i].head(labels.size()).transpose();
    trace.logpost(static_cast<Eigen::Index>(i)) = rows[i](static_cast<Eigen::Index>(labels.size()));
  }
  return trace;
}

}  // namespace

EvaluateResult run_evaluate(const LoadedExperiment& truth, const std::string& in_dir,
                            const std::string& out_dir) {
  fs::create_directories(out_dir);
  EvaluateResult result;
  result.param_labels = truth.param_labels();
  const Eigen::VectorXd truth_log = truth.true_params().log_concat();
  const int L = static_cast<int>(result.param_labels.size());
  const int R = truth.cfg.replications;
  const std::string file_header = "config_hash=" + truth.config_hash +
                                  " seed=" + std::to_string(truth.cfg.seed);

  const double t_quantile =
      R > 1 ? boost::math::quantile(boost::math::students_t(R - 1), 0.975) : 0.0;

  std::ostringstream reps_csv, table_csv;
  reps_csv << "# " << file_header << "\ncell,rep";
  for (const auto& label : result.param_labels) reps_csv << ",rmse_" << label;
  reps_csv << "\n";
  table_csv << "# " << file_header << "\ncell,param,mean_rmse,ci_halfwidth\n";

  for (const auto& cell : truth.cfg.samplers) {
    result.cells.push_back(cell.name);
    const long total = cell.burn_in + (cell.samples - 1) * cell.thin + 1;
    Eigen::MatrixXd cell_rmse(R, L);

    // running first/second moments of the trace across replications
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(total + 1, L);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(total + 1, L);

    for (int rep = 0; rep < R; ++rep) {
      const ChainTrace trace =
          read_chain_csv(chain_file(in_dir, cell.name, rep), result.param_labels);
      if (trace.states.rows() != total + 1)
        throw std::invalid_argument("chain length mismatch for cell " + cell.name);
      sum += trace.states;
      sumsq += trace.states.array().square().matrix();

      reps_csv << cell.name << "," << rep;
      for (int l = 0; l < L; ++l) {
        double acc = 0.0;
        for (long b = 0; b < cell.samples; ++b) {
          const long tau = cell.burn_in + b * cell.thin + 1;
          const double dev = trace.states(tau, l) - truth_log(l);
          acc += dev * dev;
        }
        cell_rmse(rep, l) = std::sqrt(acc / static_cast<double>(cell.samples));
        reps_csv << "," << format_double(cell_rmse(rep, l));
      }
      reps_csv << "\n";
    }

    const Eigen::VectorXd mean = cell_rmse.colwise().mean().transpose();
    Eigen::VectorXd ci_half = Eigen::VectorXd::Zero(L);
    if (R > 1) {
      const Eigen::VectorXd var =
          ((cell_rmse.rowwise() - mean.transpose()).array().square().colwise().sum() /
           static_cast<double>(R - 1))
              .transpose();
      ci_half = t_quantile * (var.array() / R).sqrt();
    }
    for (int l = 0; l < L; ++l)
      table_csv << cell.name << "," << result.param_labels[l] << ","
                << format_double(mean(l)) << "," << format_double(ci_half(l)) << "\n";

    result.rmse_by_cell[cell.name] = cell_rmse;
    result.mean_by_cell[cell.name] = mean;
    result.ci_half_by_cell[cell.name] = ci_half;

    // per-iteration convergence trace with a confidence band over replications
    std::ostringstream trace_csv;
    trace_csv << "# " << file_header << " cell=" << cell.name << "\niter";
    for (const auto& label : result.param_labels)
      trace_csv << "," << label << "_mean," << label << "_lo," << label << "_hi";
    trace_csv << "\n";
    for (long tau = 0; tau <= total; ++tau) {
      trace_csv << tau;
      for (int l = 0; l < L; ++l) {
        const double m = sum(tau, l) / R;
        double half = 0.0;
        if (R > 1) {
          const double var =
              std::max(0.0, (sumsq(tau, l) - R * m * m) / static_cast<double>(R - 1));
          half = t_quantile * std::sqrt(var / R);
        }
        trace_csv << "," << format_double(m) << "," << format_double(m - half) << ","
                  << format_double(m + half);
      }
      trace_csv << "\n";
    }
    write_text_file((fs::path(out_dir) / ("trace_" + cell.name + ".csv")).string(),
                    trace_csv.str());
  }

  write_text_file((fs::path(out_dir) / "rmse_reps.csv").string(), reps_csv.str());
  write_text_file((fs::path(out_dir) / "rmse_table.csv").string(), table_csv.str());
  return result;
}

int worker_count_from_env() {
  if (const char* env = std::getenv("SRN_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace srn
