#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "srn/posterior.hpp"
#include "srn/rng.hpp"

namespace srn {

enum class Algorithm { mala, mh };

struct SamplerConfig {
  std::string name;          // labels output files
  Algorithm algorithm = Algorithm::mala;
  LikelihoodVariant likelihood_variant = LikelihoodVariant::bayesian_updating;
  double step_size = 1e-3;   // proposal time step
  long burn_in = 0;          // discarded warm-up iterations
  long samples = 1;          // retained sample count
  long thin = 1;             // keep one state every `thin` iterations
  std::uint64_t seed = 0;

  long total_iterations() const { return burn_in + (samples - 1) * thin + 1; }
  void validate() const;
};

/// One MCMC run: the retained (thinned, post-burn-in) samples plus the full
/// per-iteration trace and acceptance bookkeeping. States live in the
/// sampling space x; `retained_natural` is exp(x) elementwise.
struct Chain {
  Eigen::MatrixXd retained_states;    // samples x dim
  Eigen::MatrixXd retained_natural;
  Eigen::MatrixXd trace_states;       // (iterations + 1) x dim, row 0 = start
  Eigen::VectorXd trace_logpost;
  std::vector<std::uint8_t> trace_accepted;  // entry 0 unused
  long accept_count = 0;
  long total_proposals = 0;

  double acceptance_rate() const {
    return total_proposals > 0
               ? static_cast<double>(accept_count) / static_cast<double>(total_proposals)
               : 0.0;
  }
};

/// log q(to | from) for the Langevin proposal, up to the symmetric constant.
double langevin_log_proposal(const Eigen::VectorXd& to, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& grad_at_from, double step_size);

/// One Langevin-proposal Metropolis step. `current` must hold a finite
/// value and gradient for x; on acceptance x/current are replaced by the
/// proposal and its evaluation. Draws dim normals then one uniform.
bool mala_step(Eigen::VectorXd& x, TargetValue& current, Target& target,
               double step_size, Rng& rng);

/// One random-walk Metropolis step (Gaussian proposal with covariance
/// 2 * step_size * I, matching the Langevin noise scale).
bool mh_step(Eigen::VectorXd& x, TargetValue& current, Target& target,
             double step_size, Rng& rng);

/// Runs the configured kernel from x0 and retains the states indexed
/// burn_in + (b - 1) * thin + 1 for b = 1..samples.
Chain run_mcmc(Target& target, const SamplerConfig& cfg, const Eigen::VectorXd& x0,
               Rng& rng);

/// Full posterior sampling for one dataset: builds the log-scale posterior
/// target with the configured likelihood variant, draws the start point from
/// the priors (retrying states of zero posterior density), and runs the
/// kernel.
Chain run_chain(const ReactionNetwork& net, const Dataset& ds,
                const UniformPrior& prior, const LnaState& init_state,
                const SolverConfig& solver_cfg, const SamplerConfig& sampler_cfg,
                bool include_log_jacobian = true);

/// Per-coordinate root-mean-square deviation of the retained states from a
/// reference point (both in the sampling space).
Eigen::VectorXd rmse(const Chain& chain, const Eigen::VectorXd& truth);

}  // namespace srn
