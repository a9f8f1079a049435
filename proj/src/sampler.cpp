#include "srn/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace srn {

void SamplerConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  if (burn_in < 0) throw std::invalid_argument("burn-in must be >= 0");
  if (samples < 1) throw std::invalid_argument("need at least one retained sample");
  if (thin < 1) throw std::invalid_argument("thinning interval must be >= 1");
}

double langevin_log_proposal(const Eigen::VectorXd& to, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& grad_at_from, double step_size) {
  const Eigen::VectorXd diff = to - from - step_size * grad_at_from;
  return -diff.squaredNorm() / (4.0 * step_size);
}

bool mala_step(Eigen::VectorXd& x, TargetValue& current, Target& target,
               double step_size, Rng& rng) {
  if (!current.finite || !current.has_grad)
    throw std::logic_error("current state lacks a finite value and gradient");
  const int n = target.dim();
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) noise(i) = rng.normal();
  const Eigen::VectorXd proposal =
      x + step_size * current.grad + std::sqrt(2.0 * step_size) * noise;
  const double u = rng.uniform01();

  TargetValue prop_val = target.eval(proposal, true);
  if (!prop_val.finite) return false;

  const double log_ratio = prop_val.value - current.value +
                           langevin_log_proposal(x, proposal, prop_val.grad, step_size) -
                           langevin_log_proposal(proposal, x, current.grad, step_size);
  if (std::log(u) <= log_ratio) {
    x = proposal;
    current = std::move(prop_val);
    return true;
  }
  return false;
}

bool mh_step(Eigen::VectorXd& x, TargetValue& current, Target& target,
             double step_size, Rng& rng) {
  if (!current.finite)
    throw std::logic_error("current state lacks a finite value");
  const int n = target.dim();
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) noise(i) = rng.normal();
  const Eigen::VectorXd proposal = x + std::sqrt(2.0 * step_size) * noise;
  const double u = rng.uniform01();

  TargetValue prop_val = target.eval(proposal, false);
  if (!prop_val.finite) return false;

  // symmetric proposal: the transition densities cancel exactly
  if (std::log(u) <= prop_val.value - current.value) {
    x = proposal;
    current = std::move(prop_val);
    return true;
  }
  return false;
}

Chain run_mcmc(Target& target, const SamplerConfig& cfg, const Eigen::VectorXd& x0,
               Rng& rng) {
  cfg.validate();
  const int n = target.dim();
  const long total = cfg.total_iterations();
  const bool needs_grad = cfg.algorithm == Algorithm::mala;

  Chain chain;
  chain.trace_states.setZero(total + 1, n);
  chain.trace_logpost.setZero(total + 1);
  chain.trace_accepted.assign(static_cast<std::size_t>(total) + 1, 0);
  chain.retained_states.setZero(cfg.samples, n);
  chain.total_proposals = total;

  Eigen::VectorXd x = x0;
  TargetValue current = target.eval(x, needs_grad);
  if (!current.finite)
    throw std::invalid_argument("chain start has zero posterior density");
  chain.trace_states.row(0) = x.transpose();
  chain.trace_logpost(0) = current.value;

  long next_keep = cfg.burn_in + 1;
  long kept = 0;
  for (long tau = 1; tau <= total; ++tau) {
    const bool accepted = needs_grad ? mala_step(x, current, target, cfg.step_size, rng)
                                     : mh_step(x, current, target, cfg.step_size, rng);
    chain.accept_count += accepted ? 1 : 0;
    chain.trace_states.row(tau) = x.transpose();
    chain.trace_logpost(tau) = current.value;
    chain.trace_accepted[static_cast<std::size_t>(tau)] = accepted ? 1 : 0;
    if (tau == next_keep && kept < cfg.samples) {
      chain.retained_states.row(kept++) = x.transpose();
      next_keep += cfg.thin;
    }
  }
  chain.retained_natural = chain.retained_states.array().exp();
  return chain;
}

Chain run_chain(const ReactionNetwork& net, const Dataset& ds,
                const UniformPrior& prior, const LnaState& init_state,
                const SolverConfig& solver_cfg, const SamplerConfig& sampler_cfg,
                bool include_log_jacobian) {
  sampler_cfg.validate();
  LogPosterior target(net, ds, prior, init_state, solver_cfg,
                      sampler_cfg.likelihood_variant, include_log_jacobian);
  Rng rng(sampler_cfg.seed);

  // Start from the priors, retrying draws that break the kernel: states of
  // zero posterior density, and for the Langevin kernel also states it
  // cannot escape from. Far outside the posterior bulk the drift can dwarf
  // the proposal noise (or exit the support outright), leaving every
  // proposal rejected; such a start would freeze the chain forever, so it
  // is redrawn like a zero-density one.
  const bool langevin = sampler_cfg.algorithm == Algorithm::mala;
  constexpr int kMaxInitTries = 1000;
  constexpr double kMinEscapeLogProb = -50.0;
  Eigen::VectorXd x0;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxInitTries && !ok; ++attempt) {
    const Eigen::VectorXd eta0 = prior.sample(rng);
    if (!(eta0.array() > 0.0).all()) continue;
    x0 = eta0.array().log();
    const TargetValue v = target.eval(x0, langevin);
    if (!v.finite) continue;
    if (langevin) {
      const Eigen::VectorXd drifted = x0 + sampler_cfg.step_size * v.grad;
      const TargetValue vd = target.eval(drifted, true);
      if (!vd.finite) continue;
      const double log_ratio =
          vd.value - v.value +
          langevin_log_proposal(x0, drifted, vd.grad, sampler_cfg.step_size) -
          langevin_log_proposal(drifted, x0, v.grad, sampler_cfg.step_size);
      if (log_ratio < kMinEscapeLogProb) continue;
    }
    ok = true;
  }
  if (!ok) throw std::runtime_error("could not initialize chain from the priors");
  return run_mcmc(target, sampler_cfg, x0, rng);
}

Eigen::VectorXd rmse(const Chain& chain, const Eigen::VectorXd& truth) {
  if (truth.size() != chain.retained_states.cols())
    throw std::invalid_argument("truth dimension mismatch");
  const Eigen::MatrixXd dev = chain.retained_states.rowwise() - truth.transpose();
  return (dev.array().square().colwise().mean()).sqrt();
}

}  // namespace srn
