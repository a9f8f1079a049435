#include "srn/posterior.hpp"

#include <cmath>
#include <stdexcept>

namespace srn {

void UniformPrior::validate() const {
  if (lo.size() != hi.size()) throw std::invalid_argument("prior bound length mismatch");
  if (lo.size() == 0) throw std::invalid_argument("empty prior");
  for (int l = 0; l < dim(); ++l) {
    if (!(lo(l) >= 0.0)) throw std::invalid_argument("prior lower bounds must be >= 0");
    if (!(hi(l) > lo(l))) throw std::invalid_argument("prior upper bound must exceed lower bound");
  }
}

PosteriorEval log_posterior_eta(LnaFilter& filter, const Dataset& ds,
                                const ParameterVector& params,
                                const UniformPrior& prior, const LnaState& init,
                                const SolverConfig& cfg, LikelihoodVariant variant,
                                bool want_grad) {
  PosteriorEval out;
  const Eigen::VectorXd eta = params.concat();
  if (!prior.in_support(eta)) return out;

  FilterOutput fo = filter.log_likelihood(ds, params, init, cfg, variant, want_grad);
  if (!fo.finite) return out;

  out.logpost = prior.log_density() + fo.loglik;
  if (want_grad) out.grad_eta = fo.grad;  // uniform priors are flat inside support
  out.finite = std::isfinite(out.logpost);
  return out;
}

LogPosterior::LogPosterior(const ReactionNetwork& net, const Dataset& ds,
                           const UniformPrior& prior, const LnaState& init,
                           const SolverConfig& cfg, LikelihoodVariant variant,
                           bool include_log_jacobian)
    : ds_(&ds),
      prior_(prior),
      init_(init),
      cfg_(cfg),
      variant_(variant),
      include_log_jacobian_(include_log_jacobian),
      n_theta_(net.param_count()),
      filter_(net, ds.model) {
  prior_.validate();
  if (prior_.dim() != filter_.param_dim())
    throw std::invalid_argument("prior dimension does not match parameter count");
}

TargetValue LogPosterior::eval(const Eigen::VectorXd& x, bool need_grad) {
  TargetValue tv;
  if (x.size() != dim()) throw std::invalid_argument("state dimension mismatch");
  // scalar exp so deep underflow reaches exact zero and fails the support check
  const Eigen::VectorXd eta = x.unaryExpr([](double v) { return std::exp(v); });
  const ParameterVector params = ParameterVector::from_concat(eta, n_theta_);
  const PosteriorEval pe =
      log_posterior_eta(filter_, *ds_, params, prior_, init_, cfg_, variant_, need_grad);
  if (!pe.finite) return tv;

  tv.value = pe.logpost;
  if (include_log_jacobian_) tv.value += x.sum();
  if (need_grad) {
    // chain rule through eta = exp(x); the Jacobian term contributes one
    tv.grad = eta.array() * pe.grad_eta.array();
    if (include_log_jacobian_) tv.grad.array() += 1.0;
    tv.has_grad = true;
    if (!tv.grad.allFinite()) return TargetValue{};
  }
  tv.finite = std::isfinite(tv.value);
  if (!tv.finite) return TargetValue{};
  return tv;
}

}  // namespace srn
