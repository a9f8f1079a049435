#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>

#include "srn/lna.hpp"
#include "srn/observation.hpp"
#include "srn/parameters.hpp"
#include "srn/reaction_network.hpp"
#include "srn/rng.hpp"

namespace srn {

/// Independent uniform priors over the natural-scale parameter vector,
/// treated as an open box (density zero on the boundary).
struct UniformPrior {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool in_support(const Eigen::VectorXd& eta) const {
    return eta.allFinite() && (eta.array() > lo.array()).all() &&
           (eta.array() < hi.array()).all();
  }
  double log_density() const { return -(hi - lo).array().log().sum(); }
  Eigen::VectorXd sample(Rng& rng) const {
    Eigen::VectorXd eta(dim());
    for (int l = 0; l < dim(); ++l) eta(l) = rng.uniform(lo(l), hi(l));
    return eta;
  }

  void validate() const;
};

/// Result of a target-density evaluation. `finite` is false outside the
/// prior support and on numerical blow-up of the likelihood (including a
/// non-finite gradient when one was requested).
struct TargetValue {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
  bool has_grad = false;
  bool finite = false;
};

/// A log-density (with optional gradient) over R^n, the interface the MCMC
/// kernels sample from.
class Target {
 public:
  virtual ~Target() = default;
  virtual int dim() const = 0;
  virtual TargetValue eval(const Eigen::VectorXd& x, bool need_grad) = 0;
};

struct PosteriorEval {
  double logpost = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad_eta;
  bool finite = false;
};

/// Log posterior density of the natural-scale parameters (priors plus filter
/// marginal log-likelihood, Gaussian normalizing constants included) and its
/// gradient. Non-finite filter output is flagged, not thrown.
PosteriorEval log_posterior_eta(LnaFilter& filter, const Dataset& ds,
                                const ParameterVector& params,
                                const UniformPrior& prior, const LnaState& init,
                                const SolverConfig& cfg, LikelihoodVariant variant,
                                bool want_grad);

/// The MCMC target over x = log(eta). By default the log-transform Jacobian
/// (sum of x) is added so the chain targets the stated posterior of the
/// natural-scale parameters; include_log_jacobian=false drops it.
class LogPosterior : public Target {
 public:
  LogPosterior(const ReactionNetwork& net, const Dataset& ds,
               const UniformPrior& prior, const LnaState& init,
               const SolverConfig& cfg, LikelihoodVariant variant,
               bool include_log_jacobian = true);

  int dim() const override { return prior_.dim(); }
  TargetValue eval(const Eigen::VectorXd& x, bool need_grad) override;

  const UniformPrior& prior() const { return prior_; }
  int kinetic_param_count() const { return n_theta_; }

 private:
  const Dataset* ds_;
  UniformPrior prior_;
  LnaState init_;
  SolverConfig cfg_;
  LikelihoodVariant variant_;
  bool include_log_jacobian_;
  int n_theta_;
  LnaFilter filter_;
};

}  // namespace srn
