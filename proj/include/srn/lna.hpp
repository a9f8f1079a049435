#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "srn/observation.hpp"
#include "srn/parameters.hpp"
#include "srn/reaction_network.hpp"

namespace srn {

/// Running state of the Gaussian state approximation: deterministic path
/// mean, perturbation mean (nonzero only before the first measurement
/// update), and covariance.
struct LnaState {
  Eigen::VectorXd mean;
  Eigen::VectorXd pert_mean;
  Eigen::MatrixXd cov;
  double time = 0.0;

  static LnaState make(Eigen::VectorXd mean, Eigen::MatrixXd cov, double time = 0.0);
};

/// Parameter sensitivities of the filter state, ordered kinetic constants
/// first and noise variances last. Covariance sensitivities are stored as
/// one J x (J*L) matrix (slice l in columns [l*J, (l+1)*J)); slices stay
/// symmetric.
struct Sensitivities {
  Eigen::MatrixXd d_mean;  // J x L
  Eigen::MatrixXd d_cov;   // J x (J*L)
  int state_dim = 0;

  static Sensitivities zero(int state_dim, int param_dim);
  int param_dim() const {
    return state_dim > 0 ? static_cast<int>(d_cov.cols()) / state_dim : 0;
  }
  auto cov_slice(int l) { return d_cov.middleCols(l * state_dim, state_dim); }
  auto cov_slice(int l) const { return d_cov.middleCols(l * state_dim, state_dim); }
};

/// Time-discretization settings for the moment recursions. Either a fixed
/// substep count per observation interval or a target substep length.
struct SolverConfig {
  int substeps = 100;
  double dz_target = 0.0;   // when > 0, substeps = ceil(dt / dz_target)
  double jitter = 1e-9;     // relative diagonal inflation on factorization failure

  int steps_for(double dt) const;
};

enum class LikelihoodVariant {
  bayesian_updating,  // measurement posteriors restart the moment recursions
  original_lna,       // moments propagate once, no posterior feedback
};

struct FilterStepRecord {
  double time = 0.0;
  Eigen::VectorXd prior_mean;   // propagated mean before the update
  Eigen::MatrixXd prior_cov;
  Eigen::VectorXd post_mean;    // posterior after the update
  Eigen::MatrixXd post_cov;
  double log_pred = 0.0;
};

struct FilterOutput {
  double loglik = 0.0;
  bool finite = false;          // false on numerical blow-up
  Eigen::VectorXd grad;         // d loglik / d eta, empty unless requested
  LnaState final_state;
  std::vector<FilterStepRecord> steps;  // filled when diagnostics requested
};

/// One Kalman-style measurement update of a Gaussian state, with optional
/// propagation of parameter sensitivities through the update formulas.
///
/// noise_positions_per_param lists, for every parameter, the observation
/// components whose noise variance is that parameter (empty for kinetic
/// constants). The innovation covariance is factorized symmetrically; on
/// failure the diagonal is inflated by (1 + jitter * 2^m) for m = 0..5
/// before giving up (ok = false).
struct KalmanUpdateResult {
  double log_pred = 0.0;
  bool ok = false;
};
KalmanUpdateResult kalman_update(LnaState& state, Sensitivities* sens,
                                 const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& G,
                                 const Eigen::VectorXd& noise_diag,
                                 const std::vector<std::vector<int>>& noise_positions_per_param,
                                 double jitter, Eigen::VectorXd* grad_log_pred,
                                 bool apply_posterior = true);

/// Euler propagator for the moment recursions of one network, with the
/// matching discrete-time sensitivity recursion. The sensitivity update is
/// the exact derivative of the implemented Euler step, so likelihood
/// gradients agree with finite differences of the discretized likelihood to
/// machine precision.
class LnaPropagator {
 public:
  LnaPropagator(const ReactionNetwork& net, int param_dim);

  /// Advances state (and sensitivities when given) by `substeps` Euler steps
  /// of length dt / substeps. Drift, its state Jacobian, and the diffusion
  /// matrix are evaluated at the pre-step mean; the covariance is
  /// symmetrized after every substep.
  void predict(LnaState& state, Sensitivities* sens, const Eigen::VectorXd& theta,
               double dt, int substeps);

  const ReactionNetwork& network() const { return *net_; }
  int param_dim() const { return L_; }

 private:
  void propagate_sensitivities(const LnaState& state, Sensitivities& sens, double dz);

  const ReactionNetwork* net_;
  int J_, K_, N_, L_;
  RateEval rates_;
  std::vector<Eigen::MatrixXd> outer_;  // per reaction, c_k c_k^T
  std::vector<char> second_order_;      // reaction has a nonzero rate Hessian
  std::vector<int> param_of_;           // kinetic-constant index per reaction
  Eigen::VectorXd mu_, gcol_, tcol_;
  Eigen::MatrixXd A_, D_, T1_, sym_, U_;
  Eigen::MatrixXd DVe_, T1all_;
  std::vector<Eigen::MatrixXd> MK_;  // per reaction, Hessian applied to d_mean
};

/// Convenience wrapper over LnaPropagator for one-off propagation.
void lna_predict(const ReactionNetwork& net, LnaState& state, Sensitivities* sens,
                 const Eigen::VectorXd& theta, double dt, int substeps);

/// Sequential filter for one (network, observation model) pair: moment
/// propagation between observation times, measurement updates, the marginal
/// log-likelihood of a dataset, and its exact parameter gradient via the
/// forward sensitivity recursion. Reusable across evaluations; not
/// thread-safe (use one instance per thread).
class LnaFilter {
 public:
  LnaFilter(const ReactionNetwork& net, const ObservationModel& model);

  /// Marginal log-likelihood of the dataset under parameters `params`,
  /// starting from the user-supplied initial moments. In the
  /// bayesian_updating variant each measurement posterior reinitializes the
  /// moment recursion (perturbation mean is dropped after the first update);
  /// in the original_lna variant the moments propagate once from the initial
  /// values and the per-time predictive densities are accumulated without
  /// posterior feedback.
  FilterOutput log_likelihood(const Dataset& ds, const ParameterVector& params,
                              const LnaState& init, const SolverConfig& cfg,
                              LikelihoodVariant variant, bool want_grad,
                              bool want_diagnostics = false);

  int param_dim() const { return L_; }
  const std::vector<int>& observed_union() const { return jy_; }

 private:
  const ReactionNetwork* net_;
  ObservationModel model_;
  LnaPropagator propagator_;
  int J_, N_, L_;
  std::vector<int> jy_;
  std::vector<Eigen::MatrixXd> G_;  // selection matrix per observation time
  std::vector<std::vector<std::vector<int>>> noise_positions_;  // per time, per param
};

}  // namespace srn
