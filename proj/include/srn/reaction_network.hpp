#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace srn {

/// One reaction channel: reactant/product stoichiometry and the index of the
/// kinetic constant that scales its mass-action rate.
struct Reaction {
  Eigen::VectorXi reactants;  // molecules consumed per firing
  Eigen::VectorXi products;   // molecules produced per firing
  int rate_param = 0;         // index into the kinetic-rate vector

  Eigen::VectorXi net_change() const { return products - reactants; }
};

/// Rate values and derivatives at one (state, rates) point, for all
/// reactions at once. Buffers are sized by ReactionNetwork::make_rate_eval()
/// and reused across evaluations.
struct RateEval {
  Eigen::VectorXd value;              // per-reaction rate
  Eigen::MatrixXd jac_state;          // d rate_k / d s_j            (K x J)
  Eigen::VectorXd dparam;             // d rate_k / d theta_{n(k)}   (K)
  Eigen::MatrixXd jac_state_dparam;   // d^2 rate_k / d s_j d theta_{n(k)}
  std::vector<Eigen::MatrixXd> hess_state;  // per reaction, d^2 rate / ds ds
};

/// A mass-action reaction network: species, reactions, stoichiometry matrix,
/// and system size. Immutable after construction; safe to share across
/// threads.
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<Reaction> reactions, int species_count,
                  double system_size = 1.0,
                  std::vector<std::string> species_names = {},
                  std::vector<std::string> param_names = {});

  int species_count() const { return species_count_; }
  int reaction_count() const { return static_cast<int>(reactions_.size()); }
  int param_count() const { return param_count_; }
  double system_size() const { return system_size_; }
  const Eigen::MatrixXd& stoichiometry() const { return stoich_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const std::vector<std::string>& species_names() const { return species_names_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  /// Reactions scaled by kinetic constant n (several when constants are shared).
  const std::vector<int>& reactions_of_param(int n) const {
    return reactions_of_param_[n];
  }

  RateEval make_rate_eval() const;

  /// Mass-action rates and their derivatives at concentration s.
  /// order 0 fills value only, 1 adds first derivatives, 2 adds second
  /// derivatives. A rate that evaluates negative (possible only when some
  /// s_j < 0) is clamped to 0 together with all of its derivatives, keeping
  /// drift/diffusion and their derivatives mutually consistent.
  void eval_rates(const Eigen::VectorXd& s, const Eigen::VectorXd& theta,
                  int order, RateEval& out) const;

 private:
  struct Factor {
    int species;
    int exponent;
  };

  std::vector<Reaction> reactions_;
  std::vector<std::vector<Factor>> factors_;  // nonzero reactant exponents
  Eigen::MatrixXd stoich_;                    // J x K
  std::vector<std::vector<int>> reactions_of_param_;
  int species_count_ = 0;
  int param_count_ = 0;
  double system_size_ = 1.0;
  std::vector<std::string> species_names_;
  std::vector<std::string> param_names_;
};

/// Extension point for rate families beyond mass action. Implementations
/// must fill RateEval with derivatives consistent with the values.
class RateLaw {
 public:
  virtual ~RateLaw() = default;
  virtual void eval(const ReactionNetwork& net, const Eigen::VectorXd& s,
                    const Eigen::VectorXd& theta, int order,
                    RateEval& out) const = 0;
};

/// The built-in mass-action law (rate = theta * prod_j s_j^{p_kj}).
class MassActionRateLaw final : public RateLaw {
 public:
  void eval(const ReactionNetwork& net, const Eigen::VectorXd& s,
            const Eigen::VectorXd& theta, int order,
            RateEval& out) const override {
    net.eval_rates(s, theta, order, out);
  }
};

const MassActionRateLaw& mass_action_kinetics();

// Convenience entry points over the mass-action law. These allocate their
// results; the LNA filter uses the buffered eval_rates path instead.

Eigen::VectorXd reaction_rates(const ReactionNetwork& net,
                               const Eigen::VectorXd& s,
                               const Eigen::VectorXd& theta);

/// Drift of the concentration process: stoichiometry * rates.
Eigen::VectorXd drift(const ReactionNetwork& net, const Eigen::VectorXd& s,
                      const Eigen::VectorXd& theta);

/// Diffusion matrix C diag(rates) C^T; symmetric PSD for s >= 0.
Eigen::MatrixXd diffusion_matrix(const ReactionNetwork& net,
                                 const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& theta);

Eigen::MatrixXd drift_jacobian_state(const ReactionNetwork& net,
                                     const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& theta);

/// d drift / d theta_n, columns over kinetic constants (J x N).
Eigen::MatrixXd drift_grad_params(const ReactionNetwork& net,
                                  const Eigen::VectorXd& s,
                                  const Eigen::VectorXd& theta);

/// d diffusion / d theta_n, one J x J slice per kinetic constant.
std::vector<Eigen::MatrixXd> diffusion_grad_params(const ReactionNetwork& net,
                                                   const Eigen::VectorXd& s,
                                                   const Eigen::VectorXd& theta);

/// d diffusion / d s_j, one J x J slice per species.
std::vector<Eigen::MatrixXd> diffusion_jacobian_state(
    const ReactionNetwork& net, const Eigen::VectorXd& s,
    const Eigen::VectorXd& theta);

/// Propensities in molecule counts: Omega * rates(x / Omega).
Eigen::VectorXd propensities(const ReactionNetwork& net,
                             const Eigen::VectorXd& counts,
                             const Eigen::VectorXd& theta);

}  // namespace srn
