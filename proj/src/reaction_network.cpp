#include "srn/reaction_network.hpp"

#include <stdexcept>

namespace srn {

ReactionNetwork::ReactionNetwork(std::vector<Reaction> reactions,
                                 int species_count, double system_size,
                                 std::vector<std::string> species_names,
                                 std::vector<std::string> param_names)
    : reactions_(std::move(reactions)),
      species_count_(species_count),
      system_size_(system_size),
      species_names_(std::move(species_names)),
      param_names_(std::move(param_names)) {
  if (species_count_ < 1) throw std::invalid_argument("need at least one species");
  if (reactions_.empty()) throw std::invalid_argument("need at least one reaction");
  if (!(system_size_ > 0.0)) throw std::invalid_argument("system size must be positive");

  const int J = species_count_;
  const int K = reaction_count();
  stoich_.resize(J, K);
  factors_.resize(K);
  int max_param = -1;
  for (int k = 0; k < K; ++k) {
    const Reaction& r = reactions_[k];
    if (r.reactants.size() != J || r.products.size() != J)
      throw std::invalid_argument("reaction coefficient length mismatch");
    if ((r.reactants.array() < 0).any() || (r.products.array() < 0).any())
      throw std::invalid_argument("stoichiometric coefficients must be non-negative");
    if (r.rate_param < 0)
      throw std::invalid_argument("rate parameter index must be non-negative");
    Eigen::VectorXi change = r.net_change();
    if (change.isZero())
      throw std::invalid_argument("zero reaction vector");
    stoich_.col(k) = change.cast<double>();
    for (int j = 0; j < J; ++j)
      if (r.reactants(j) > 0) factors_[k].push_back({j, r.reactants(j)});
    max_param = std::max(max_param, r.rate_param);
  }
  param_count_ = max_param + 1;
  reactions_of_param_.resize(param_count_);
  for (int k = 0; k < K; ++k)
    reactions_of_param_[reactions_[k].rate_param].push_back(k);

  if (!species_names_.empty() && static_cast<int>(species_names_.size()) != J)
    throw std::invalid_argument("species name count mismatch");
  if (!param_names_.empty() && static_cast<int>(param_names_.size()) != param_count_)
    throw std::invalid_argument("parameter name count mismatch");
}

RateEval ReactionNetwork::make_rate_eval() const {
  const int J = species_count_;
  const int K = reaction_count();
  RateEval ev;
  ev.value.setZero(K);
  ev.jac_state.setZero(K, J);
  ev.dparam.setZero(K);
  ev.jac_state_dparam.setZero(K, J);
  ev.hess_state.assign(K, Eigen::MatrixXd::Zero(J, J));
  return ev;
}

namespace {

// prod_j s_j^{p_j}, with the exponent of `dec_a` and `dec_b` (when >= 0)
// lowered by one each. Callers guarantee the lowered exponents stay >= 0.
double monomial_partial(const Eigen::VectorXd& s, const auto& factors,
                        int dec_a = -1, int dec_b = -1) {
  double prod = 1.0;
  for (const auto& f : factors) {
    int e = f.exponent - (f.species == dec_a) - (f.species == dec_b);
    for (int i = 0; i < e; ++i) prod *= s(f.species);
  }
  return prod;
}

}  // namespace

void ReactionNetwork::eval_rates(const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& theta, int order,
                                 RateEval& out) const {
  // Only the entries matching each reaction's reactant pattern are ever
  // written; everything else keeps the zeros set by make_rate_eval(). A
  // negative monomial means some s_j < 0: the whole rate is clamped to 0
  // together with its derivatives.
  const int K = reaction_count();
  for (int k = 0; k < K; ++k) {
    const auto& factors = factors_[k];
    const double th = theta(reactions_[k].rate_param);
    const double mono = monomial_partial(s, factors);
    const bool clamped = mono < 0.0;
    out.value(k) = clamped ? 0.0 : th * mono;
    if (order < 1) continue;
    out.dparam(k) = clamped ? 0.0 : mono;
    for (const auto& fa : factors) {
      const double g =
          clamped ? 0.0 : fa.exponent * monomial_partial(s, factors, fa.species);
      out.jac_state(k, fa.species) = th * g;
      if (order >= 2) {
        out.jac_state_dparam(k, fa.species) = g;
        for (const auto& fb : factors) {
          double h = 0.0;
          if (!clamped) {
            if (fa.species == fb.species) {
              h = fa.exponent >= 2
                      ? fa.exponent * (fa.exponent - 1) *
                            monomial_partial(s, factors, fa.species, fa.species)
                      : 0.0;
            } else {
              h = fa.exponent * fb.exponent *
                  monomial_partial(s, factors, fa.species, fb.species);
            }
          }
          out.hess_state[k](fa.species, fb.species) = th * h;
        }
      }
    }
  }
}

const MassActionRateLaw& mass_action_kinetics() {
  static const MassActionRateLaw law;
  return law;
}

Eigen::VectorXd reaction_rates(const ReactionNetwork& net,
                               const Eigen::VectorXd& s,
                               const Eigen::VectorXd& theta) {
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 0, ev);
  return ev.value;
}

Eigen::VectorXd drift(const ReactionNetwork& net, const Eigen::VectorXd& s,
                      const Eigen::VectorXd& theta) {
  return net.stoichiometry() * reaction_rates(net, s, theta);
}

Eigen::MatrixXd diffusion_matrix(const ReactionNetwork& net,
                                 const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd& C = net.stoichiometry();
  Eigen::VectorXd v = reaction_rates(net, s, theta);
  return C * v.asDiagonal() * C.transpose();
}

Eigen::MatrixXd drift_jacobian_state(const ReactionNetwork& net,
                                     const Eigen::VectorXd& s,
                                     const Eigen::VectorXd& theta) {
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 1, ev);
  return net.stoichiometry() * ev.jac_state;
}

Eigen::MatrixXd drift_grad_params(const ReactionNetwork& net,
                                  const Eigen::VectorXd& s,
                                  const Eigen::VectorXd& theta) {
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 1, ev);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(net.species_count(), net.param_count());
  for (int n = 0; n < net.param_count(); ++n)
    for (int k : net.reactions_of_param(n))
      out.col(n) += net.stoichiometry().col(k) * ev.dparam(k);
  return out;
}

std::vector<Eigen::MatrixXd> diffusion_grad_params(const ReactionNetwork& net,
                                                   const Eigen::VectorXd& s,
                                                   const Eigen::VectorXd& theta) {
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 1, ev);
  const Eigen::MatrixXd& C = net.stoichiometry();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(net.param_count());
  for (int n = 0; n < net.param_count(); ++n) {
    Eigen::VectorXd dv = Eigen::VectorXd::Zero(net.reaction_count());
    for (int k : net.reactions_of_param(n)) dv(k) = ev.dparam(k);
    out.push_back(C * dv.asDiagonal() * C.transpose());
  }
  return out;
}

std::vector<Eigen::MatrixXd> diffusion_jacobian_state(
    const ReactionNetwork& net, const Eigen::VectorXd& s,
    const Eigen::VectorXd& theta) {
  RateEval ev = net.make_rate_eval();
  net.eval_rates(s, theta, 1, ev);
  const Eigen::MatrixXd& C = net.stoichiometry();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(net.species_count());
  for (int j = 0; j < net.species_count(); ++j) {
    Eigen::VectorXd dv = ev.jac_state.col(j);
    out.push_back(C * dv.asDiagonal() * C.transpose());
  }
  return out;
}

Eigen::VectorXd propensities(const ReactionNetwork& net,
                             const Eigen::VectorXd& counts,
                             const Eigen::VectorXd& theta) {
  const double omega = net.system_size();
  return omega * reaction_rates(net, counts / omega, theta);
}

}  // namespace srn
