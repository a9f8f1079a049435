#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace srn {

/// The inferred parameter block: kinetic rate constants followed by
/// measurement-noise variances (one per ever-observed species, in ascending
/// species order). Provides the concatenated and log-scale views used by
/// the samplers.
struct ParameterVector {
  Eigen::VectorXd theta;  // kinetic rate constants
  Eigen::VectorXd sigma;  // noise variances

  int dim() const { return static_cast<int>(theta.size() + sigma.size()); }

  bool all_positive() const {
    return (theta.array() > 0.0).all() && (sigma.array() > 0.0).all();
  }

  Eigen::VectorXd concat() const {
    Eigen::VectorXd eta(dim());
    eta << theta, sigma;
    return eta;
  }

  Eigen::VectorXd log_concat() const { return concat().array().log(); }

  static ParameterVector from_concat(const Eigen::VectorXd& eta, int n_theta) {
    if (n_theta < 0 || n_theta > eta.size())
      throw std::invalid_argument("bad kinetic-parameter count");
    ParameterVector p;
    p.theta = eta.head(n_theta);
    p.sigma = eta.tail(eta.size() - n_theta);
    return p;
  }

  static ParameterVector from_log_concat(const Eigen::VectorXd& log_eta,
                                         int n_theta) {
    return from_concat(log_eta.array().exp(), n_theta);
  }
};

}  // namespace srn
