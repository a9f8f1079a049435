#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "srn/observation.hpp"
#include "srn/reaction_network.hpp"

namespace srn {

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// One exact jump-process path: the molecule-count state after every
/// reaction event. The path is piecewise constant and right-continuous;
/// state_at(t) returns the state after the last event at or before t.
struct Trajectory {
  CountVector initial_state;
  std::vector<double> jump_times;     // strictly increasing
  std::vector<CountVector> states;    // state after each event
  double horizon = 0.0;               // simulated time span [0, horizon]

  const CountVector& state_at(double t) const;
};

struct SsaOptions {
  std::int64_t max_events = 100'000'000;  // guard against runaway networks
};

/// Exact stochastic simulation (direct method): exponential waiting times
/// with the total propensity as rate, event channel chosen proportionally
/// to its propensity. Stops at t_end or when the state is absorbing.
Trajectory ssa_simulate(const ReactionNetwork& net, const Eigen::VectorXd& theta,
                        const CountVector& x0, double t_end, std::uint64_t seed,
                        const SsaOptions& options = {});

/// Turns simulated paths into a noisy, partially observed dataset. One
/// trajectory per batch element; counts are converted to concentrations via
/// the system size, the observed components selected, and independent
/// Gaussian noise added with the model's per-species variances.
Dataset observe(std::span<const Trajectory> trajectories,
                const ObservationModel& model, double system_size,
                std::uint64_t seed);

}  // namespace srn
