#include "srn/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srn/rng.hpp"

namespace srn {

const CountVector& Trajectory::state_at(double t) const {
  // index of the last jump time <= t
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return initial_state;
  return states[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

Trajectory ssa_simulate(const ReactionNetwork& net, const Eigen::VectorXd& theta,
                        const CountVector& x0, double t_end, std::uint64_t seed,
                        const SsaOptions& options) {
  const int J = net.species_count();
  const int K = net.reaction_count();
  if (x0.size() != J) throw std::invalid_argument("initial state length mismatch");
  if ((x0.array() < 0).any()) throw std::invalid_argument("initial counts must be non-negative");
  if (!(t_end > 0.0)) throw std::invalid_argument("end time must be positive");

  std::vector<CountVector> change(K);
  for (int k = 0; k < K; ++k)
    change[k] = net.reactions()[k].net_change().cast<std::int64_t>();

  Rng rng(seed);
  Trajectory traj;
  traj.initial_state = x0;
  traj.horizon = t_end;

  CountVector x = x0;
  Eigen::VectorXd omega(K);
  double t = 0.0;
  std::int64_t events = 0;
  while (true) {
    omega = propensities(net, x.cast<double>(), theta);
    const double total = omega.sum();
    if (!(total > 0.0)) break;  // absorbing state
    t += rng.exponential(total);
    if (t > t_end) break;
    // pick the firing channel proportionally to its propensity
    double u = rng.uniform01() * total;
    int k = 0;
    for (; k < K - 1; ++k) {
      u -= omega(k);
      if (u <= 0.0) break;
    }
    x += change[k];
    traj.jump_times.push_back(t);
    traj.states.push_back(x);
    if (++events >= options.max_events)
      throw std::runtime_error("event cap exceeded; runaway reaction network");
  }
  return traj;
}

Dataset observe(std::span<const Trajectory> trajectories,
                const ObservationModel& model, double system_size,
                std::uint64_t seed) {
  if (trajectories.size() != static_cast<std::size_t>(model.batch))
    throw std::invalid_argument("need one trajectory per batch element");
  for (const Trajectory& traj : trajectories) {
    if (model.times(0) < 0.0 || model.times(model.time_count() - 1) > traj.horizon)
      throw std::invalid_argument("observation time beyond trajectory horizon");
  }

  Rng rng(seed);
  Dataset ds;
  ds.model = model;
  ds.y.resize(model.time_count());
  for (int h = 0; h < model.time_count(); ++h) {
    const auto& set = model.observed[h];
    const int d = static_cast<int>(set.size());
    Eigen::VectorXd yh(model.batch * d);
    for (int m = 0; m < model.batch; ++m) {
      const CountVector& x = trajectories[m].state_at(model.times(h));
      for (int i = 0; i < d; ++i) {
        const double conc = static_cast<double>(x(set[i])) / system_size;
        const double sd = std::sqrt(model.noise_variances.at(set[i]));
        yh(m * d + i) = conc + sd * rng.normal();
      }
    }
    ds.y[h] = std::move(yh);
  }
  return ds;
}

}  // namespace srn
