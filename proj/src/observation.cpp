#include "srn/observation.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace srn {

std::vector<int> ObservationModel::observed_union() const {
  std::set<int> u;
  for (const auto& set : observed) u.insert(set.begin(), set.end());
  return {u.begin(), u.end()};
}

Eigen::MatrixXd ObservationModel::selection_matrix(int h,
                                                   int species_count) const {
  const auto& set = observed[h];
  const int d = static_cast<int>(set.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(batch * d, species_count);
  for (int m = 0; m < batch; ++m)
    for (int i = 0; i < d; ++i) G(m * d + i, set[i]) = 1.0;
  return G;
}

Eigen::VectorXd ObservationModel::noise_diag(int h) const {
  const auto& set = observed[h];
  const int d = static_cast<int>(set.size());
  Eigen::VectorXd diag(batch * d);
  for (int m = 0; m < batch; ++m)
    for (int i = 0; i < d; ++i) diag(m * d + i) = noise_variances.at(set[i]);
  return diag;
}

void ObservationModel::validate(int species_count) const {
  if (times.size() == 0) throw std::invalid_argument("no observation times");
  for (int h = 1; h < times.size(); ++h)
    if (!(times(h) > times(h - 1)))
      throw std::invalid_argument("observation times must be strictly increasing");
  if (static_cast<int>(observed.size()) != times.size())
    throw std::invalid_argument("one observed-species set required per time");
  if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
  for (const auto& set : observed) {
    if (set.empty()) throw std::invalid_argument("empty observed-species set");
    if (!std::is_sorted(set.begin(), set.end()))
      throw std::invalid_argument("observed-species sets must be ascending");
    for (int j : set)
      if (j < 0 || j >= species_count)
        throw std::invalid_argument("observed species index out of range");
  }
  std::vector<int> u = observed_union();
  if (u.size() != noise_variances.size())
    throw std::invalid_argument("noise variances must cover exactly the observed species");
  for (int j : u) {
    auto it = noise_variances.find(j);
    if (it == noise_variances.end())
      throw std::invalid_argument("missing noise variance for species " + std::to_string(j + 1));
    if (!(it->second >= 0.0))
      throw std::invalid_argument("noise variance must be non-negative");
  }
}

bool ObservationModel::operator==(const ObservationModel& other) const {
  return times.size() == other.times.size() && times == other.times &&
         observed == other.observed && batch == other.batch &&
         noise_variances == other.noise_variances;
}

void Dataset::validate() const {
  if (y.size() != static_cast<std::size_t>(model.time_count()))
    throw std::invalid_argument("observation count does not match time count");
  for (int h = 0; h < model.time_count(); ++h)
    if (y[h].size() != model.obs_dim(h))
      throw std::invalid_argument("observation dimension mismatch at time index " +
                                  std::to_string(h));
}

}  // namespace srn
