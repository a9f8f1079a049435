#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

namespace srn {

/// When and what is measured: observation times, the (possibly asynchronous)
/// per-time sets of observed species, the experiment batch size, and the
/// true measurement-noise variances used when generating synthetic data.
///
/// The selection matrix for time h stacks `batch` copies of the 0/1 rows
/// picking the observed species, and the matching noise covariance is
/// diagonal with the per-species variances repeated per batch.
struct ObservationModel {
  Eigen::VectorXd times;                   // strictly increasing
  std::vector<std::vector<int>> observed;  // 0-based species, ascending, per time
  int batch = 1;
  std::map<int, double> noise_variances;   // species -> variance

  int time_count() const { return static_cast<int>(times.size()); }
  int obs_dim(int h) const {
    return batch * static_cast<int>(observed[h].size());
  }
  /// Ascending union of all observed species.
  std::vector<int> observed_union() const;
  /// Selection matrix mapping a full state to the observed stack at time h.
  Eigen::MatrixXd selection_matrix(int h, int species_count) const;
  /// Diagonal of the measurement-noise covariance at time h.
  Eigen::VectorXd noise_diag(int h) const;

  void validate(int species_count) const;
  bool operator==(const ObservationModel& other) const;
};

/// Recorded observations, one stacked vector per observation time, plus the
/// model that produced them and optional synthetic-data provenance.
struct Dataset {
  ObservationModel model;
  std::vector<Eigen::VectorXd> y;

  struct Provenance {
    bool present = false;
    std::uint64_t seed = 0;
    Eigen::VectorXd theta;
    std::string config_hash;
  };
  Provenance provenance;

  void validate() const;
};

}  // namespace srn
