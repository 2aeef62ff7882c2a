#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipdyn/dynamics.hpp"

namespace lipdyn {

// One recorded training step. Observed quantities come from a fresh SVD of
// the post-update weights; the terms are the ones in effect for the step
// (re-evaluated on the noise-estimation stride).
struct TrajectoryRecord {
  long step = 0;
  double t = 0.0;  // step * eta
  NetworkTerms net;
  double e_z = 0.0;
  double var_z = 0.0;
  double e_k = 0.0;
  double var_k = 0.0;
  double z_path = 0.0;
  double noise_integral = 0.0;
  double k_observed = 0.0;  // product over layers of observed sigma1, > 0
  std::vector<double> sigma1_observed;
  double batch_loss = 0.0;
};

struct TrajectoryMeta {
  std::uint64_t init_seed = 0;
  std::uint64_t sampling_seed = 0;
  std::uint64_t noise_seed = 0;
  std::string config_hash;
  std::string version;
  double eta = 0.0;
  int num_layers = 0;
  long steps = 0;
  int dataset_size = 0;
  double wall_time_s = 0.0;
  double degenerate_fraction = 0.0;
  double z0 = 0.0;
  double final_full_loss = 0.0;  // un-noised data loss over the whole dataset
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  std::vector<double> noise_increments;  // per training step, not per record
  TrajectoryMeta meta;
};

}  // namespace lipdyn
