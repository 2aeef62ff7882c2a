#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipdyn/mlp.hpp"

namespace lipdyn {

// Flat key=value experiment configuration. Every seed is explicit; nothing is
// read from the environment. `canonical_text` is the hashed, reproducible
// representation echoed into run manifests.
struct ExperimentConfig {
  std::string dataset = "blobs";  // blobs | mnist

  int blobs_n_samples = 4000;
  int blobs_n_features = 20;
  int blobs_n_classes = 4;
  double blobs_spread = 0.1;

  std::string mnist_path;
  int mnist_subset = 0;  // 0 = all

  std::vector<int> mlp_dims = {784, 512, 256, 10};
  Loss loss = Loss::cross_entropy;

  double eta = 0.01;
  int batch_size = 128;
  int steps = 1000;

  std::uint64_t init_seed = 1;
  std::uint64_t sampling_seed = 1;
  std::uint64_t noise_seed = 1;

  SupervisionNoise noise;

  // Sigma / drift re-estimation stride; terms are carried forward in between.
  int noise_stride = 1;
  // 0 = auto: every step for runs <= 5000 steps, every 10 beyond.
  int record_stride = 0;
  // auto = full-dataset gradient when N <= 20000, else mini-batch mean.
  std::string drift = "auto";  // auto | full | minibatch

  std::string out_dir = "runs/out";

  // Implication-suite grids.
  std::vector<double> suite_rho_grid = {1.0, 0.6, 0.3, 0.1};
  std::vector<double> suite_eps_grid = {0.0, 0.25, 0.5, 0.75};
  std::vector<int> suite_batch_grid = {32, 64, 128, 256};
  int suite_seeds = 3;
  int suite_batch_seeds = 8;
  int suite_trajectory_seeds = 5;

  void validate() const;
  int effective_record_stride() const {
    if (record_stride > 0) return record_stride;
    return steps <= 5000 ? 1 : 10;
  }
  bool use_full_drift(int dataset_size) const {
    if (drift == "full") return true;
    if (drift == "minibatch") return false;
    return dataset_size <= 20000;
  }
};

ExperimentConfig parse_config_file(const std::string& path);

// "key=value" override, same keys as the file format.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

std::string canonical_config_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

// 17-significant-digit formatting; round-trips doubles exactly.
std::string format_double(double v);

}  // namespace lipdyn
