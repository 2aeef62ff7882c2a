#pragma once

#include <utility>
#include <vector>

#include "lipdyn/linalg.hpp"
#include "lipdyn/rng.hpp"

namespace lipdyn {

// Feed-forward net: ReLU between layers, identity at the output. Layer l maps
// R^{in_l} -> R^{out_l} with weight theta^(l) in R^{out_l x in_l} and a bias.
struct MlpSpec {
  std::vector<std::pair<int, int>> layer_dims;  // (in, out) per layer

  static MlpSpec from_dims(const std::vector<int>& dims);
  // 784 -> 512 -> 256 -> 10, three parameterized layers.
  static MlpSpec table_default() { return from_dims({784, 512, 256, 10}); }

  int num_layers() const { return static_cast<int>(layer_dims.size()); }
  int input_dim() const { return layer_dims.front().first; }
  int output_dim() const { return layer_dims.back().second; }
  void validate() const;
};

struct MlpState {
  MlpSpec spec;
  std::vector<Matrix> weights;  // out x in
  std::vector<Vector> biases;   // out
  long step = 0;
  double eta = 0.0;
};

// Kaiming init: entries N(0, 2/fan_in), biases zero.
MlpState init_mlp(const MlpSpec& spec, Rng& rng, double eta);

struct ForwardCache {
  Matrix input;                 // in_0 x M, columns are samples
  std::vector<Matrix> preacts;  // z^(l), out_l x M
  std::vector<Matrix> acts;     // post-activation, out_l x M
};

// batch_inputs is M x d (samples are rows); returns logits M x c.
Matrix forward(const MlpState& state, const Matrix& batch_inputs,
               ForwardCache* cache = nullptr);

enum class NoiseMode { none, gaussian, uniform, zero_mix };

// Noisy-supervision settings: per-sample gradients become
// sqrt(rho) * g_i + sqrt(1-rho) * n_i with n_i drawn per coordinate
// (gaussian sigma / uniform half_width; zero_mix draws nothing).
// label_corruption_eps resamples each label uniformly with probability eps.
struct SupervisionNoise {
  NoiseMode mode = NoiseMode::none;
  double rho = 1.0;
  double sigma = 1.0;
  double half_width = 0.5;
  double label_corruption_eps = 0.0;
  void validate() const;
};

enum class Loss { cross_entropy, mse };

// One mini-batch of vectorized per-sample weight gradients for one layer.
// Row i is vec(d loss_i / d theta^(l)), column-major, length out_l * in_l.
struct PerSampleGradBatch {
  int layer = 0;
  RowMatrix rows;  // M x (out_l * in_l)
};

struct MeanGradients {
  std::vector<Matrix> weights;  // out x in per layer
  std::vector<Vector> biases;
  double mean_loss = 0.0;
};

struct PerSampleGradients {
  std::vector<PerSampleGradBatch> layers;
  std::vector<Vector> bias_grads;  // mini-batch mean bias gradient per layer
  double mean_loss = 0.0;

  // Row means reshaped to weight matrices; exactly the gradients SGD uses.
  MeanGradients to_mean(const MlpSpec& spec) const;
};

// Per-sample gradients of the (possibly noise-mixed) instance loss.
// mean_loss is the un-noised data loss averaged over the batch.
PerSampleGradients per_sample_gradients(const MlpState& state, const Matrix& inputs,
                                        const std::vector<int>& labels,
                                        const SupervisionNoise& noise, Rng& noise_rng,
                                        Loss loss = Loss::cross_entropy);

// Mini-batch mean gradients without materializing per-sample rows. For modes
// that inject randomness this delegates to the per-sample path so the draws
// are identical in distribution and per seed.
MeanGradients batch_gradients(const MlpState& state, const Matrix& inputs,
                              const std::vector<int>& labels,
                              const SupervisionNoise& noise, Rng& noise_rng,
                              Loss loss = Loss::cross_entropy);

// Each label is independently replaced by a uniform draw over all classes
// (including its own) with probability eps.
std::vector<int> corrupt_labels(Rng& rng, const std::vector<int>& labels, double eps,
                                int num_classes);

// theta <- theta - eta * grad for every weight and bias; increments the step
// counter. Throws NumericError naming the layer if an update is non-finite.
void sgd_step(MlpState& state, const MeanGradients& grads);

}  // namespace lipdyn
