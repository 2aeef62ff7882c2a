#include "lipdyn/mlp.hpp"

#include <cmath>
#include <string>

namespace lipdyn {

MlpSpec MlpSpec::from_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ShapeError("MlpSpec: need at least input and output dims");
  MlpSpec s;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    s.layer_dims.emplace_back(dims[i], dims[i + 1]);
  }
  s.validate();
  return s;
}

void MlpSpec::validate() const {
  if (layer_dims.empty()) throw ShapeError("MlpSpec: no layers");
  for (std::size_t l = 0; l < layer_dims.size(); ++l) {
    if (layer_dims[l].first < 1 || layer_dims[l].second < 1) {
      throw ShapeError("MlpSpec: non-positive dim in layer " + std::to_string(l));
    }
    if (l > 0 && layer_dims[l].first != layer_dims[l - 1].second) {
      throw ShapeError("MlpSpec: layer " + std::to_string(l) +
                       " input does not chain from previous output");
    }
  }
}

void SupervisionNoise::validate() const {
  if (rho < 0.0 || rho > 1.0) throw ConfigError("SupervisionNoise: rho outside [0,1]");
  if (label_corruption_eps < 0.0 || label_corruption_eps > 1.0) {
    throw ConfigError("SupervisionNoise: label_corruption_eps outside [0,1]");
  }
  if (mode == NoiseMode::gaussian && sigma <= 0.0) {
    throw ConfigError("SupervisionNoise: gaussian mode needs sigma > 0");
  }
  if (mode == NoiseMode::uniform && half_width <= 0.0) {
    throw ConfigError("SupervisionNoise: uniform mode needs half_width > 0");
  }
}

MlpState init_mlp(const MlpSpec& spec, Rng& rng, double eta) {
  spec.validate();
  MlpState st;
  st.spec = spec;
  st.eta = eta;
  for (const auto& [in, out] : spec.layer_dims) {
    st.weights.push_back(gaussian_matrix(rng, out, in, std::sqrt(2.0 / in)));
    st.biases.push_back(Vector::Zero(out));
  }
  return st;
}

Matrix forward(const MlpState& state, const Matrix& batch_inputs, ForwardCache* cache) {
  const int L = state.spec.num_layers();
  if (batch_inputs.cols() != state.spec.input_dim()) {
    throw ShapeError("forward: input width " + std::to_string(batch_inputs.cols()) +
                     " != first layer input " + std::to_string(state.spec.input_dim()));
  }
  Matrix a = batch_inputs.transpose();  // in_0 x M
  if (cache) {
    cache->input = a;
    cache->preacts.assign(L, Matrix());
    cache->acts.assign(L, Matrix());
  }
  for (int l = 0; l < L; ++l) {
    Matrix z = state.weights[l] * a;
    z.colwise() += state.biases[l];
    if (cache) cache->preacts[l] = z;
    a = (l + 1 < L) ? z.cwiseMax(0.0) : std::move(z);
    if (cache) cache->acts[l] = a;
  }
  return a.transpose();  // M x c
}

namespace {

// Per-sample output-layer gradients d loss_i / d z^(L), one column per sample,
// plus the mean data loss.
Matrix output_deltas(const Matrix& logits_cm, const std::vector<int>& labels, Loss loss,
                     double* mean_loss) {
  const Eigen::Index c = logits_cm.rows();
  const Eigen::Index m = logits_cm.cols();
  Matrix delta(c, m);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw ShapeError("labels: class index out of range");
    if (loss == Loss::cross_entropy) {
      const double zmax = logits_cm.col(i).maxCoeff();
      const Vector e = (logits_cm.col(i).array() - zmax).exp();
      const double zsum = e.sum();
      delta.col(i) = e / zsum;
      delta(y, i) -= 1.0;
      total += std::log(zsum) + zmax - logits_cm(y, i);
    } else {
      delta.col(i) = logits_cm.col(i);
      delta(y, i) -= 1.0;
      total += 0.5 * delta.col(i).squaredNorm();
    }
  }
  *mean_loss = total / static_cast<double>(m);
  return delta;
}

void check_batch(const MlpState& state, const Matrix& inputs,
                 const std::vector<int>& labels) {
  if (inputs.rows() < 1) throw ShapeError("gradients: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw ShapeError("gradients: label count != batch size");
  }
  (void)state;
}

}  // namespace

PerSampleGradients per_sample_gradients(const MlpState& state, const Matrix& inputs,
                                        const std::vector<int>& labels,
                                        const SupervisionNoise& noise, Rng& noise_rng,
                                        Loss loss) {
  check_batch(state, inputs, labels);
  noise.validate();
  const int L = state.spec.num_layers();
  const Eigen::Index m = inputs.rows();

  ForwardCache cache;
  forward(state, inputs, &cache);

  PerSampleGradients out;
  out.layers.resize(L);
  out.bias_grads.resize(L);

  Matrix delta = output_deltas(cache.preacts[L - 1], labels, loss, &out.mean_loss);
  for (int l = L - 1; l >= 0; --l) {
    const Matrix& aprev = (l == 0) ? cache.input : cache.acts[l - 1];
    const Eigen::Index rows = state.weights[l].rows();
    const Eigen::Index cols = state.weights[l].cols();

    auto& batch = out.layers[l];
    batch.layer = l;
    batch.rows.resize(m, rows * cols);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::Map<Matrix> g(batch.rows.row(i).data(), rows, cols);
      g.noalias() = delta.col(i) * aprev.col(i).transpose();
    }
    out.bias_grads[l] = delta.rowwise().sum() / static_cast<double>(m);

    if (l > 0) {
      Matrix mask = (cache.preacts[l - 1].array() > 0.0).cast<double>();
      delta = (state.weights[l].transpose() * delta).cwiseProduct(mask);
    }
  }

  if (noise.mode != NoiseMode::none) {
    const double sig = std::sqrt(noise.rho);
    const double mix = std::sqrt(1.0 - noise.rho);
    for (int l = 0; l < L; ++l) {
      auto& rows = out.layers[l].rows;
      rows *= sig;
      if (noise.mode == NoiseMode::gaussian) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
          for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            rows(i, j) += mix * noise.sigma * noise_rng.gaussian();
          }
        }
      } else if (noise.mode == NoiseMode::uniform) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
          for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            rows(i, j) += mix * noise.half_width * (2.0 * noise_rng.uniform() - 1.0);
          }
        }
      }
      out.bias_grads[l] *= sig;
    }
  }
  return out;
}

MeanGradients PerSampleGradients::to_mean(const MlpSpec& spec) const {
  MeanGradients g;
  g.mean_loss = mean_loss;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto [in, out] = spec.layer_dims[l];
    Vector mean = layers[l].rows.colwise().mean().transpose();
    g.weights.push_back(Eigen::Map<const Matrix>(mean.data(), out, in));
    g.biases.push_back(bias_grads[l]);
  }
  return g;
}

MeanGradients batch_gradients(const MlpState& state, const Matrix& inputs,
                              const std::vector<int>& labels,
                              const SupervisionNoise& noise, Rng& noise_rng,
                              Loss loss) {
  noise.validate();
  if (noise.mode == NoiseMode::gaussian || noise.mode == NoiseMode::uniform) {
    return per_sample_gradients(state, inputs, labels, noise, noise_rng, loss)
        .to_mean(state.spec);
  }
  check_batch(state, inputs, labels);
  const int L = state.spec.num_layers();
  const double m = static_cast<double>(inputs.rows());
  const double scale =
      (noise.mode == NoiseMode::zero_mix ? std::sqrt(noise.rho) : 1.0) / m;

  ForwardCache cache;
  forward(state, inputs, &cache);

  MeanGradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  Matrix delta = output_deltas(cache.preacts[L - 1], labels, loss, &g.mean_loss);
  for (int l = L - 1; l >= 0; --l) {
    const Matrix& aprev = (l == 0) ? cache.input : cache.acts[l - 1];
    g.weights[l].noalias() = scale * (delta * aprev.transpose());
    g.biases[l] = scale * delta.rowwise().sum();
    if (l > 0) {
      Matrix mask = (cache.preacts[l - 1].array() > 0.0).cast<double>();
      delta = (state.weights[l].transpose() * delta).cwiseProduct(mask);
    }
  }
  return g;
}

std::vector<int> corrupt_labels(Rng& rng, const std::vector<int>& labels, double eps,
                                int num_classes) {
  if (eps < 0.0 || eps > 1.0) throw ConfigError("corrupt_labels: eps outside [0,1]");
  if (num_classes < 1) throw ShapeError("corrupt_labels: num_classes < 1");
  std::vector<int> out = labels;
  for (auto& y : out) {
    if (rng.uniform() < eps) {
      y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_classes)));
    }
  }
  return out;
}

void sgd_step(MlpState& state, const MeanGradients& grads) {
  const int L = state.spec.num_layers();
  if (static_cast<int>(grads.weights.size()) != L ||
      static_cast<int>(grads.biases.size()) != L) {
    throw ShapeError("sgd_step: gradient layer count mismatch");
  }
  for (int l = 0; l < L; ++l) {
    if (grads.weights[l].rows() != state.weights[l].rows() ||
        grads.weights[l].cols() != state.weights[l].cols() ||
        grads.biases[l].size() != state.biases[l].size()) {
      throw ShapeError("sgd_step: shape mismatch in layer " + std::to_string(l));
    }
    state.weights[l] -= state.eta * grads.weights[l];
    state.biases[l] -= state.eta * grads.biases[l];
    if (!state.weights[l].allFinite() || !state.biases[l].allFinite()) {
      throw NumericError("sgd_step: non-finite update in layer " + std::to_string(l));
    }
  }
  ++state.step;
}

}  // namespace lipdyn
