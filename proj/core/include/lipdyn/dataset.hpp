#pragma once

#include <string>
#include <vector>

#include "lipdyn/linalg.hpp"
#include "lipdyn/rng.hpp"

namespace lipdyn {

struct Dataset {
  Matrix inputs;            // N x d, samples are rows
  std::vector<int> labels;  // in [0, num_classes)
  int num_classes = 0;
};

// Gaussian blobs: class means drawn once uniformly on the unit sphere, sample
// = mean + spread * N(0, I). Labels cycle through the classes. Deterministic
// under the seed.
Dataset make_blobs(Rng& rng, int n_samples, int n_features, int n_classes,
                   double spread);

// Reads `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` from a
// directory. Big-endian IDX: magic 2051 (images) and 2049 (labels). Pixels
// are scaled to [0,1] and images flattened row-wise to 784 features.
// subset_size > 0 keeps the first subset_size samples.
Dataset load_mnist_idx(const std::string& dir, int subset_size = 0);

// Lower-level entry used by tests with hand-crafted fixtures.
Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path,
                      int subset_size = 0);

}  // namespace lipdyn
