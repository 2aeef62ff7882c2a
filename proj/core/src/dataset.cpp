#include "lipdyn/dataset.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace lipdyn {

Dataset make_blobs(Rng& rng, int n_samples, int n_features, int n_classes,
                   double spread) {
  if (n_classes < 2) throw ConfigError("make_blobs: need at least 2 classes");
  if (n_samples < 1 || n_features < 1) throw ConfigError("make_blobs: empty dataset");
  if (spread < 0.0) throw ConfigError("make_blobs: negative spread");

  Matrix means(n_classes, n_features);
  for (int c = 0; c < n_classes; ++c) {
    Vector dir = gaussian_vector(rng, n_features, 1.0);
    const double norm = dir.norm();
    if (norm > 0.0) dir /= norm; else dir = Vector::Unit(n_features, 0);
    means.row(c) = dir.transpose();
  }

  Dataset ds;
  ds.num_classes = n_classes;
  ds.inputs.resize(n_samples, n_features);
  ds.labels.resize(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const int c = i % n_classes;
    ds.labels[static_cast<std::size_t>(i)] = c;
    ds.inputs.row(i) = means.row(c);
    if (spread > 0.0) {
      for (int j = 0; j < n_features; ++j) {
        ds.inputs(i, j) += spread * rng.gaussian();
      }
    }
  }
  return ds;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("idx: truncated header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path,
                      int subset_size) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("idx: cannot open " + images_path);
  const std::uint32_t img_magic = read_be_u32(img, images_path);
  if (img_magic != 2051) {
    throw IoError("idx: bad magic " + std::to_string(img_magic) + " in " +
                  images_path + " (expected 2051)");
  }
  const std::uint32_t n_img = read_be_u32(img, images_path);
  const std::uint32_t n_rows = read_be_u32(img, images_path);
  const std::uint32_t n_cols = read_be_u32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("idx: cannot open " + labels_path);
  const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
  if (lab_magic != 2049) {
    throw IoError("idx: bad magic " + std::to_string(lab_magic) + " in " +
                  labels_path + " (expected 2049)");
  }
  const std::uint32_t n_lab = read_be_u32(lab, labels_path);
  if (n_img != n_lab) {
    throw IoError("idx: count mismatch, " + std::to_string(n_img) + " images vs " +
                  std::to_string(n_lab) + " labels");
  }

  std::uint32_t keep = n_img;
  if (subset_size > 0 && static_cast<std::uint32_t>(subset_size) < keep) {
    keep = static_cast<std::uint32_t>(subset_size);
  }
  const std::size_t d = std::size_t(n_rows) * n_cols;

  Dataset ds;
  ds.num_classes = 10;
  ds.inputs.resize(keep, static_cast<Eigen::Index>(d));
  ds.labels.resize(keep);

  std::vector<unsigned char> buf(d);
  for (std::uint32_t i = 0; i < keep; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(d));
    if (!img) throw IoError("idx: truncated image data in " + images_path);
    for (std::size_t j = 0; j < d; ++j) {
      ds.inputs(i, static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
    }
    char c = 0;
    lab.read(&c, 1);
    if (!lab) throw IoError("idx: truncated label data in " + labels_path);
    ds.labels[i] = static_cast<unsigned char>(c);
    if (ds.labels[i] > 9) throw IoError("idx: label out of range in " + labels_path);
  }
  return ds;
}

Dataset load_mnist_idx(const std::string& dir, int subset_size) {
  return load_idx_pair(dir + "/train-images-idx3-ubyte",
                       dir + "/train-labels-idx1-ubyte", subset_size);
}

}  // namespace lipdyn
