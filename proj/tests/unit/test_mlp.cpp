#include <doctest.h>

#include <cmath>
#include <vector>

#include "lipdyn/mlp.hpp"
#include "lipdyn/oracles.hpp"
#include "test_helpers.hpp"

using namespace lipdyn;

namespace {

MlpState random_state(const std::vector<int>& dims, std::uint64_t seed,
                      double eta = 0.01) {
  Rng rng(seed);
  return init_mlp(MlpSpec::from_dims(dims), rng, eta);
}

}  // namespace

TEST_CASE("forward: zero weights give zero logits") {
  MlpState st = random_state({4, 3, 2}, 1);
  for (auto& w : st.weights) w.setZero();
  Rng rng(2);
  const Matrix x = gaussian_matrix(rng, 5, 4, 1.0);
  CHECK(forward(st, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: identity single layer passes inputs through") {
  MlpState st = random_state({3, 3}, 1);
  st.weights[0] = Matrix::Identity(3, 3);
  st.biases[0].setZero();
  Rng rng(2);
  const Matrix x = gaussian_matrix(rng, 6, 3, 1.0);
  CHECK((forward(st, x) - x).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward: matches straight-line recomputation on a 2-layer net") {
  const MlpState st = random_state({4, 5, 3}, 7);
  Rng rng(8);
  const Matrix x = gaussian_matrix(rng, 6, 4, 1.0);
  const Matrix logits = forward(st, x);

  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> h(5, 0.0);
    for (int o = 0; o < 5; ++o) {
      double acc = st.biases[0](o);
      for (int in = 0; in < 4; ++in) acc += st.weights[0](o, in) * x(i, in);
      h[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
    }
    for (int o = 0; o < 3; ++o) {
      double acc = st.biases[1](o);
      for (int in = 0; in < 5; ++in) {
        acc += st.weights[1](o, in) * h[static_cast<std::size_t>(in)];
      }
      CHECK(logits(i, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward: width mismatch throws") {
  const MlpState st = random_state({4, 3}, 1);
  CHECK_THROWS_AS(forward(st, Matrix::Zero(2, 5)), ShapeError);
}

TEST_CASE("forward: single-layer scale homogeneity with zero biases") {
  MlpState st = random_state({5, 3}, 5);
  st.biases[0].setZero();
  Rng rng(6);
  const Matrix x = gaussian_matrix(rng, 4, 5, 1.0);
  const Matrix base = forward(st, x);
  MlpState scaled = st;
  scaled.weights[0] *= 2.5;
  const Matrix got = forward(scaled, x);
  CHECK((got - 2.5 * base).cwiseAbs().maxCoeff() < 1e-12 * base.cwiseAbs().maxCoeff());
}

TEST_CASE("per_sample_gradients: M=1 row equals the batch gradient") {
  const MlpState st = random_state({4, 3}, 3);
  Rng rng(4), scratch(0);
  const Matrix x = gaussian_matrix(rng, 1, 4, 1.0);
  const std::vector<int> y = {2};
  SupervisionNoise clean;
  const auto psg = per_sample_gradients(st, x, y, clean, scratch);
  const auto mean = psg.to_mean(st.spec);
  const Eigen::Map<const Vector> flat(mean.weights[0].data(), mean.weights[0].size());
  CHECK((psg.layers[0].rows.row(0).transpose() - flat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per_sample_gradients: analytic vs central finite differences") {
  const MlpState st = random_state({6, 5, 4}, 11);
  Rng rng(12), scratch(0);
  const Matrix x = gaussian_matrix(rng, 8, 6, 1.0);
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) y.push_back(static_cast<int>(rng.uniform_int(4)));

  for (const Loss loss : {Loss::cross_entropy, Loss::mse}) {
    SupervisionNoise clean;
    const auto mean =
        per_sample_gradients(st, x, y, clean, scratch, loss).to_mean(st.spec);
    for (int probe = 0; probe < 10; ++probe) {
      const int layer = static_cast<int>(rng.uniform_int(2));
      const auto r = static_cast<Eigen::Index>(
          rng.uniform_int(static_cast<std::uint64_t>(st.weights[layer].rows())));
      const auto c = static_cast<Eigen::Index>(
          rng.uniform_int(static_cast<std::uint64_t>(st.weights[layer].cols())));
      const double fd = oracle::fd_loss_weight_derivative(st, x, y, loss, layer, r, c, 1e-4);
      const double an = mean.weights[static_cast<std::size_t>(layer)](r, c);
      CHECK(std::abs(an - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("per_sample_gradients: row means equal the fast-path batch gradient") {
  const MlpState st = random_state({5, 4, 3}, 21);
  Rng rng(22), s1(9), s2(9);
  const Matrix x = gaussian_matrix(rng, 16, 5, 1.0);
  std::vector<int> y;
  for (int i = 0; i < 16; ++i) y.push_back(static_cast<int>(rng.uniform_int(3)));
  SupervisionNoise clean;
  const auto mean_slow = per_sample_gradients(st, x, y, clean, s1).to_mean(st.spec);
  const auto mean_fast = batch_gradients(st, x, y, clean, s2);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK((mean_slow.weights[l] - mean_fast.weights[l]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((mean_slow.biases[l] - mean_fast.biases[l]).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(mean_slow.mean_loss == doctest::Approx(mean_fast.mean_loss).epsilon(1e-12));
}

TEST_CASE("per_sample_gradients: mode none ignores rho; rho=1 gaussian adds nothing") {
  const MlpState st = random_state({4, 3}, 31);
  Rng rng(32);
  const Matrix x = gaussian_matrix(rng, 6, 4, 1.0);
  std::vector<int> y = {0, 1, 2, 0, 1, 2};

  SupervisionNoise none;
  none.rho = 0.3;  // ignored for mode none
  Rng sa(1);
  const auto base = per_sample_gradients(st, x, y, none, sa);

  SupervisionNoise g;
  g.mode = NoiseMode::gaussian;
  g.rho = 1.0;
  Rng sb(1);
  const auto noisy = per_sample_gradients(st, x, y, g, sb);
  CHECK((noisy.layers[0].rows - base.layers[0].rows).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per_sample_gradients: zero_mix scales rows by sqrt(rho)") {
  const MlpState st = random_state({4, 3}, 33);
  Rng rng(34);
  const Matrix x = gaussian_matrix(rng, 5, 4, 1.0);
  std::vector<int> y = {0, 1, 2, 1, 0};
  SupervisionNoise clean;
  Rng sa(1), sb(1);
  const auto base = per_sample_gradients(st, x, y, clean, sa);
  SupervisionNoise zm;
  zm.mode = NoiseMode::zero_mix;
  zm.rho = 0.49;
  const auto scaled = per_sample_gradients(st, x, y, zm, sb);
  CHECK((scaled.layers[0].rows - 0.7 * base.layers[0].rows).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK((scaled.bias_grads[0] - 0.7 * base.bias_grads[0]).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("per_sample_gradients: injected gaussian component has the right variance") {
  const MlpState st = random_state({4, 3}, 41);
  Rng rng(42);
  const Matrix x = gaussian_matrix(rng, 32, 4, 1.0);
  std::vector<int> y;
  for (int i = 0; i < 32; ++i) y.push_back(static_cast<int>(rng.uniform_int(3)));

  SupervisionNoise g;
  g.mode = NoiseMode::gaussian;
  g.rho = 0.4;
  g.sigma = 0.7;
  SupervisionNoise clean;

  Rng scratch(0);
  const auto base = per_sample_gradients(st, x, y, clean, scratch);
  const double sqrt_rho = std::sqrt(g.rho);

  Rng noise_rng(55);
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const auto noisy = per_sample_gradients(st, x, y, g, noise_rng);
    const RowMatrix injected = noisy.layers[0].rows - sqrt_rho * base.layers[0].rows;
    sum += injected.sum();
    sum_sq += injected.cwiseProduct(injected).sum();
    count += injected.size();
  }
  REQUIRE(count >= 10000);
  const double mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - mean * mean;
  const double target = (1.0 - g.rho) * g.sigma * g.sigma;
  CHECK(std::abs(var - target) / target < 0.10);
}

TEST_CASE("corrupt_labels: eps=0 is identity, fixed seed reproduces") {
  Rng rng(1);
  const std::vector<int> labels = {0, 1, 2, 3, 4, 5};
  CHECK(corrupt_labels(rng, labels, 0.0, 6) == labels);
  Rng a(2), b(2);
  CHECK(corrupt_labels(a, labels, 0.7, 6) == corrupt_labels(b, labels, 0.7, 6));
}

TEST_CASE("corrupt_labels: eps=1 resamples uniformly over all classes") {
  Rng rng(3);
  std::vector<int> labels(100000, 0);
  const auto corrupted = corrupt_labels(rng, labels, 1.0, 10);
  std::vector<int> counts(10, 0);
  for (int y : corrupted) ++counts[static_cast<std::size_t>(y)];
  const double n = 100000.0;
  const double sigma = std::sqrt(0.1 * 0.9 / n);
  for (int c : counts) {
    CHECK(std::abs(c / n - 0.1) < 3.0 * sigma);
  }
}

TEST_CASE("sgd_step: zero gradient leaves the state unchanged") {
  MlpState st = random_state({4, 3}, 51);
  const Matrix w0 = st.weights[0];
  MeanGradients g;
  g.weights = {Matrix::Zero(3, 4)};
  g.biases = {Vector::Zero(3)};
  sgd_step(st, g);
  CHECK((st.weights[0] - w0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.step == 1);
}

TEST_CASE("sgd_step: eta=1 with gradient equal to weights zeroes them") {
  MlpState st = random_state({4, 3}, 52, 1.0);
  MeanGradients g;
  g.weights = {st.weights[0]};
  g.biases = {st.biases[0]};
  sgd_step(st, g);
  CHECK(st.weights[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sgd_step: two frozen-gradient steps equal one summed step") {
  MlpState a = random_state({4, 3}, 53, 0.1);
  MlpState b = a;
  Rng rng(54);
  MeanGradients g1, g2, gsum;
  g1.weights = {gaussian_matrix(rng, 3, 4, 1.0)};
  g1.biases = {gaussian_vector(rng, 3, 1.0)};
  g2.weights = {gaussian_matrix(rng, 3, 4, 1.0)};
  g2.biases = {gaussian_vector(rng, 3, 1.0)};
  gsum.weights = {g1.weights[0] + g2.weights[0]};
  gsum.biases = {g1.biases[0] + g2.biases[0]};
  sgd_step(a, g1);
  sgd_step(a, g2);
  sgd_step(b, gsum);
  CHECK((a.weights[0] - b.weights[0]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sgd_step: non-finite update names the layer") {
  MlpState st = random_state({4, 3}, 55);
  MeanGradients g;
  g.weights = {Matrix::Constant(3, 4, std::numeric_limits<double>::infinity())};
  g.biases = {Vector::Zero(3)};
  CHECK_THROWS_WITH_AS(sgd_step(st, g), doctest::Contains("layer 0"), NumericError);
}

TEST_CASE("mlp spec: default matches the reference configuration") {
  const MlpSpec spec = MlpSpec::table_default();
  REQUIRE(spec.num_layers() == 3);
  CHECK(spec.layer_dims[0] == std::pair{784, 512});
  CHECK(spec.layer_dims[1] == std::pair{512, 256});
  CHECK(spec.layer_dims[2] == std::pair{256, 10});
  CHECK_THROWS_AS(MlpSpec::from_dims({4}), ShapeError);
}
