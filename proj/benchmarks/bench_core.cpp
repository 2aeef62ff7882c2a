#include <benchmark/benchmark.h>

#include "lipdyn/dynamics.hpp"
#include "lipdyn/mlp.hpp"

using namespace lipdyn;

namespace {

PerSampleGradBatch random_grads(Rng& rng, int batch, Eigen::Index dim) {
  PerSampleGradBatch g;
  g.layer = 0;
  g.rows.resize(batch, dim);
  for (Eigen::Index i = 0; i < batch; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) g.rows(i, j) = rng.gaussian();
  return g;
}

void BM_Svd(benchmark::State& state) {
  Rng rng(1);
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const auto cols = static_cast<Eigen::Index>(state.range(1));
  const Matrix m = gaussian_matrix(rng, rows, cols, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svd(m));
  }
}
BENCHMARK(BM_Svd)->Args({64, 48})->Args({256, 128})->Args({512, 784})
    ->Unit(benchmark::kMillisecond);

void BM_NoiseModelBuild(benchmark::State& state) {
  Rng rng(2);
  const int batch = static_cast<int>(state.range(0));
  const auto dim = static_cast<Eigen::Index>(state.range(1));
  for (auto _ : state) {
    state.PauseTiming();
    PerSampleGradBatch g = random_grads(rng, batch, dim);
    state.ResumeTiming();
    benchmark::DoNotOptimize(build_noise_model(std::move(g)));
  }
}
BENCHMARK(BM_NoiseModelBuild)->Args({128, 4096})->Args({128, 65536})
    ->Unit(benchmark::kMillisecond);

void BM_HessianContraction(benchmark::State& state) {
  Rng rng(3);
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const auto cols = static_cast<Eigen::Index>(state.range(1));
  const Matrix theta = gaussian_matrix(rng, rows, cols, 1.0);
  const SpectralState ss = make_spectral_state(theta);
  const NoiseModel nm = build_noise_model(random_grads(rng, 128, rows * cols));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hessian_sigma_contraction(ss, nm));
  }
}
BENCHMARK(BM_HessianContraction)->Args({64, 64})->Args({256, 128})
    ->Unit(benchmark::kMillisecond);

void BM_PerSampleGradients(benchmark::State& state) {
  Rng rng(4);
  MlpState st = init_mlp(MlpSpec::from_dims({128, 64, 32, 8}), rng, 0.01);
  const Matrix x = gaussian_matrix(rng, 128, 128, 1.0);
  std::vector<int> y;
  for (int i = 0; i < 128; ++i) y.push_back(static_cast<int>(rng.uniform_int(8)));
  SupervisionNoise clean;
  Rng scratch(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(per_sample_gradients(st, x, y, clean, scratch));
  }
}
BENCHMARK(BM_PerSampleGradients)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
