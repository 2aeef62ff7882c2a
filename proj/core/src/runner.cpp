#include "lipdyn/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lipdyn/version.hpp"

namespace lipdyn {

namespace {

// Full shuffle per epoch, consecutive slices of size M; a trailing partial
// slice is dropped (it would change the CLT scaling mid-run).
class MiniBatchSampler {
 public:
  MiniBatchSampler(int n, int batch, std::uint64_t seed) : rng_(seed), batch_(batch) {
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    pos_ = order_.size();  // shuffle on first use
  }

  const std::vector<int>& next() {
    if (pos_ + static_cast<std::size_t>(batch_) > order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    current_.assign(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    order_.begin() + static_cast<std::ptrdiff_t>(pos_) + batch_);
    pos_ += static_cast<std::size_t>(batch_);
    return current_;
  }

 private:
  Rng rng_;
  int batch_;
  std::vector<int> order_;
  std::vector<int> current_;
  std::size_t pos_ = 0;
};

Matrix gather_inputs(const Matrix& x, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels,
                               const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[i] = labels[static_cast<std::size_t>(idx[i])];
  }
  return out;
}

std::vector<SpectralState> spectral_states(const MlpState& state) {
  std::vector<SpectralState> out;
  out.reserve(state.weights.size());
  for (const Matrix& w : state.weights) out.push_back(make_spectral_state(w));
  return out;
}

double log_k(const std::vector<SpectralState>& ss) {
  double z = 0.0;
  for (const auto& s : ss) z += std::log(s.sigma1());
  return z;
}

// The drift in the term formulas is the expectation of the update direction;
// injected zero-mean noise drops out, leaving the sqrt(rho)-scaled data
// gradient, which is exactly the zero_mix mode.
SupervisionNoise drift_noise_settings(const SupervisionNoise& noise) {
  SupervisionNoise d = noise;
  if (d.mode != NoiseMode::none) d.mode = NoiseMode::zero_mix;
  d.label_corruption_eps = 0.0;  // labels are corrupted in the dataset itself
  return d;
}

}  // namespace

Dataset load_dataset(const ExperimentConfig& cfg, Rng& init_rng) {
  if (cfg.dataset == "blobs") {
    return make_blobs(init_rng, cfg.blobs_n_samples, cfg.blobs_n_features,
                      cfg.blobs_n_classes, cfg.blobs_spread);
  }
  return load_mnist_idx(cfg.mnist_path, cfg.mnist_subset);
}

double full_dataset_loss(const MlpState& state, const Dataset& ds, Loss loss) {
  SupervisionNoise clean;
  Rng scratch(0);
  return batch_gradients(state, ds.inputs, ds.labels, clean, scratch, loss).mean_loss;
}

Trajectory run_tracked_training(const ExperimentConfig& cfg, bool emit_files) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  Rng init_rng(cfg.init_seed);
  Dataset ds = load_dataset(cfg, init_rng);
  const int n = static_cast<int>(ds.inputs.rows());
  if (n < cfg.batch_size) {
    throw ConfigError("run: dataset (" + std::to_string(n) +
                      ") smaller than batch_size");
  }

  MlpSpec spec = MlpSpec::from_dims(cfg.mlp_dims);
  if (spec.input_dim() != ds.inputs.cols()) {
    throw ShapeError("run: mlp input dim " + std::to_string(spec.input_dim()) +
                     " != dataset features " + std::to_string(ds.inputs.cols()));
  }
  if (spec.output_dim() < ds.num_classes) {
    throw ShapeError("run: mlp output dim smaller than class count");
  }

  Rng noise_rng(cfg.noise_seed);
  if (cfg.noise.label_corruption_eps > 0.0) {
    ds.labels = corrupt_labels(noise_rng, ds.labels, cfg.noise.label_corruption_eps,
                               ds.num_classes);
  }

  MlpState state = init_mlp(spec, init_rng, cfg.eta);
  const int num_layers = spec.num_layers();
  const bool full_drift = cfg.use_full_drift(n);
  const SupervisionNoise drift_noise = drift_noise_settings(cfg.noise);
  const int record_stride = cfg.effective_record_stride();

  MiniBatchSampler sampler(n, cfg.batch_size, cfg.sampling_seed);

  std::vector<SpectralState> ss = spectral_states(state);
  const double z0 = log_k(ss);

  ExpectationIntegrator expectation(z0);
  PathwiseIntegrator pathwise(z0, num_layers);

  std::vector<LayerTerms> terms(static_cast<std::size_t>(num_layers));
  std::vector<Vector> drift(static_cast<std::size_t>(num_layers));
  bool terms_ready = false;
  double last_batch_loss = 0.0;

  Trajectory traj;
  traj.meta.init_seed = cfg.init_seed;
  traj.meta.sampling_seed = cfg.sampling_seed;
  traj.meta.noise_seed = cfg.noise_seed;
  traj.meta.config_hash = config_hash_hex(cfg);
  traj.meta.version = kVersionString;
  traj.meta.eta = cfg.eta;
  traj.meta.num_layers = num_layers;
  traj.meta.steps = cfg.steps;
  traj.meta.dataset_size = n;
  traj.meta.z0 = z0;

  auto record = [&](long step) {
    TrajectoryRecord r;
    r.step = step;
    r.t = static_cast<double>(step) * cfg.eta;
    r.net = network_terms(terms);
    const ExpectationPoint p = expectation.current();
    r.e_z = p.e_z;
    r.var_z = p.var_z;
    r.e_k = p.e_k;
    r.var_k = p.var_k;
    r.z_path = pathwise.z_path();
    r.noise_integral = pathwise.noise_integral();
    r.k_observed = 1.0;
    for (const auto& s : ss) {
      r.sigma1_observed.push_back(s.sigma1());
      r.k_observed *= s.sigma1();
    }
    r.batch_loss = last_batch_loss;
    if (!(r.k_observed > 0.0) || !std::isfinite(r.k_observed) ||
        !std::isfinite(r.z_path) || !std::isfinite(r.e_z)) {
      throw NumericError("run: non-finite trajectory values at step " +
                         std::to_string(step));
    }
    traj.records.push_back(std::move(r));
  };

  for (long k = 0; k < cfg.steps; ++k) {
    if (k > 0) {
      ss = spectral_states(state);
      if (k % record_stride == 0) record(k);
    }

    const std::vector<int>& idx = sampler.next();
    const Matrix xb = gather_inputs(ds.inputs, idx);
    const std::vector<int> yb = gather_labels(ds.labels, idx);

    MeanGradients mean;
    if (k % cfg.noise_stride == 0 || !terms_ready) {
      PerSampleGradients psg =
          per_sample_gradients(state, xb, yb, cfg.noise, noise_rng, cfg.loss);
      mean = psg.to_mean(spec);
      if (full_drift) {
        Rng scratch(0);  // zero_mix drift draws nothing
        MeanGradients g = batch_gradients(state, ds.inputs, ds.labels, drift_noise,
                                          scratch, cfg.loss);
        for (int l = 0; l < num_layers; ++l) {
          drift[static_cast<std::size_t>(l)] = Eigen::Map<const Vector>(
              g.weights[static_cast<std::size_t>(l)].data(),
              g.weights[static_cast<std::size_t>(l)].size());
        }
      } else {
        for (int l = 0; l < num_layers; ++l) {
          drift[static_cast<std::size_t>(l)] = Eigen::Map<const Vector>(
              mean.weights[static_cast<std::size_t>(l)].data(),
              mean.weights[static_cast<std::size_t>(l)].size());
        }
      }
      for (int l = 0; l < num_layers; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        NoiseModel nm = build_noise_model(std::move(psg.layers[lu]));
        const std::optional<double> prev =
            terms_ready ? std::optional<double>(terms[lu].kappa) : std::nullopt;
        terms[lu] = layer_terms(ss[lu], nm, drift[lu], cfg.eta, prev, l);
      }
      terms_ready = true;
    } else {
      mean = batch_gradients(state, xb, yb, cfg.noise, noise_rng, cfg.loss);
    }
    last_batch_loss = mean.mean_loss;

    const std::vector<Matrix> old_weights = state.weights;
    sgd_step(state, mean);

    std::vector<Vector> deltas(static_cast<std::size_t>(num_layers));
    std::vector<PathwiseLayerInput> inputs(static_cast<std::size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      Matrix d = state.weights[lu] - old_weights[lu];
      deltas[lu] = Eigen::Map<const Vector>(d.data(), d.size());
      inputs[lu] = {&ss[lu], &deltas[lu], &drift[lu]};
    }
    pathwise.add_step(inputs, cfg.eta);
    expectation.add_step(network_terms(terms), cfg.eta);
  }

  ss = spectral_states(state);
  record(cfg.steps);

  traj.noise_increments = pathwise.noise_increments();
  traj.meta.degenerate_fraction = pathwise.degenerate_fraction();
  traj.meta.final_full_loss = full_dataset_loss(state, ds, cfg.loss);
  traj.meta.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (emit_files) write_run(traj, cfg, cfg.out_dir);
  return traj;
}

// ---- implication suites -------------------------------------------------

namespace {

using nlohmann::json;

std::string run_dir(const ExperimentConfig& base, const std::string& suite,
                    const std::string& tag) {
  return base.out_dir + "/" + suite + "/" + tag;
}

void write_summary(const ExperimentConfig& base, const std::string& suite,
                   const json& summary, bool emit_files) {
  if (!emit_files) return;
  std::error_code ec;
  std::filesystem::create_directories(base.out_dir + "/" + suite, ec);
  std::ofstream out(base.out_dir + "/" + suite + "/summary.json", std::ios::binary);
  if (!out) throw IoError("cannot write suite summary for " + suite);
  out << summary.dump(2) << '\n';
}

double sample_variance(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / (n - 1.0);
}

json suite_init_law(const ExperimentConfig& base) {
  json j;
  const double target_512 = 2.0 * std::sqrt(2.0);
  std::vector<double> sigma1s;
  std::vector<double> k0s;
  double k0_target = 1.0;
  const MlpSpec spec = MlpSpec::from_dims(base.mlp_dims);
  for (const auto& [in, out] : spec.layer_dims) {
    k0_target *= (std::sqrt(static_cast<double>(out)) +
                  std::sqrt(static_cast<double>(in))) *
                 std::sqrt(2.0 / in);
  }
  for (int s = 1; s <= 10; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const Matrix a = gaussian_matrix(rng, 512, 512, std::sqrt(2.0 / 512.0));
    sigma1s.push_back(svd(a).singular_values(0));

    Rng rng2(static_cast<std::uint64_t>(s));
    const MlpState st = init_mlp(spec, rng2, base.eta);
    double k0 = 1.0;
    for (const Matrix& w : st.weights) k0 *= svd(w).singular_values(0);
    k0s.push_back(k0);
  }
  const double s_mean =
      std::accumulate(sigma1s.begin(), sigma1s.end(), 0.0) / sigma1s.size();
  const double k_mean = std::accumulate(k0s.begin(), k0s.end(), 0.0) / k0s.size();
  j["sigma1_512"] = sigma1s;
  j["sigma1_512_mean"] = s_mean;
  j["sigma1_512_target"] = target_512;
  j["sigma1_512_rel_err"] = std::abs(s_mean - target_512) / target_512;
  j["k0"] = k0s;
  j["k0_mean"] = k_mean;
  j["k0_target"] = k0_target;
  j["k0_rel_err"] = std::abs(k_mean - k0_target) / k0_target;
  return j;
}

json suite_near_convergence(const ExperimentConfig& base, bool emit_files) {
  ExperimentConfig cfg = base;
  cfg.blobs_n_samples = 512;
  cfg.drift = "full";
  cfg.out_dir = run_dir(base, "near_convergence", "run");
  const Trajectory traj = run_tracked_training(cfg, emit_files);

  double min_kappa = std::numeric_limits<double>::infinity();
  for (const auto& r : traj.records) min_kappa = std::min(min_kappa, r.net.kappa_z);

  const std::size_t n = traj.records.size();
  const std::size_t tail_start = n - std::max<std::size_t>(1, (3 * n) / 10);
  int violations = 0;
  for (std::size_t i = tail_start; i + 1 < n; ++i) {
    const double cur = traj.records[i].e_k;
    const double nxt = traj.records[i + 1].e_k;
    if (nxt < cur * (1.0 - 1e-12)) ++violations;
  }

  json j;
  j["final_full_loss"] = traj.meta.final_full_loss;
  j["min_kappa_Z"] = min_kappa;
  j["ek_violations_final_30pct"] = violations;
  j["ek_monotone_final_30pct"] = (violations == 0);
  j["final_E_K"] = traj.records.back().e_k;
  j["final_K_observed"] = traj.records.back().k_observed;
  return j;
}

json suite_grad_noise(const ExperimentConfig& base, bool emit_files) {
  json per_rho = json::array();
  std::vector<double> means;
  for (const double rho : base.suite_rho_grid) {
    std::vector<double> finals;
    for (int s = 1; s <= base.suite_seeds; ++s) {
      ExperimentConfig cfg = base;
      if (cfg.noise.mode == NoiseMode::none) cfg.noise.mode = NoiseMode::gaussian;
      cfg.noise.rho = rho;
      cfg.sampling_seed = static_cast<std::uint64_t>(s);
      cfg.noise_seed = static_cast<std::uint64_t>(s);
      cfg.out_dir = run_dir(base, "grad_noise",
                            "rho_" + format_double(rho) + "_seed_" + std::to_string(s));
      finals.push_back(run_tracked_training(cfg, emit_files).records.back().k_observed);
    }
    const double mean =
        std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
    means.push_back(mean);
    per_rho.push_back({{"rho", rho}, {"final_K", finals}, {"mean_final_K", mean}});
  }
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    if (!(means[i] > means[i + 1])) decreasing = false;
  }
  json j;
  j["rho_grid"] = base.suite_rho_grid;
  j["runs"] = per_rho;
  j["mean_final_K"] = means;
  j["strictly_decreasing_in_decreasing_rho"] = decreasing;
  return j;
}

json suite_label_noise(const ExperimentConfig& base, bool emit_files) {
  json per_eps = json::array();
  std::vector<double> means;
  for (const double eps : base.suite_eps_grid) {
    std::vector<double> finals;
    for (int s = 1; s <= base.suite_seeds; ++s) {
      ExperimentConfig cfg = base;
      cfg.noise.mode = NoiseMode::none;
      cfg.noise.label_corruption_eps = eps;
      cfg.sampling_seed = static_cast<std::uint64_t>(s);
      cfg.noise_seed = static_cast<std::uint64_t>(s);
      cfg.out_dir = run_dir(base, "label_noise",
                            "eps_" + format_double(eps) + "_seed_" + std::to_string(s));
      finals.push_back(run_tracked_training(cfg, emit_files).records.back().k_observed);
    }
    const double mean =
        std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
    means.push_back(mean);
    per_eps.push_back({{"eps", eps}, {"final_K", finals}, {"mean_final_K", mean}});
  }
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i) {
    if (!(means[i] > means[i + 1])) decreasing = false;
  }
  json j;
  j["eps_grid"] = base.suite_eps_grid;
  j["runs"] = per_eps;
  j["mean_final_K"] = means;
  j["strictly_decreasing_in_increasing_eps"] = decreasing;
  return j;
}

json suite_batch_size(const ExperimentConfig& base, bool emit_files) {
  json per_m = json::array();
  std::vector<std::pair<double, double>> pooled_points;
  std::vector<std::pair<double, double>> endpoint_points;
  bool endpoint_ok = true;
  for (const int m : base.suite_batch_grid) {
    std::vector<std::vector<double>> increments;
    std::vector<double> endpoints;
    std::vector<double> predicted_var_z;
    for (int s = 1; s <= base.suite_batch_seeds; ++s) {
      ExperimentConfig cfg = base;
      cfg.batch_size = m;
      cfg.sampling_seed = static_cast<std::uint64_t>(s);
      cfg.out_dir = run_dir(base, "batch_size",
                            "m_" + std::to_string(m) + "_seed_" + std::to_string(s));
      const Trajectory traj = run_tracked_training(cfg, emit_files);
      increments.push_back(traj.noise_increments);
      endpoints.push_back(traj.records.back().noise_integral);
      predicted_var_z.push_back(traj.records.back().var_z);
    }
    // Pooled estimator of Var[Z(t_end)] = sum_k Var[increment_k]: per-step
    // across-seed variances summed over steps. chi^2 noise ~ sqrt(2/(S-1))
    // per step averages out over the steps, unlike the endpoint variance.
    double pooled = 0.0;
    const std::size_t steps = increments.front().size();
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<double> xs;
      xs.reserve(increments.size());
      for (const auto& run : increments) xs.push_back(run[k]);
      pooled += sample_variance(xs);
    }
    const double endpoint_var = sample_variance(endpoints);
    const double pred_mean =
        std::accumulate(predicted_var_z.begin(), predicted_var_z.end(), 0.0) /
        predicted_var_z.size();
    pooled_points.emplace_back(m, pooled);
    if (endpoint_var > 0.0) {
      endpoint_points.emplace_back(m, endpoint_var);
    } else {
      endpoint_ok = false;
    }
    per_m.push_back({{"batch_size", m},
                     {"var_z_pooled", pooled},
                     {"var_z_endpoint", endpoint_var},
                     {"var_z_predicted_mean", pred_mean}});
  }
  json j;
  j["batch_grid"] = base.suite_batch_grid;
  j["per_batch_size"] = per_m;
  j["slope"] = batch_size_variance_slope(pooled_points);
  if (endpoint_ok && endpoint_points.size() >= 2) {
    j["endpoint_slope"] = batch_size_variance_slope(endpoint_points);
  }
  return j;
}

json suite_sampling_trajectory(const ExperimentConfig& base, bool emit_files) {
  std::vector<double> final_log_k;
  for (int s = 1; s <= base.suite_trajectory_seeds; ++s) {
    ExperimentConfig cfg = base;
    cfg.sampling_seed = static_cast<std::uint64_t>(s);
    cfg.out_dir = run_dir(base, "sampling_trajectory", "seed_" + std::to_string(s));
    final_log_k.push_back(
        std::log(run_tracked_training(cfg, emit_files).records.back().k_observed));
  }
  double mean = std::accumulate(final_log_k.begin(), final_log_k.end(), 0.0) /
                final_log_k.size();
  const double sd =
      final_log_k.size() > 1 ? std::sqrt(sample_variance(final_log_k)) : 0.0;
  json j;
  j["final_log_K"] = final_log_k;
  j["mean"] = mean;
  j["std"] = sd;
  j["cv"] = (mean != 0.0) ? sd / std::abs(mean) : std::numeric_limits<double>::infinity();
  return j;
}

}  // namespace

std::string run_implication_suite(const std::string& which,
                                  const ExperimentConfig& base, bool emit_files) {
  base.validate();
  json summary;
  if (which == "init_law") {
    summary = suite_init_law(base);
  } else if (which == "near_convergence") {
    summary = suite_near_convergence(base, emit_files);
  } else if (which == "grad_noise") {
    summary = suite_grad_noise(base, emit_files);
  } else if (which == "label_noise") {
    summary = suite_label_noise(base, emit_files);
  } else if (which == "batch_size") {
    summary = suite_batch_size(base, emit_files);
  } else if (which == "sampling_trajectory") {
    summary = suite_sampling_trajectory(base, emit_files);
  } else {
    throw ConfigError("unknown suite '" + which + "'");
  }
  summary["suite"] = which;
  write_summary(base, which, summary, emit_files);
  return summary.dump(2);
}

}  // namespace lipdyn
