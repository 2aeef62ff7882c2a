// Experiment CLI: `track` runs one instrumented training job, `suite` runs a
// named experiment grid, `check-oracles` cross-checks the low-rank /
// structured numerics against dense references at tiny scale, `emit-schema`
// documents the output files.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lipdyn/oracles.hpp"
#include "lipdyn/runner.hpp"
#include "lipdyn/spectral.hpp"
#include "lipdyn/version.hpp"

namespace {

lipdyn::ExperimentConfig build_config(const std::string& config_path,
                                      const std::vector<std::string>& overrides,
                                      const std::string& out_dir) {
  lipdyn::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = lipdyn::parse_config_file(config_path);
  for (const auto& kv : overrides) lipdyn::apply_override(cfg, kv);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  cfg.validate();
  return cfg;
}

struct OracleCheck {
  std::string name;
  double err;
  double tol;
  bool ok() const { return err < tol; }
};

std::vector<OracleCheck> run_oracle_checks(std::uint64_t seed) {
  using namespace lipdyn;
  std::vector<OracleCheck> checks;
  Rng rng(seed);

  {  // svd reconstruction over assorted shapes
    double worst = 0.0;
    for (const auto [m, n] : {std::pair{8, 5}, {5, 8}, {6, 6}, {1, 7}, {12, 3}}) {
      const Matrix a = gaussian_matrix(rng, m, n, 1.0);
      const SvdFactors f = svd(a);
      const Matrix rec = f.left_vectors *
                         f.singular_values.asDiagonal() *
                         f.right_vectors.transpose();
      worst = std::max(worst, (rec - a).norm() / a.norm());
    }
    checks.push_back({"svd reconstruction", worst, 1e-8});
  }
  {  // low-rank noise model vs dense covariance
    const int m = 12, d = 9;
    PerSampleGradBatch g;
    g.layer = 0;
    g.rows.resize(m, d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) g.rows(i, j) = rng.gaussian();
    const Matrix dense = oracle::dense_sigma(g.rows);
    const NoiseModel nm = build_noise_model(std::move(g));
    double worst = 0.0;
    for (int probe = 0; probe < 50; ++probe) {
      const Vector x = gaussian_vector(rng, d, 1.0);
      const Vector y = gaussian_vector(rng, d, 1.0);
      worst = std::max(worst, std::abs(sigma_quadratic_form(nm, x) -
                                       x.dot(dense * x)));
      worst = std::max(worst, std::abs(sigma_bilinear_form(nm, x, y) -
                                       x.dot(dense * y)));
      const Vector sz = sqrt_apply(nm, x);
      worst = std::max(worst, (sqrt_apply(nm, sz) - dense * x).norm());
    }
    worst = std::max(worst,
                     std::abs(variance_diagonal(nm).sum() - dense.trace()));
    checks.push_back({"noise model vs dense sigma", worst, 1e-10});
  }
  {  // operator-norm jacobian vs central differences
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix theta = gaussian_matrix(rng, 4, 3, 1.0);
      const SpectralState ss = make_spectral_state(theta);
      if (ss.degenerate) continue;
      const Vector jac = op_norm_jacobian(ss);
      const Matrix dir = gaussian_matrix(rng, 4, 3, 1.0);
      const double fd = oracle::fd_sigma1_directional(theta, dir, 1e-5);
      const double an = jac.dot(Eigen::Map<const Vector>(dir.data(), dir.size()));
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-12, std::abs(fd)));
    }
    checks.push_back({"op-norm jacobian vs finite differences", worst, 1e-5});
  }
  {  // structured hessian contraction vs dense hessian
    double worst = 0.0;
    for (const auto [m, n] : {std::pair{5, 4}, {6, 3}, {3, 6}}) {
      const Matrix theta = gaussian_matrix(rng, m, n, 1.0);
      const SpectralState ss = make_spectral_state(theta);
      if (ss.degenerate) continue;
      const Matrix h = oracle::dense_operator_norm_hessian(theta);
      PerSampleGradBatch g;
      g.layer = 0;
      g.rows.resize(6, m * n);
      for (Eigen::Index i = 0; i < g.rows.rows(); ++i)
        for (Eigen::Index j = 0; j < g.rows.cols(); ++j) g.rows(i, j) = rng.gaussian();
      const Matrix dense = oracle::dense_sigma(g.rows);
      const NoiseModel nm = build_noise_model(std::move(g));
      const double structured = hessian_sigma_contraction(ss, nm);
      const double reference = (h.cwiseProduct(dense)).sum();
      worst = std::max(worst, std::abs(structured - reference) /
                                  std::max(1e-12, std::abs(reference)));
    }
    checks.push_back({"hessian contraction vs dense hessian", worst, 1e-8});
  }
  return checks;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const lipdyn::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const lipdyn::IoError*>(&e)) return 3;
  if (dynamic_cast<const lipdyn::NumericError*>(&e) ||
      dynamic_cast<const lipdyn::DecompositionError*>(&e) ||
      dynamic_cast<const lipdyn::DegenerateSpectrumError*>(&e)) {
    return 4;
  }
  return 1;
}

const char* category_for(int code) {
  switch (code) {
    case 2: return "config";
    case 3: return "io";
    case 4: return "numeric";
    default: return "error";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lipschitz-dynamics training instrumentation"};
  app.set_version_flag("--version", lipdyn::kVersionString);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--set", overrides, "override, e.g. --set steps=200")
        ->take_all();
    cmd->add_option("--out", out_dir, "output directory (overrides out_dir)");
  };

  CLI::App* track = app.add_subcommand("track", "run one instrumented training job");
  add_common(track);

  CLI::App* suite = app.add_subcommand("suite", "run a named experiment grid");
  std::string suite_name;
  suite
      ->add_option("name", suite_name,
                   "init_law | near_convergence | grad_noise | label_noise | "
                   "batch_size | sampling_trajectory")
      ->required();
  add_common(suite);

  CLI::App* oracles = app.add_subcommand(
      "check-oracles", "cross-check structured numerics against dense references");
  std::uint64_t oracle_seed = 7;
  oracles->add_option("--seed", oracle_seed, "generator seed");

  CLI::App* schema = app.add_subcommand("emit-schema", "describe the output files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (track->parsed()) {
      const auto cfg = build_config(config_path, overrides, out_dir);
      const lipdyn::Trajectory traj = lipdyn::run_tracked_training(cfg);
      const auto& last = traj.records.back();
      std::printf("run complete: %ld steps, K %.6g -> %.6g, Z_path %.6g, wall %.1fs\n",
                  traj.meta.steps, std::exp(traj.meta.z0), last.k_observed,
                  last.z_path, traj.meta.wall_time_s);
      std::printf("outputs in %s\n", cfg.out_dir.c_str());
    } else if (suite->parsed()) {
      const auto cfg = build_config(config_path, overrides, out_dir);
      const std::string summary = lipdyn::run_implication_suite(suite_name, cfg);
      std::printf("%s\n", summary.c_str());
    } else if (oracles->parsed()) {
      bool all_ok = true;
      for (const auto& c : run_oracle_checks(oracle_seed)) {
        std::printf("oracle %-42s %s (err %.3g, tol %.0e)\n", c.name.c_str(),
                    c.ok() ? "ok  " : "FAIL", c.err, c.tol);
        all_ok = all_ok && c.ok();
      }
      if (!all_ok) return 4;
    } else if (schema->parsed()) {
      std::printf("%s", lipdyn::schema_text().c_str());
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::fprintf(stderr, "error(%s): %s\n", category_for(code), e.what());
    return code;
  }
  return 0;
}
