#pragma once

#include <string>

#include "lipdyn/config.hpp"
#include "lipdyn/dataset.hpp"
#include "lipdyn/io.hpp"
#include "lipdyn/trajectory.hpp"

namespace lipdyn {

// Materializes the configured dataset. Blobs are drawn from the init-seed
// stream (weights follow on the same stream), so varying the sampling or
// noise seed never changes the data.
Dataset load_dataset(const ExperimentConfig& cfg, Rng& init_rng);

// Instrumented SGD run: per step, SVD every layer, re-estimate the gradient
// noise and drift on the configured stride, assemble the SDE terms, advance
// both prediction modes, and record the observed spectral norms. Emits the
// CSV/JSON files into cfg.out_dir unless emit_files is false.
Trajectory run_tracked_training(const ExperimentConfig& cfg, bool emit_files = true);

// Named experiment grids; returns the summary as a JSON string and, when
// emitting, writes each run plus <suite>/summary.json under cfg.out_dir.
// Names: init_law, near_convergence, grad_noise, label_noise, batch_size,
// sampling_trajectory.
std::string run_implication_suite(const std::string& which,
                                  const ExperimentConfig& base,
                                  bool emit_files = true);

// Un-noised data loss over the full dataset at the given parameters.
double full_dataset_loss(const MlpState& state, const Dataset& ds, Loss loss);

}  // namespace lipdyn
