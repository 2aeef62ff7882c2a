#pragma once

#include <string>

#include "lipdyn/config.hpp"
#include "lipdyn/trajectory.hpp"

namespace lipdyn {

struct RunPaths {
  std::string layers_csv;
  std::string network_csv;
  std::string run_json;
  std::string manifest_json;
};

// Writes layers.csv, network.csv, run.json and manifest.json under dir
// (created if needed). All floats carry 17 significant digits so the CSVs
// round-trip bit-exactly; identical (config, seeds) yield byte-identical CSVs.
RunPaths write_run(const Trajectory& traj, const ExperimentConfig& cfg,
                   const std::string& dir);

// Human-readable description of the emitted files and their columns.
std::string schema_text();

}  // namespace lipdyn
