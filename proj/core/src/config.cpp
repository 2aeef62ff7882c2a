#include "lipdyn/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lipdyn {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed for " + key + ": '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad real for " + key + ": '" + v + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split(v, ',')) out.push_back(parse_int(key, tok));
  return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& tok : split(v, ',')) out.push_back(parse_real(key, tok));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, double>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

std::string mode_name(NoiseMode m) {
  switch (m) {
    case NoiseMode::none: return "none";
    case NoiseMode::gaussian: return "gaussian";
    case NoiseMode::uniform: return "uniform";
    case NoiseMode::zero_mix: return "zero_mix";
  }
  return "none";
}

NoiseMode mode_from(const std::string& v) {
  if (v == "none") return NoiseMode::none;
  if (v == "gaussian") return NoiseMode::gaussian;
  if (v == "uniform") return NoiseMode::uniform;
  if (v == "zero_mix") return NoiseMode::zero_mix;
  throw ConfigError("config: unknown noise.mode '" + v + "'");
}

}  // namespace

void apply_key(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "dataset") {
    if (v != "blobs" && v != "mnist") throw ConfigError("config: unknown dataset '" + v + "'");
    c.dataset = v;
  } else if (key == "blobs.n_samples") {
    c.blobs_n_samples = parse_int(key, v);
  } else if (key == "blobs.n_features") {
    c.blobs_n_features = parse_int(key, v);
  } else if (key == "blobs.n_classes") {
    c.blobs_n_classes = parse_int(key, v);
  } else if (key == "blobs.spread") {
    c.blobs_spread = parse_real(key, v);
  } else if (key == "mnist.path") {
    c.mnist_path = v;
  } else if (key == "mnist.subset_size") {
    c.mnist_subset = parse_int(key, v);
  } else if (key == "mlp.dims") {
    c.mlp_dims = parse_int_list(key, v);
  } else if (key == "loss") {
    if (v == "cross_entropy") c.loss = Loss::cross_entropy;
    else if (v == "mse") c.loss = Loss::mse;
    else throw ConfigError("config: unknown loss '" + v + "'");
  } else if (key == "eta") {
    c.eta = parse_real(key, v);
  } else if (key == "batch_size") {
    c.batch_size = parse_int(key, v);
  } else if (key == "steps") {
    c.steps = parse_int(key, v);
  } else if (key == "seed.init") {
    c.init_seed = parse_u64(key, v);
  } else if (key == "seed.sampling") {
    c.sampling_seed = parse_u64(key, v);
  } else if (key == "seed.noise") {
    c.noise_seed = parse_u64(key, v);
  } else if (key == "noise.mode") {
    c.noise.mode = mode_from(v);
  } else if (key == "noise.rho") {
    c.noise.rho = parse_real(key, v);
  } else if (key == "noise.sigma") {
    c.noise.sigma = parse_real(key, v);
  } else if (key == "noise.half_width") {
    c.noise.half_width = parse_real(key, v);
  } else if (key == "label_eps") {
    c.noise.label_corruption_eps = parse_real(key, v);
  } else if (key == "noise_stride") {
    c.noise_stride = parse_int(key, v);
  } else if (key == "record_stride") {
    c.record_stride = parse_int(key, v);
  } else if (key == "drift") {
    if (v != "auto" && v != "full" && v != "minibatch") {
      throw ConfigError("config: unknown drift mode '" + v + "'");
    }
    c.drift = v;
  } else if (key == "out_dir") {
    c.out_dir = v;
  } else if (key == "suite.rho_grid") {
    c.suite_rho_grid = parse_real_list(key, v);
  } else if (key == "suite.eps_grid") {
    c.suite_eps_grid = parse_real_list(key, v);
  } else if (key == "suite.batch_grid") {
    c.suite_batch_grid = parse_int_list(key, v);
  } else if (key == "suite.seeds") {
    c.suite_seeds = parse_int(key, v);
  } else if (key == "suite.batch_seeds") {
    c.suite_batch_seeds = parse_int(key, v);
  } else if (key == "suite.trajectory_seeds") {
    c.suite_trajectory_seeds = parse_int(key, v);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " of " + path +
                        " is not key=value");
    }
    apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: override '" + assignment + "' is not key=value");
  }
  apply_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::validate() const {
  if (steps < 1) throw ConfigError("config: steps must be >= 1");
  if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2");
  if (eta <= 0.0) throw ConfigError("config: eta must be > 0");
  if (noise_stride < 1) throw ConfigError("config: noise_stride must be >= 1");
  if (record_stride < 0) throw ConfigError("config: record_stride must be >= 0");
  if (mlp_dims.size() < 2) throw ConfigError("config: mlp.dims needs >= 2 entries");
  noise.validate();
  MlpSpec::from_dims(mlp_dims);  // chain check
  if (dataset == "mnist" && mnist_path.empty()) {
    throw ConfigError("config: mnist.path is required for dataset=mnist");
  }
  if (suite_seeds < 1 || suite_trajectory_seeds < 1) {
    throw ConfigError("config: suite seed counts must be >= 1");
  }
  if (suite_batch_seeds < 2) {
    throw ConfigError("config: suite.batch_seeds must be >= 2 (across-seed variance)");
  }
  if (suite_rho_grid.empty() || suite_eps_grid.empty() || suite_batch_grid.empty()) {
    throw ConfigError("config: suite grids must be non-empty");
  }
}

std::string canonical_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "batch_size=" << c.batch_size << "\n";
  os << "blobs.n_classes=" << c.blobs_n_classes << "\n";
  os << "blobs.n_features=" << c.blobs_n_features << "\n";
  os << "blobs.n_samples=" << c.blobs_n_samples << "\n";
  os << "blobs.spread=" << format_double(c.blobs_spread) << "\n";
  os << "dataset=" << c.dataset << "\n";
  os << "drift=" << c.drift << "\n";
  os << "eta=" << format_double(c.eta) << "\n";
  os << "label_eps=" << format_double(c.noise.label_corruption_eps) << "\n";
  os << "loss=" << (c.loss == Loss::cross_entropy ? "cross_entropy" : "mse") << "\n";
  os << "mlp.dims=" << join(c.mlp_dims) << "\n";
  os << "mnist.path=" << c.mnist_path << "\n";
  os << "mnist.subset_size=" << c.mnist_subset << "\n";
  os << "noise.half_width=" << format_double(c.noise.half_width) << "\n";
  os << "noise.mode=" << mode_name(c.noise.mode) << "\n";
  os << "noise.rho=" << format_double(c.noise.rho) << "\n";
  os << "noise.sigma=" << format_double(c.noise.sigma) << "\n";
  os << "noise_stride=" << c.noise_stride << "\n";
  os << "record_stride=" << c.record_stride << "\n";
  os << "seed.init=" << c.init_seed << "\n";
  os << "seed.noise=" << c.noise_seed << "\n";
  os << "seed.sampling=" << c.sampling_seed << "\n";
  os << "steps=" << c.steps << "\n";
  os << "suite.batch_grid=" << join(c.suite_batch_grid) << "\n";
  os << "suite.batch_seeds=" << c.suite_batch_seeds << "\n";
  os << "suite.eps_grid=" << join(c.suite_eps_grid) << "\n";
  os << "suite.rho_grid=" << join(c.suite_rho_grid) << "\n";
  os << "suite.seeds=" << c.suite_seeds << "\n";
  os << "suite.trajectory_seeds=" << c.suite_trajectory_seeds << "\n";
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

}  // namespace lipdyn
