#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "addsub/errors.hpp"
#include "addsub/subordinated.hpp"

namespace addsub {

inline constexpr const char* kVersion = "1.0.0";

/// Invalid configuration. The message starts with the offending field path
/// (or line:column for syntax errors).
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class OutputFormat { csv, json };

struct RunParams {
  std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_paths = 1000;
  /// Frequencies, each of dimension d.
  std::vector<Eigen::VectorXd> xi_grid;
  /// Evaluation times for symbol, triplet and term-structure; defaults to the positive grid points.
  std::vector<double> times;
  /// Conditioning state at the start of the grid.
  LatentState state;
  double quad_tol = 1e-6;
  double z_max = 3.0;
  SamplerMethod sampler;
  /// Fraction of the full acceptance sample sizes used by `check`.
  double check_scale = 0.1;
  std::uint64_t seed = 1;
  std::string output;  // empty: standard output
  OutputFormat format = OutputFormat::csv;
};

struct RunConfig {
  SubordinatedSpec model;
  RunParams run;
};

/// Parses and validates a JSON document with top-level tables "base",
/// "subordinator" and "run". Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical JSON with every default filled in; parse_config accepts it back.
std::string serialize_config(const RunConfig& config);
/// FNV-1a of the canonical serialization, as 16 hex digits. Seed, output
/// path and format do not enter the hash.
std::string config_hash(const RunConfig& config);

/// A small demonstration model: d = 2 factor M-OU on inverse Gaussian Sato clocks.
RunConfig demo_config();

}  // namespace addsub
