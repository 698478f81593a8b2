#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geospec/geometry.hpp"

namespace geospec::cli {

inline constexpr int kSchemaVersion = 1;

// Bad config or flag values; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  // [space]
  SpaceKind kind = SpaceKind::sphere;
  double kappa = 1;
  int n = 2;
  // [setup]
  double rho = 1;
  double r_tube = 1.1;
  // [grids]
  int m_operator = 256;
  int m_path = 200;
  int m_ode = 512;
  std::vector<int> m_sweep{64, 128, 256};
  // [mc]
  std::vector<double> lambdas{16, 64, 256};
  std::size_t n_paths = 10000;
  std::size_t n_xi_paths = 200;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: machine parallelism
  std::string drift = "semiclassical";
  // [trial]
  double eps = 1e-3;
  double kappa_cut = 0;  // 0: r_tube / 2
  double delta = 0.6;
  double delta_ground = 0.2;
  // [output]
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "svg"};
  int dump_paths = 3;

  double effective_kappa_cut() const { return kappa_cut > 0 ? kappa_cut : r_tube / 2; }
  bool wants(const std::string& fmt) const;
  void validate() const;
  // Canonical INI text of every resolved field (sorted sections and keys).
  // The output location is not an input, so manifests leave it out.
  std::string to_ini(bool with_directory = true) const;
};

// Parses INI text; unknown sections or keys are schema errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Applies "section.key=value" on top of cfg.
void apply_override(RunConfig& cfg, const std::string& assignment);

struct Overrides {
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

// Precedence: flags, then GEOSPEC_SEED, then the config file, then defaults.
RunConfig resolve_config(const std::optional<std::string>& path, const Overrides& ov, const char* env_seed);

}  // namespace geospec::cli
