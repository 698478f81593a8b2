#pragma once

#include "geospec/geometry.hpp"
#include "geospec/pathops.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace geospec {

enum class DriftMode { exact_flat, semiclassical };

struct BridgeConfig {
  double lambda = 1;
  int m_steps = 200;
  std::uint64_t seed = 0;
  DriftMode drift_mode = DriftMode::semiclassical;
  bool force_last_step = true;  // the only pin mode
  bool keep_frames = false;

  void validate(const GeodesicSetupd& s) const;
  // Non-empty when the step variance h/lambda is coarse, i.e. m_steps / lambda < 10.
  std::string step_warning() const;
};

struct BridgePath {
  int m = 0;
  std::vector<VectorXd> points;  // gamma_i, i = 0..m (embedded)
  MatrixXd increments;           // m x n, anti-development increments in the parallel frame
  MatrixXd noise;                // m x n, the Brownian increments dW_i (zero on a forced step)
  std::vector<MatrixXd> frames;  // optional, ambient x n
  bool in_tube = true;
  double sup_dist_to_geodesic = 0;
  int sup_index = 0;             // argmax of d(gamma_i, c(t_i))
  double max_frame_correction = 0;
  int retries = 0;
};

// Standard normals by Box-Muller on top of mt19937_64 (the standard fixes both bit streams).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t attempt = 0);
  double next();

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Seed of path `index` under root seed `root`: a seed_seq over the four 32-bit halves.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

BridgePath sample_bridge(const BridgeConfig& cfg, const GeodesicSetupd& setup);
BridgePath exact_flat_bridge(const BridgeConfig& cfg, const GeodesicSetupd& setup);
// The geodesic itself as a zero-noise path.
BridgePath geodesic_path(const GeodesicSetupd& setup, int m);

// Sum of cell-averaged phi . db minus <xi, int phi>.
double stochastic_integral(const BridgePath& path, const MatrixXd& phi_cells, const VectorXd& xi_frame,
                           const VectorXd& phi_mean);
double stochastic_integral(const BridgePath& path, const ModalFunction& phi, const VectorXd& xi_frame);

struct TubeStatistics {
  std::size_t total = 0;
  double acceptance = 0;
  std::vector<std::size_t> accepted;
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
};

TubeStatistics tube_statistics(const std::vector<BridgePath>& paths, int bins = 20);
TubeStatistics tube_statistics(const std::vector<double>& sup_dist, const std::vector<char>& in_tube, int bins = 20);

// Runs fn(index, path) for paths derived from cfg.seed, on `threads` workers.
// Results must be written per index; the call order across workers is unspecified.
void for_each_path(const BridgeConfig& cfg, const GeodesicSetupd& setup, std::size_t n_paths, int threads,
                   const std::function<void(std::size_t, const BridgePath&)>& fn);

std::vector<BridgePath> sample_paths(const BridgeConfig& cfg, const GeodesicSetupd& setup, std::size_t n_paths,
                                     int threads);

std::string path_csv(const BridgePath& path, const GeodesicSetupd& setup);

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

int default_threads();

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0, c = 0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x; else c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace geospec
