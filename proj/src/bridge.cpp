#include "geospec/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <thread>

namespace geospec {

void BridgeConfig::validate(const GeodesicSetupd& s) const {
  if (!(lambda > 0)) throw std::invalid_argument("bridge: lambda must be positive");
  if (m_steps < 50) throw std::invalid_argument("bridge: m_steps must be >= 50");
  if (drift_mode == DriftMode::exact_flat && s.space.kind != SpaceKind::flat)
    throw std::domain_error("bridge: exact_flat drift is only available on flat space");
}

std::string BridgeConfig::step_warning() const {
  if (double(m_steps) / lambda >= 10) return {};
  return "bridge: m_steps / lambda = " + std::to_string(double(m_steps) / lambda) +
         " < 10, the time step is coarse against the noise scale 1/lambda";
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t attempt) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32),
                    std::uint32_t(attempt)};
  eng_.seed(seq);
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1], u2 in [0, 1)
  const double u1 = (double(eng_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = double(eng_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2 * std::log(u1)), th = 2 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(root), std::uint32_t(root >> 32), std::uint32_t(index), std::uint32_t(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

namespace {

struct ChartFailure {};

VectorXd frame_coords(const ModelSpaced& M, const MatrixXd& E, const VectorXd& v) {
  VectorXd c(E.cols());
  for (int a = 0; a < E.cols(); ++a) c(a) = M.inner(E.col(a), v);
  return c;
}

// Gram-Schmidt in the space metric; returns the size of the correction.
double reorthonormalize(const ModelSpaced& M, const VectorXd& p, MatrixXd& E) {
  MatrixXd G(E.cols(), E.cols());
  for (int a = 0; a < E.cols(); ++a)
    for (int b = 0; b < E.cols(); ++b) G(a, b) = M.inner(E.col(a), E.col(b));
  const double dev = (G - MatrixXd::Identity(E.cols(), E.cols())).cwiseAbs().maxCoeff();
  for (int a = 0; a < E.cols(); ++a) {
    VectorXd v = M.project_tangent(p, E.col(a));
    for (int b = 0; b < a; ++b) v -= M.inner(v, E.col(b)) * E.col(b);
    E.col(a) = v / M.norm(v);
  }
  return dev;
}

void finish_path(BridgePath& P, const GeodesicSetupd& s) {
  const auto& M = s.space;
  P.in_tube = true;
  P.sup_dist_to_geodesic = 0;
  P.sup_index = 0;
  for (int i = 0; i <= P.m; ++i) {
    const double t = double(i) / P.m;
    if (M.distance(P.points[i], s.y) >= s.r_tube) P.in_tube = false;
    const double d = M.distance(P.points[i], s.geodesic(t));
    if (d > P.sup_dist_to_geodesic) {
      P.sup_dist_to_geodesic = d;
      P.sup_index = i;
    }
  }
}

BridgePath semiclassical_attempt(const BridgeConfig& cfg, const GeodesicSetupd& s, GaussianStream& rng) {
  const auto& M = s.space;
  const int m = cfg.m_steps, n = M.n;
  const double h = 1.0 / m, sd = std::sqrt(h / cfg.lambda);
  BridgePath P;
  P.m = m;
  P.points.resize(std::size_t(m) + 1);
  P.increments.resize(m, n);
  P.noise.resize(m, n);
  VectorXd g = s.x;
  MatrixXd E = s.frame;
  P.points[0] = g;
  if (cfg.keep_frames) P.frames.push_back(E);
  for (int i = 0; i < m; ++i) {
    const double t = double(i) / m;
    const VectorXd lg = log_map(M, g, s.y);
    VectorXd db(n), dw(n);
    if (i == m - 1 && cfg.force_last_step) {
      db = frame_coords(M, E, lg);
      dw.setZero();
    } else {
      const VectorXd drift = frame_coords(M, E, lg) / (1 - t);
      for (int a = 0; a < n; ++a) dw(a) = sd * rng.next();
      db = drift * h + dw;
    }
    const VectorXd v = E * db;
    if (M.kind == SpaceKind::sphere && M.norm(v) >= 0.5 * M.injectivity_radius()) throw ChartFailure{};
    VectorXd g2 = (i == m - 1 && cfg.force_last_step) ? s.y : exp_map(M, g, v);
    for (int a = 0; a < n; ++a) E.col(a) = parallel_transport(M, g, g2, VectorXd(E.col(a)));
    P.max_frame_correction = std::max(P.max_frame_correction, reorthonormalize(M, g2, E));
    g = g2;
    P.points[i + 1] = g;
    P.increments.row(i) = db.transpose();
    P.noise.row(i) = dw.transpose();
    if (cfg.keep_frames) P.frames.push_back(E);
  }
  return P;
}

}  // namespace

BridgePath sample_bridge(const BridgeConfig& cfg, const GeodesicSetupd& setup) {
  cfg.validate(setup);
  if (cfg.drift_mode == DriftMode::exact_flat) return exact_flat_bridge(cfg, setup);
  constexpr int retry_budget = 10;
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    GaussianStream rng(cfg.seed, 0, std::uint64_t(attempt));
    try {
      BridgePath P = semiclassical_attempt(cfg, setup, rng);
      P.retries = attempt;
      finish_path(P, setup);
      return P;
    } catch (const ChartFailure&) {
    } catch (const DomainError&) {
    }
  }
  throw std::runtime_error("sample_bridge: chart validity lost after " + std::to_string(retry_budget) +
                           " retries (seed " + std::to_string(cfg.seed) + ")");
}

BridgePath exact_flat_bridge(const BridgeConfig& cfg, const GeodesicSetupd& setup) {
  if (setup.space.kind != SpaceKind::flat) throw std::domain_error("exact_flat_bridge: flat space only");
  if (!(cfg.lambda > 0) || cfg.m_steps < 2) throw std::invalid_argument("exact_flat_bridge: bad config");
  const int m = cfg.m_steps, n = setup.space.n;
  const double h = 1.0 / m, sd = std::sqrt(h / cfg.lambda);
  GaussianStream rng(cfg.seed);
  MatrixXd W(m + 1, n);
  W.row(0).setZero();
  MatrixXd dW(m, n);
  for (int i = 0; i < m; ++i) {
    for (int a = 0; a < n; ++a) dW(i, a) = sd * rng.next();
    W.row(i + 1) = W.row(i) + dW.row(i);
  }
  BridgePath P;
  P.m = m;
  P.points.resize(std::size_t(m) + 1);
  const VectorXd d = setup.y - setup.x;
  for (int i = 0; i <= m; ++i) {
    const double t = double(i) / m;
    P.points[i] = setup.x + t * d + setup.frame * (W.row(i) - t * W.row(m)).transpose();
  }
  P.points[m] = setup.y;
  P.increments.resize(m, n);
  for (int i = 0; i < m; ++i) P.increments.row(i) = (setup.frame.transpose() * (P.points[i + 1] - P.points[i])).transpose();
  P.noise = dW;
  if (cfg.keep_frames) P.frames.assign(std::size_t(m) + 1, setup.frame);
  finish_path(P, setup);
  return P;
}

BridgePath geodesic_path(const GeodesicSetupd& s, int m) {
  BridgePath P;
  P.m = m;
  const int n = s.space.n;
  P.points.resize(std::size_t(m) + 1);
  for (int i = 0; i <= m; ++i) P.points[i] = s.geodesic(double(i) / m);
  P.points[m] = s.y;
  P.increments = MatrixXd::Zero(m, n);
  P.increments.col(0).setConstant(s.rho / m);
  P.noise = MatrixXd::Zero(m, n);
  for (int i = 0; i <= m; ++i) {
    MatrixXd E(s.frame.rows(), n);
    for (int a = 0; a < n; ++a) E.col(a) = parallel_transport(s.space, s.x, P.points[i], VectorXd(s.frame.col(a)));
    P.frames.push_back(E);
  }
  finish_path(P, s);
  return P;
}

double stochastic_integral(const BridgePath& path, const MatrixXd& phi_cells, const VectorXd& xi_frame,
                           const VectorXd& phi_mean) {
  if (phi_cells.rows() != path.m) throw std::invalid_argument("stochastic_integral: grid mismatch");
  CompensatedSum s;
  for (int i = 0; i < path.m; ++i) s.add(phi_cells.row(i).dot(path.increments.row(i)));
  return s.value() - xi_frame.dot(phi_mean);
}

double stochastic_integral(const BridgePath& path, const ModalFunction& phi, const VectorXd& xi_frame) {
  return stochastic_integral(path, phi.cell_averages(path.m), xi_frame, phi.mean());
}

TubeStatistics tube_statistics(const std::vector<BridgePath>& paths, int bins) {
  std::vector<double> sup(paths.size());
  std::vector<char> in(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    sup[i] = paths[i].sup_dist_to_geodesic;
    in[i] = paths[i].in_tube;
  }
  return tube_statistics(sup, in, bins);
}

TubeStatistics tube_statistics(const std::vector<double>& sup_dist, const std::vector<char>& in_tube, int bins) {
  if (sup_dist.empty()) throw std::invalid_argument("tube_statistics: empty collection");
  if (sup_dist.size() != in_tube.size()) throw std::invalid_argument("tube_statistics: size mismatch");
  if (bins < 1) throw std::invalid_argument("tube_statistics: bins must be positive");
  TubeStatistics st;
  st.total = sup_dist.size();
  double mx = 0;
  for (std::size_t i = 0; i < st.total; ++i) {
    if (in_tube[i]) st.accepted.push_back(i);
    mx = std::max(mx, sup_dist[i]);
  }
  if (st.accepted.empty()) throw std::runtime_error("tube_statistics: no path stayed in the tube (degenerate sample)");
  st.acceptance = double(st.accepted.size()) / double(st.total);
  const double w = mx > 0 ? mx / bins : 1.0;
  st.histogram_counts.assign(std::size_t(bins), 0);
  for (int b = 0; b <= bins; ++b) st.histogram_edges.push_back(b * w);
  for (double d : sup_dist) ++st.histogram_counts[std::size_t(std::min(bins - 1, int(d / w)))];
  return st;
}

int default_threads() {
  const unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : int(h);
}

void for_each_path(const BridgeConfig& cfg, const GeodesicSetupd& setup, std::size_t n_paths, int threads,
                   const std::function<void(std::size_t, const BridgePath&)>& fn) {
  cfg.validate(setup);
  if (threads <= 0) threads = default_threads();
  threads = int(std::min<std::size_t>(std::size_t(threads), std::max<std::size_t>(n_paths, 1)));
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < n_paths; i += stride) {
      BridgeConfig c = cfg;
      c.seed = derive_seed(cfg.seed, i);
      fn(i, sample_bridge(c, setup));
    }
  };
  if (threads == 1) {
    work(0, 1);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        work(std::size_t(w), std::size_t(threads));
      } catch (...) {
        errs[std::size_t(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::vector<BridgePath> sample_paths(const BridgeConfig& cfg, const GeodesicSetupd& setup, std::size_t n_paths,
                                     int threads) {
  std::vector<BridgePath> out(n_paths);
  for_each_path(cfg, setup, n_paths, threads, [&](std::size_t i, const BridgePath& p) { out[i] = p; });
  return out;
}

std::string path_csv(const BridgePath& path, const GeodesicSetupd& setup) {
  std::ostringstream os;
  os << std::setprecision(17);
  const int D = setup.space.ambient_dim(), n = setup.space.n;
  os << "t";
  for (int a = 0; a < D; ++a) os << ",gamma_" << a;
  for (int a = 0; a < n; ++a) os << ",db_" << a;
  os << "\r\n";
  for (int i = 0; i <= path.m; ++i) {
    os << double(i) / path.m;
    for (int a = 0; a < D; ++a) os << ',' << path.points[i](a);
    for (int a = 0; a < n; ++a) os << ',' << (i < path.m ? path.increments(i, a) : 0.0);
    os << "\r\n";
  }
  return os.str();
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

}  // namespace geospec
