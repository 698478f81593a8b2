#pragma once

#include "geospec/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace geospec {

class ConjugatePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar = double>
struct OdeGrid {
  int m = 512;
  explicit OdeGrid(int m_ = 512) : m(m_) {
    if (m < 16) throw std::invalid_argument("ODE grid needs m >= 16");
  }
  Scalar h() const { return Scalar(1) / Scalar(m); }
  Scalar t(int i) const { return Scalar(i) / Scalar(m); }
};

// W'' + R<-(t) W = 0, W(0) = 0, W'(0) = I on a uniform grid, with f(t) = W(1 - t).
template <typename Scalar = double>
struct JacobiSolution {
  OdeGrid<Scalar> grid{16};
  CurvatureProfile<Scalar> profile;
  std::vector<Mat<Scalar>> W, Wp;
  std::vector<Scalar> log_abs_det;  // log|det W(t_i)|, i >= 1
  std::vector<Scalar> cond;         // condition number of W(t_i), i >= 1

  int n() const { return int(W.front().rows()); }
  Mat<Scalar> f(int i) const { return W[grid.m - i]; }
  Mat<Scalar> fp(int i) const { return -Wp[grid.m - i]; }

  // One RK4 step of (W, W') from s0 over ds.
  void rk4(Scalar s0, Scalar ds, Mat<Scalar>& w, Mat<Scalar>& wp) const {
    auto acc = [&](Scalar s, const Mat<Scalar>& x) -> Mat<Scalar> { return -profile.reversed(s) * x; };
    const Mat<Scalar> k1w = wp, k1v = acc(s0, w);
    const Mat<Scalar> k2w = wp + ds / 2 * k1v, k2v = acc(s0 + ds / 2, w + ds / 2 * k1w);
    const Mat<Scalar> k3w = wp + ds / 2 * k2v, k3v = acc(s0 + ds / 2, w + ds / 2 * k2w);
    const Mat<Scalar> k4w = wp + ds * k3v, k4v = acc(s0 + ds, w + ds * k3w);
    w += ds / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    wp += ds / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }

  // W and W' at any s in [0,1]: one local RK4 step from the nearest grid node.
  std::pair<Mat<Scalar>, Mat<Scalar>> at(Scalar s) const {
    const int m = grid.m;
    int i = int(std::lround(double(s * Scalar(m))));
    i = std::clamp(i, 0, m);
    Mat<Scalar> w = W[i], wp = Wp[i];
    const Scalar ds = s - grid.t(i);
    if (ds != 0) rk4(grid.t(i), ds, w, wp);
    return {w, wp};
  }
};

template <typename Scalar>
JacobiSolution<Scalar> solve_jacobi(const CurvatureProfile<Scalar>& profile, const OdeGrid<Scalar>& grid) {
  const int n = profile.n();
  for (const auto& Rs : profile.samples)
    if ((Rs - Rs.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12))
      throw std::invalid_argument("solve_jacobi: curvature samples must be symmetric");
  JacobiSolution<Scalar> sol;
  sol.grid = grid;
  sol.profile = profile;
  sol.W.resize(std::size_t(grid.m) + 1);
  sol.Wp.resize(std::size_t(grid.m) + 1);
  Mat<Scalar> w = Mat<Scalar>::Zero(n, n), wp = Mat<Scalar>::Identity(n, n);
  sol.W[0] = w;
  sol.Wp[0] = wp;
  sol.log_abs_det.assign(std::size_t(grid.m) + 1, Scalar(0));
  sol.cond.assign(std::size_t(grid.m) + 1, Scalar(1));
  int det_sign = 1;  // det W(t) > 0 for small t since W ~ t I
  for (int i = 0; i < grid.m; ++i) {
    sol.rk4(grid.t(i), grid.h(), w, wp);
    sol.W[i + 1] = w;
    sol.Wp[i + 1] = wp;
    Eigen::JacobiSVD<Mat<Scalar>> svd(w);
    const auto& sv = svd.singularValues();
    const Scalar t = grid.t(i + 1);
    // W vanishes linearly at t = 0; only a drop far below that is a conjugate point
    if (sv(n - 1) <= Scalar(1e-10) * t)
      throw ConjugatePointError("solve_jacobi: W(t) singular at t = " + std::to_string(double(t)) +
                                " (conjugate point inside the geodesic)");
    // a simple zero of det W between grid nodes flips its sign
    const int sgn = w.determinant() > 0 ? 1 : -1;
    if (sgn != det_sign)
      throw ConjugatePointError("solve_jacobi: det W changes sign in (" + std::to_string(double(grid.t(i))) + ", " +
                                std::to_string(double(t)) + "] (conjugate point inside the geodesic)");
    det_sign = sgn;
    using std::log;
    Scalar ld = 0;
    for (int k = 0; k < n; ++k) ld += log(sv(k));
    sol.log_abs_det[i + 1] = ld;
    sol.cond[i + 1] = sv(0) / sv(n - 1);
  }
  return sol;
}

// A(t) = t W'(t) W(t)^{-1}, the distance Hessian along c_{y,x}; A(0) = I.
template <typename Scalar>
Mat<Scalar> hessian_k(const JacobiSolution<Scalar>& sol, Scalar t) {
  const int n = sol.n();
  if (t < 0 || t > 1) throw std::invalid_argument("hessian_k: t outside [0,1]");
  if (t == 0) return Mat<Scalar>::Identity(n, n);
  auto [w, wp] = sol.at(t);
  Eigen::JacobiSVD<Mat<Scalar>> svd(w);
  if (svd.singularValues()(n - 1) <= Scalar(1e-10) * t) throw ConjugatePointError("hessian_k: W(t) singular");
  return t * wp * w.inverse();
}

// K = f'f^{-1}, K~ = K + I/(1-t), N' = K~N with N(0) = I, M = (1-t)N.
template <typename Scalar = double>
struct CoefficientFamily {
  OdeGrid<Scalar> grid{16};
  JacobiSolution<Scalar> sol;
  Scalar switch_delta = Scalar(1e-3);
  Mat<Scalar> R1, R1p;  // R(1) and R'(1), the series data at t = 1
  std::vector<Mat<Scalar>> K, Ktilde, N, M;  // K[m] is not finite and left empty

  int n() const { return sol.n(); }

  // Near t = 1 with s = 1 - t: f = sI - s^3 R(1)/6 + s^4 R'(1)/12 + ..., hence
  // K~ = (s/3) R(1) - (s^2/4) R'(1) + O(s^3).
  Mat<Scalar> Ktilde_series(Scalar s) const { return (s / 3) * R1 - (s * s / 4) * R1p; }

  Mat<Scalar> Ktilde_direct(Scalar t) const {
    const Scalar s = 1 - t;
    auto [w, wp] = sol.at(s);
    const int n = sol.n();
    return -wp * w.inverse() + Mat<Scalar>::Identity(n, n) / s;
  }

  Mat<Scalar> Ktilde_at(Scalar t) const {
    const Scalar s = 1 - t;
    return s < switch_delta ? Ktilde_series(s) : Ktilde_direct(t);
  }

  Mat<Scalar> K_at(Scalar t) const {
    const int n = sol.n();
    return Ktilde_at(t) - Mat<Scalar>::Identity(n, n) / (1 - t);
  }

  // G1 = -(1-t) K = I - (1-t) K~, bounded on [0,1] with G1(1) = I.
  Mat<Scalar> G1_at(Scalar t) const {
    const int n = sol.n();
    return Mat<Scalar>::Identity(n, n) - (1 - t) * Ktilde_at(t);
  }

  Scalar sup_N_plus_Ninv() const {
    Scalar best = 0;
    for (const auto& x : N) {
      Eigen::JacobiSVD<Mat<Scalar>> svd(x);
      const auto& sv = svd.singularValues();
      best = std::max(best, sv(0) + 1 / sv(sv.size() - 1));
    }
    return best;
  }
};

template <typename Scalar>
CoefficientFamily<Scalar> build_K_family(const JacobiSolution<Scalar>& sol, Scalar switch_delta = Scalar(1e-3)) {
  CoefficientFamily<Scalar> F;
  F.grid = sol.grid;
  F.sol = sol;
  F.switch_delta = switch_delta;
  F.R1 = sol.profile.at(1);
  F.R1p = sol.profile.slope_at_end();
  const int m = sol.grid.m, n = sol.n();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  F.K.resize(std::size_t(m) + 1);
  F.Ktilde.resize(std::size_t(m) + 1);
  F.N.resize(std::size_t(m) + 1);
  F.M.resize(std::size_t(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const Scalar t = sol.grid.t(i);
    F.Ktilde[i] = F.Ktilde_at(t);
    if (i < m) F.K[i] = F.Ktilde[i] - I / (1 - t);
  }
  const Scalar h = sol.grid.h();
  Mat<Scalar> N = I;
  F.N[0] = N;
  for (int i = 0; i < m; ++i) {
    const Scalar t = sol.grid.t(i);
    const Mat<Scalar> Kh = F.Ktilde_at(t + h / 2);
    const Mat<Scalar> k1 = F.Ktilde[i] * N;
    const Mat<Scalar> k2 = Kh * (N + h / 2 * k1);
    const Mat<Scalar> k3 = Kh * (N + h / 2 * k2);
    const Mat<Scalar> k4 = F.Ktilde[i + 1] * (N + h * k3);
    N += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    F.N[i + 1] = N;
  }
  for (int i = 0; i <= m; ++i) F.M[i] = (1 - sol.grid.t(i)) * F.N[i];
  return F;
}

}  // namespace geospec
