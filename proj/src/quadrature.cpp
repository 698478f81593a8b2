#include "geospec/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geospec {

GaussRule gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: q >= 1");
  GaussRule g;
  g.x.resize(q);
  g.w.resize(q);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (q == 1) { p1 = x; p0 = 1; }
      dp = q * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q == 1 ? 1.0 : q * (x * p1 - p0) / (x * x - 1);
    }
    const double w = 2 / ((1 - x * x) * dp * dp);
    g.x(i) = -x;
    g.x(q - 1 - i) = x;
    g.w(i) = w;
    g.w(q - 1 - i) = w;
  }
  return g;
}

VectorXd legendre_values(double x, int K) {
  VectorXd P(K);
  if (K > 0) P(0) = 1;
  if (K > 1) P(1) = x;
  for (int k = 2; k < K; ++k) P(k) = ((2 * k - 1) * x * P(k - 1) - (k - 1) * P(k - 2)) / k;
  return P;
}

VectorXd basis_values(double t, int m) {
  VectorXd P = legendre_values(2 * t - 1, m);
  for (int k = 0; k < m; ++k) P(k) *= std::sqrt(2.0 * k + 1);
  return P;
}

VectorXd basis_antiderivative(double t, int m) {
  // int_{-1}^x P_k = (P_{k+1} - P_{k-1}) / (2k+1), and dt = dx/2
  const double x = 2 * t - 1;
  VectorXd P = legendre_values(x, m + 1), out(m);
  for (int k = 0; k < m; ++k) {
    const double I = k == 0 ? x + 1 : (P(k + 1) - P(k - 1)) / (2 * k + 1);
    out(k) = std::sqrt(2.0 * k + 1) * I / 2;
  }
  return out;
}

std::vector<double> graded_breaks(int uniform_panels, int levels_left, int levels_right,
                                  const std::vector<double>& extra) {
  std::vector<double> b;
  const double d = 1.0 / uniform_panels;
  for (int i = 0; i <= uniform_panels; ++i) b.push_back(i * d);
  double a = d;
  for (int k = 0; k < levels_left; ++k) { a /= 2; b.push_back(a); }
  a = d;
  for (int k = 0; k < levels_right && a > 4e-13; ++k) { a /= 2; b.push_back(1 - a); }
  for (double e : extra) b.push_back(e);
  std::sort(b.begin(), b.end());
  std::vector<double> u;
  for (double x : b) {
    if (x < 0 || x > 1) continue;
    if (u.empty() || x - u.back() > 1e-15) u.push_back(x);
  }
  if (u.back() != 1.0) u.back() = 1.0;
  return u;
}

CompositeRule make_rule(std::vector<double> breaks, int q) {
  if (breaks.size() < 2 || breaks.front() != 0.0 || breaks.back() != 1.0)
    throw std::invalid_argument("make_rule: breaks must span [0, 1]");
  CompositeRule r;
  r.breaks = std::move(breaks);
  r.q = q;
  const GaussRule g = gauss_legendre(q);
  const int P = r.panels();
  r.t.resize(P * q);
  r.w.resize(P * q);
  for (int p = 0; p < P; ++p) {
    const double a = r.breaks[p], b = r.breaks[p + 1], hw = (b - a) / 2;
    for (int i = 0; i < q; ++i) {
      r.t(p * q + i) = a + hw * (g.x(i) + 1);
      r.w(p * q + i) = hw * g.w(i);
    }
  }
  // Lagrange basis on Gauss nodes: l_j(x) = w_j sum_k (2k+1)/2 P_k(x_j) P_k(x)
  r.partial.resize(q, q);
  std::vector<VectorXd> Pj(q);
  for (int j = 0; j < q; ++j) Pj[j] = legendre_values(g.x(j), q);
  for (int i = 0; i < q; ++i) {
    const VectorXd Pi = legendre_values(g.x(i), q + 1);
    VectorXd I(q);
    for (int k = 0; k < q; ++k) I(k) = k == 0 ? g.x(i) + 1 : (Pi(k + 1) - Pi(k - 1)) / (2 * k + 1);
    for (int j = 0; j < q; ++j) {
      double s = 0;
      for (int k = 0; k < q; ++k) s += (2 * k + 1) / 2.0 * Pj[j](k) * I(k);
      r.partial(i, j) = g.w(j) * s;
    }
  }
  return r;
}

NodalMatrix sample_matrix(const CompositeRule& r, int n, const std::function<MatrixXd(double)>& fn) {
  NodalMatrix A;
  A.n = n;
  A.e.assign(std::size_t(n * n), VectorXd(r.size()));
  for (int k = 0; k < r.size(); ++k) {
    const MatrixXd v = fn(r.t(k));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) A(a, b)(k) = v(a, b);
  }
  return A;
}

NodalMatrix transpose(const NodalMatrix& A) {
  NodalMatrix B = A;
  for (int a = 0; a < A.n; ++a)
    for (int b = 0; b < A.n; ++b) B(a, b) = A(b, a);
  return B;
}

NodalField apply(const NodalMatrix& A, const NodalField& F) {
  const int n = A.n, Q = int(A.e.front().size());
  NodalField out = NodalField::Zero(F.rows(), F.cols());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const VectorXd& c = A(a, b);
      if (c.cwiseAbs().maxCoeff() == 0) continue;
      out.middleRows(a * Q, Q).array() += F.middleRows(b * Q, Q).array().colwise() * c.array();
    }
  return out;
}

NodalField scale_rows(const NodalField& F, const VectorXd& s, int n) {
  const int Q = int(s.size());
  NodalField out(F.rows(), F.cols());
  for (int a = 0; a < n; ++a) out.middleRows(a * Q, Q) = F.middleRows(a * Q, Q).array().colwise() * s.array();
  return out;
}

NodalField cumulative_from_zero(const CompositeRule& r, const NodalField& F, int n) {
  const int Q = r.size(), q = r.q, C = int(F.cols());
  NodalField out(F.rows(), C);
  for (int a = 0; a < n; ++a) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(C);
    for (int p = 0; p < r.panels(); ++p) {
      const double hw = (r.breaks[p + 1] - r.breaks[p]) / 2;
      const auto blk = F.middleRows(a * Q + p * q, q);
      out.middleRows(a * Q + p * q, q) = (hw * r.partial * blk).rowwise() + acc;
      acc += r.w.segment(p * q, q).transpose() * blk;
    }
  }
  return out;
}

NodalField cumulative_to_one(const CompositeRule& r, const NodalField& F, int n) {
  const int Q = r.size(), q = r.q, C = int(F.cols());
  NodalField out(F.rows(), C);
  // reference integral from x_i to +1 of l_j is w_j - partial(i,j)
  const MatrixXd rest = (gauss_legendre(q).w.transpose().replicate(q, 1)) - r.partial;
  for (int a = 0; a < n; ++a) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(C);
    for (int p = r.panels() - 1; p >= 0; --p) {
      const double hw = (r.breaks[p + 1] - r.breaks[p]) / 2;
      const auto blk = F.middleRows(a * Q + p * q, q);
      out.middleRows(a * Q + p * q, q) = (hw * rest * blk).rowwise() + acc;
      acc += r.w.segment(p * q, q).transpose() * blk;
    }
  }
  return out;
}

NodalField hardy_average(const CompositeRule& r, const NodalField& F, int n) {
  const VectorXd inv = (1.0 - r.t.array()).inverse().matrix();
  return scale_rows(cumulative_to_one(r, F, n), inv, n);
}

MatrixXd integrate(const CompositeRule& r, const NodalField& F, int n) {
  const int Q = r.size();
  MatrixXd out(n, F.cols());
  for (int a = 0; a < n; ++a) out.row(a) = r.w.transpose() * F.middleRows(a * Q, Q);
  return out;
}

NodalField basis_field(const CompositeRule& r, int n, int m) {
  const int Q = r.size();
  MatrixXd Phi(Q, m);
  for (int k = 0; k < Q; ++k) Phi.row(k) = basis_values(r.t(k), m).transpose();
  NodalField F = NodalField::Zero(n * Q, n * m);
  for (int a = 0; a < n; ++a) F.block(a * Q, a * m, Q, m) = Phi;
  return F;
}

MatrixXd galerkin(const CompositeRule& r, const NodalField& F, int n, int m) {
  const int Q = r.size();
  MatrixXd PhiW(Q, m);
  for (int k = 0; k < Q; ++k) PhiW.row(k) = r.w(k) * basis_values(r.t(k), m).transpose();
  MatrixXd out(n * m, F.cols());
  for (int a = 0; a < n; ++a) out.middleRows(a * m, m).noalias() = PhiW.transpose() * F.middleRows(a * Q, Q);
  return out;
}

NodalField synthesize(const CompositeRule& r, const VectorXd& coef, int n, int m) {
  const int Q = r.size();
  NodalField F(n * Q, 1);
  for (int k = 0; k < Q; ++k) {
    const VectorXd p = basis_values(r.t(k), m);
    for (int a = 0; a < n; ++a) F(a * Q + k, 0) = p.dot(coef.segment(a * m, m));
  }
  return F;
}

double op_norm(const MatrixXd& A) {
  if (A.size() == 0) return 0;
  const MatrixXd G = A.rows() >= A.cols() ? MatrixXd(A.transpose() * A) : MatrixXd(A * A.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace geospec
