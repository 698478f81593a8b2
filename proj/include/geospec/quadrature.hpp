#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace geospec {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GaussRule {
  VectorXd x, w;  // nodes and weights on [-1, 1]
};

GaussRule gauss_legendre(int q);

// P_0..P_{K-1} at x in [-1, 1].
VectorXd legendre_values(double x, int K);

// Orthonormal shifted Legendre p_k(t) = sqrt(2k+1) P_k(2t-1), k < m.
VectorXd basis_values(double t, int m);
// int_0^t p_k(s) ds, k < m.
VectorXd basis_antiderivative(double t, int m);

// Composite Gauss rule on [0, 1] with panel edges `breaks`.
struct CompositeRule {
  std::vector<double> breaks;
  int q = 0;
  VectorXd t, w;          // nodes and weights
  MatrixXd partial;       // q x q: int_{-1}^{x_i} l_j on the reference panel
  int size() const { return int(t.size()); }
  int panels() const { return int(breaks.size()) - 1; }
};

// Uniform panels refined geometrically toward both ends (down to ~1e-15 at t = 1).
std::vector<double> graded_breaks(int uniform_panels, int levels_left, int levels_right,
                                  const std::vector<double>& extra = {});
CompositeRule make_rule(std::vector<double> breaks, int q);

// n-vector-valued functions sampled at rule nodes, stacked component-major:
// row a*Q + k holds component a at node k; columns are independent functions.
using NodalField = MatrixXd;

// n x n matrix function sampled at the nodes: entry (a,b) is a Q-vector.
struct NodalMatrix {
  int n = 0;
  std::vector<VectorXd> e;
  const VectorXd& operator()(int a, int b) const { return e[std::size_t(a * n + b)]; }
  VectorXd& operator()(int a, int b) { return e[std::size_t(a * n + b)]; }
};

NodalMatrix sample_matrix(const CompositeRule& r, int n, const std::function<MatrixXd(double)>& fn);
NodalMatrix transpose(const NodalMatrix& A);

// (A F)(t_k) = A(t_k) F(t_k)
NodalField apply(const NodalMatrix& A, const NodalField& F);
// F(t_k) * s(t_k) for a scalar nodal weight
NodalField scale_rows(const NodalField& F, const VectorXd& s, int n);

NodalField cumulative_from_zero(const CompositeRule& r, const NodalField& F, int n);
NodalField cumulative_to_one(const CompositeRule& r, const NodalField& F, int n);
// Hardy average (B g)(t) = (1/(1-t)) int_t^1 g.
NodalField hardy_average(const CompositeRule& r, const NodalField& F, int n);
// int_0^1 F per component: n x C.
MatrixXd integrate(const CompositeRule& r, const NodalField& F, int n);

// Basis functions p_k e_a at the nodes, column a*m + k.
NodalField basis_field(const CompositeRule& r, int n, int m);
// Galerkin coefficients <p_k e_a, F> (row a*m + k).
MatrixXd galerkin(const CompositeRule& r, const NodalField& F, int n, int m);
// Nodal values of a coefficient vector (component-major).
NodalField synthesize(const CompositeRule& r, const VectorXd& coef, int n, int m);

double op_norm(const MatrixXd& A);

}  // namespace geospec
