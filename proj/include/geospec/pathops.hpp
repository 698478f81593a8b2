#pragma once

#include "geospec/jacobi.hpp"
#include "geospec/quadrature.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace geospec {

// Function [0,1] -> R^n as coefficients in the orthonormal shifted Legendre basis,
// stacked component-major (index a*m + k). The k = 0 modes carry the mean.
struct ModalFunction {
  int n = 0, m = 0;
  VectorXd coef;

  static ModalFunction zero(int n, int m) { return {n, m, VectorXd::Zero(n * m)}; }
  double& operator()(int a, int k) { return coef(a * m + k); }
  double operator()(int a, int k) const { return coef(a * m + k); }

  VectorXd eval(double t) const;
  VectorXd mean() const;
  bool is_mean_zero(double tol = 1e-12) const { return mean().cwiseAbs().maxCoeff() <= tol; }
  double norm() const { return coef.norm(); }
  // averages over the cells [i/M, (i+1)/M]: M x n
  MatrixXd cell_averages(int M) const;
};

enum class Subspace { L2, L2_0 };
inline const char* to_string(Subspace s) { return s == Subspace::L2 ? "L2" : "L2_0"; }

class DomainFlag : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Galerkin matrix on span{p_k e_a : k < m}. Operators with domain L2_0 have zero
// columns on the mean modes, with codomain L2_0 zero rows there.
struct DiscretizedOperator {
  std::string name;
  int n = 0, m = 0;
  MatrixXd mat;
  Subspace domain = Subspace::L2, codomain = Subspace::L2;

  ModalFunction apply(const ModalFunction& f) const;
  double op_norm() const { return geospec::op_norm(mat); }
};

// Index list of the mean-zero coordinates (k >= 1).
std::vector<int> mean_zero_indices(int n, int m);
MatrixXd restrict_to(const MatrixXd& A, const std::vector<int>& rows, const std::vector<int>& cols);

ModalFunction apply_U(const ModalFunction& f);      // m -> m + 1 modes, exact
ModalFunction apply_U_inv(const ModalFunction& h);  // exact derivative, m -> m modes
DiscretizedOperator build_U(int n, int m);

struct RuleSpec {
  int q = 20;
  int uniform_panels = 0;  // 0 -> max(16, m/2)
  int levels_left = 12;
  int levels_right = 48;
  std::vector<double> extra_breaks;
};

CompositeRule operator_rule(int m, const RuleSpec& spec = {});

// Coefficient data of one geodesic sampled on a composite rule.
struct PathopsContext {
  int n = 0, m = 0;
  CompositeRule rule;
  NodalField basis;
  NodalMatrix Ktilde, G1, N, Ninv, R;
  const CoefficientFamily<double>* family = nullptr;

  static PathopsContext make(const CoefficientFamily<double>& family, int m, const RuleSpec& spec = {});
};

// N' = K~ N, N(0) = I, integrated through every node of the rule.
NodalMatrix propagate_N(const CompositeRule& r, int n, const std::function<MatrixXd(double)>& Ktilde);
NodalMatrix inverse(const NodalMatrix& A);

// Nodal images of the explicit formulas (columns are independent functions).
NodalField image_S(const PathopsContext& c, const NodalField& F);
NodalField image_S_inv(const PathopsContext& c, const NodalField& F);
NodalField image_S_adj(const PathopsContext& c, const NodalField& F);
NodalField image_S_inv_adj(const PathopsContext& c, const NodalField& F);
NodalField image_S_inv_adj_f(const PathopsContext& c, const NodalField& F);
NodalField image_T(const PathopsContext& c, const NodalField& F);

DiscretizedOperator build_S(const PathopsContext& c);
DiscretizedOperator build_S_inv(const PathopsContext& c);
DiscretizedOperator build_S_adj(const PathopsContext& c);
DiscretizedOperator build_S_inv_adj(const PathopsContext& c);    // M/K form with N from N' = K~N
DiscretizedOperator build_S_inv_adj_f(const PathopsContext& c);  // f, f' form
DiscretizedOperator build_T(const PathopsContext& c);
DiscretizedOperator build_I_plus_T(const PathopsContext& c);

// J phi(t) = (M(t)^*)^{-1} int_t^1 M(s)^* K(s) phi(s) ds for K = -I/(1-t) + K~,
// written as -N(t)^{-T} B[N^T G phi] with G = I - (1-t) K~.
DiscretizedOperator build_J(const CompositeRule& r, int n, int m, const std::function<MatrixXd(double)>& Ktilde,
                            const std::string& name = "J");

struct JEpsResult {
  DiscretizedOperator J;
  double sup_C = 0;
  bool small_regime = true;  // false once sup ||C_eps|| exceeds the small-perturbation threshold
};
JEpsResult build_J_eps(const PathopsContext& c, const CurvatureProfile<double>& C_eps, double delta_exp,
                       double small_threshold = 0.1);

struct SpectralReport {
  int m = 0;
  double e0 = 0;             // min eigenvalue of symmetrized I+T on L2_0
  double e0_transverse = 0;  // same on components orthogonal to xi
  double op_norm_sinv_adj = 0;
  double e0_dual = 0;        // 1 / ||(S^{-1})^*||^2
  double relative_gap = 0;
  std::vector<double> spectrum;  // lowest eigenvalues (diagnostic)
  std::map<std::string, double> residuals;
};

struct OperatorBundle {
  DiscretizedOperator U, S, S_inv, S_adj, S_inv_adj, S_inv_adj_f, T, I_plus_T, J0;
};

OperatorBundle build_bundle(const PathopsContext& c);
SpectralReport compute_e0(const OperatorBundle& ops);
std::map<std::string, double> verify_identities(const OperatorBundle& ops, const SpectralReport& rep);
// e0, both routes and all residuals
SpectralReport spectral_report(const PathopsContext& c);

// Eigenvector of the symmetrized I+T on L2_0 for e0 (unit, mean zero).
ModalFunction bottom_eigenvector(const OperatorBundle& ops, double* eigenvalue = nullptr);

// Exact L2 norm of a nodal image, via the rule.
double nodal_norm(const CompositeRule& r, const NodalField& F, int n);

}  // namespace geospec
