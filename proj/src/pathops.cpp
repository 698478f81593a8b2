#include "geospec/pathops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace geospec {

VectorXd ModalFunction::eval(double t) const {
  const VectorXd p = basis_values(t, m);
  VectorXd v(n);
  for (int a = 0; a < n; ++a) v(a) = p.dot(coef.segment(a * m, m));
  return v;
}

VectorXd ModalFunction::mean() const {
  VectorXd v(n);
  for (int a = 0; a < n; ++a) v(a) = coef(a * m);  // p_0 = 1
  return v;
}

MatrixXd ModalFunction::cell_averages(int M) const {
  MatrixXd out(M, n);
  VectorXd left = basis_antiderivative(0.0, m);
  for (int i = 0; i < M; ++i) {
    const VectorXd right = basis_antiderivative(double(i + 1) / M, m);
    const VectorXd d = (right - left) * M;
    for (int a = 0; a < n; ++a) out(i, a) = d.dot(coef.segment(a * m, m));
    left = right;
  }
  return out;
}

ModalFunction DiscretizedOperator::apply(const ModalFunction& f) const {
  if (f.n != n || f.m != m) throw std::invalid_argument(name + ": grid mismatch");
  if (domain == Subspace::L2_0 && !f.is_mean_zero(1e-10))
    throw DomainFlag(name + ": argument is not mean-zero (domain is L2_0)");
  return {n, m, mat * f.coef};
}

std::vector<int> mean_zero_indices(int n, int m) {
  std::vector<int> idx;
  for (int a = 0; a < n; ++a)
    for (int k = 1; k < m; ++k) idx.push_back(a * m + k);
  return idx;
}

MatrixXd restrict_to(const MatrixXd& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  MatrixXd B(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) B(i, j) = A(rows[i], cols[j]);
  return B;
}

namespace {

void zero_mean_rows(MatrixXd& A, int n, int m) {
  for (int a = 0; a < n; ++a) A.row(a * m).setZero();
}
void zero_mean_cols(MatrixXd& A, int n, int m) {
  for (int a = 0; a < n; ++a) A.col(a * m).setZero();
}

DiscretizedOperator finish(std::string name, int n, int m, MatrixXd A, Subspace dom, Subspace cod) {
  if (dom == Subspace::L2_0) zero_mean_cols(A, n, m);
  if (cod == Subspace::L2_0) zero_mean_rows(A, n, m);
  if (!A.allFinite()) throw std::runtime_error(name + ": non-finite entries");
  return {std::move(name), n, m, std::move(A), dom, cod};
}

// int_0^t p_k as a combination of p_{k-1}, p_{k+1} (p_0 also feeds p_0).
void antiderivative_terms(int k, double& lo, double& hi) {
  if (k == 0) {
    lo = 0.5;
    hi = 0.5 / std::sqrt(3.0);
    return;
  }
  lo = -0.5 / std::sqrt((2.0 * k + 1) * (2.0 * k - 1));
  hi = 0.5 / std::sqrt((2.0 * k + 1) * (2.0 * k + 3));
}

}  // namespace

ModalFunction apply_U(const ModalFunction& f) {
  ModalFunction g = ModalFunction::zero(f.n, f.m + 1);
  for (int a = 0; a < f.n; ++a)
    for (int k = 0; k < f.m; ++k) {
      double lo, hi;
      antiderivative_terms(k, lo, hi);
      const double c = f(a, k);
      if (k == 0) g(a, 0) += lo * c; else g(a, k - 1) += lo * c;
      g(a, k + 1) += hi * c;
    }
  return g;
}

ModalFunction apply_U_inv(const ModalFunction& h) {
  // p_k' = sum_{j < k, k - j odd} 2 sqrt(2k+1) sqrt(2j+1) p_j
  const int m = std::max(h.m - 1, 1);
  ModalFunction g = ModalFunction::zero(h.n, m);
  for (int a = 0; a < h.n; ++a)
    for (int k = 1; k < h.m; ++k)
      for (int j = k - 1; j >= 0; j -= 2) g(a, j) += 2 * std::sqrt((2.0 * k + 1) * (2.0 * j + 1)) * h(a, k);
  return g;
}

DiscretizedOperator build_U(int n, int m) {
  MatrixXd A = MatrixXd::Zero(n * m, n * m);
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < m; ++k) {
      ModalFunction e = ModalFunction::zero(n, m);
      e(a, k) = 1;
      const ModalFunction g = apply_U(e);
      for (int b = 0; b < n; ++b)
        for (int j = 0; j < m; ++j) A(b * m + j, a * m + k) = g(b, j);
    }
  return finish("U", n, m, A, Subspace::L2, Subspace::L2);
}

CompositeRule operator_rule(int m, const RuleSpec& spec) {
  const int P = spec.uniform_panels > 0 ? spec.uniform_panels : std::max(16, m / 2);
  return make_rule(graded_breaks(P, spec.levels_left, spec.levels_right, spec.extra_breaks), spec.q);
}

NodalMatrix inverse(const NodalMatrix& A) {
  const int n = A.n, Q = int(A.e.front().size());
  NodalMatrix B = A;
  MatrixXd x(n, n);
  for (int k = 0; k < Q; ++k) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) x(a, b) = A(a, b)(k);
    const MatrixXd y = x.inverse();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) B(a, b)(k) = y(a, b);
  }
  return B;
}

NodalMatrix propagate_N(const CompositeRule& r, int n, const std::function<MatrixXd(double)>& Ktilde) {
  const int Q = r.size();
  NodalMatrix out;
  out.n = n;
  out.e.assign(std::size_t(n * n), VectorXd(Q));
  // march through panel edges and nodes in increasing order
  MatrixXd N = MatrixXd::Identity(n, n);
  double t = 0;
  MatrixXd Kt = Ktilde(0.0);
  auto step = [&](double t1) {
    const double h = t1 - t;
    if (h <= 0) return;
    const MatrixXd Km = Ktilde(t + h / 2), K1 = Ktilde(t1);
    const MatrixXd k1 = Kt * N;
    const MatrixXd k2 = Km * (N + h / 2 * k1);
    const MatrixXd k3 = Km * (N + h / 2 * k2);
    const MatrixXd k4 = K1 * (N + h * k3);
    N += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t1;
    Kt = K1;
  };
  for (int p = 0; p < r.panels(); ++p) {
    step(r.breaks[p]);
    for (int i = 0; i < r.q; ++i) {
      const int k = p * r.q + i;
      step(r.t(k));
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out(a, b)(k) = N(a, b);
    }
  }
  return out;
}

PathopsContext PathopsContext::make(const CoefficientFamily<double>& family, int m, const RuleSpec& spec) {
  PathopsContext c;
  c.n = family.n();
  c.m = m;
  c.family = &family;
  c.rule = operator_rule(m, spec);
  c.basis = basis_field(c.rule, c.n, m);
  c.Ktilde = sample_matrix(c.rule, c.n, [&](double t) { return family.Ktilde_at(t); });
  c.G1 = sample_matrix(c.rule, c.n, [&](double t) { return family.G1_at(t); });
  c.R = sample_matrix(c.rule, c.n, [&](double t) { return family.sol.profile.at(t); });
  c.N = propagate_N(c.rule, c.n, [&](double t) { return family.Ktilde_at(t); });
  c.Ninv = inverse(c.N);
  return c;
}

namespace {

VectorXd one_minus_t_inv(const CompositeRule& r) { return (1.0 - r.t.array()).inverse().matrix(); }

}  // namespace

// S phi = phi - K U phi = phi - B phi - K~ U phi on mean-zero phi
NodalField image_S(const PathopsContext& c, const NodalField& F) {
  return F - hardy_average(c.rule, F, c.n) - apply(c.Ktilde, cumulative_from_zero(c.rule, F, c.n));
}

// S^{-1} phi = phi + f' int_0^t f^{-1} phi = phi - G1 N int_0^t N^{-1} phi / (1-s)
NodalField image_S_inv(const PathopsContext& c, const NodalField& F) {
  const NodalField g = scale_rows(apply(c.Ninv, F), one_minus_t_inv(c.rule), c.n);
  return F - apply(c.G1, apply(c.N, cumulative_from_zero(c.rule, g, c.n)));
}

// S^* phi = phi - mean(phi) + V - mean(V), V = int_0^t K phi; the means are removed by projection
NodalField image_S_adj(const PathopsContext& c, const NodalField& F) {
  const NodalField KF = apply(c.Ktilde, F) - scale_rows(F, one_minus_t_inv(c.rule), c.n);
  return F + cumulative_from_zero(c.rule, KF, c.n);
}

// (S^{-1})^* phi = phi + (M^*)^{-1} int_t^1 M^* K phi = phi - N^{-T} B[N^T G1 phi]
NodalField image_S_inv_adj(const PathopsContext& c, const NodalField& F) {
  const NodalField inner = apply(transpose(c.N), apply(c.G1, F));
  return F - apply(transpose(c.Ninv), hardy_average(c.rule, inner, c.n));
}

// Same operator from f and f' directly: with F(t) = f(t)/(1-t) and (1-s) f'(s) f(s)^{-1} = -A(1-s),
// (S^{-1})^* phi = phi - F(t)^{-T} B[F^T A(1-.) phi].
NodalField image_S_inv_adj_f(const PathopsContext& c, const NodalField& F) {
  const auto& sol = c.family->sol;
  const NodalMatrix Fm = sample_matrix(c.rule, c.n, [&](double t) {
    const double s = 1 - t;
    return MatrixXd(sol.at(s).first / s);
  });
  const NodalMatrix A = sample_matrix(c.rule, c.n, [&](double t) { return hessian_k(sol, 1 - t); });
  const NodalField inner = apply(transpose(Fm), apply(A, F));
  return F - apply(transpose(inverse(Fm)), hardy_average(c.rule, inner, c.n));
}

// T phi = -int_t^1 R U phi + mean (the mean is removed by projection)
NodalField image_T(const PathopsContext& c, const NodalField& F) {
  return -cumulative_to_one(c.rule, apply(c.R, cumulative_from_zero(c.rule, F, c.n)), c.n);
}

namespace {

DiscretizedOperator assemble(const PathopsContext& c, const std::string& name, NodalField image, Subspace dom,
                             Subspace cod) {
  return finish(name, c.n, c.m, galerkin(c.rule, image, c.n, c.m), dom, cod);
}

}  // namespace

DiscretizedOperator build_S(const PathopsContext& c) {
  return assemble(c, "S", image_S(c, c.basis), Subspace::L2_0, Subspace::L2);
}
DiscretizedOperator build_S_inv(const PathopsContext& c) {
  return assemble(c, "S_inv", image_S_inv(c, c.basis), Subspace::L2, Subspace::L2_0);
}
DiscretizedOperator build_S_adj(const PathopsContext& c) {
  return assemble(c, "S_adj", image_S_adj(c, c.basis), Subspace::L2, Subspace::L2_0);
}
DiscretizedOperator build_S_inv_adj(const PathopsContext& c) {
  // defined on all of L2 through the mean-zero projector, so constants map to 0
  auto A = assemble(c, "S_inv_adj", image_S_inv_adj(c, c.basis), Subspace::L2_0, Subspace::L2);
  A.domain = Subspace::L2;
  return A;
}
DiscretizedOperator build_S_inv_adj_f(const PathopsContext& c) {
  // defined on all of L2 through the mean-zero projector, so constants map to 0
  auto A = assemble(c, "S_inv_adj_f", image_S_inv_adj_f(c, c.basis), Subspace::L2_0, Subspace::L2);
  A.domain = Subspace::L2;
  return A;
}
DiscretizedOperator build_T(const PathopsContext& c) {
  return assemble(c, "T", image_T(c, c.basis), Subspace::L2_0, Subspace::L2_0);
}
DiscretizedOperator build_I_plus_T(const PathopsContext& c) {
  DiscretizedOperator T = build_T(c);
  MatrixXd A = T.mat + MatrixXd::Identity(T.mat.rows(), T.mat.cols());
  return finish("I_plus_T", c.n, c.m, A, Subspace::L2_0, Subspace::L2_0);
}

DiscretizedOperator build_J(const CompositeRule& r, int n, int m, const std::function<MatrixXd(double)>& Ktilde,
                            const std::string& name) {
  const NodalMatrix N = propagate_N(r, n, Ktilde);
  const NodalMatrix G = sample_matrix(r, n, [&](double t) {
    return MatrixXd(MatrixXd::Identity(n, n) - (1 - t) * Ktilde(t));
  });
  const NodalField B = basis_field(r, n, m);
  const NodalField inner = apply(transpose(N), apply(G, B));
  const NodalField img = -apply(transpose(inverse(N)), hardy_average(r, inner, n));
  return finish(name, n, m, galerkin(r, img, n, m), Subspace::L2, Subspace::L2);
}

JEpsResult build_J_eps(const PathopsContext& c, const CurvatureProfile<double>& C_eps, double delta_exp,
                       double small_threshold) {
  if (!(delta_exp > 0 && delta_exp < 1)) throw std::domain_error("build_J_eps: delta must lie in (0, 1)");
  for (const auto& s : C_eps.samples)
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("build_J_eps: C_eps samples must be symmetric");
  JEpsResult res;
  for (const auto& s : C_eps.samples) res.sup_C = std::max(res.sup_C, op_norm(s));
  res.small_regime = res.sup_C <= small_threshold;
  const auto* fam = c.family;
  auto Kt = [fam, &C_eps, delta_exp](double t) {
    return MatrixXd(fam->Ktilde_at(t) + C_eps.at(t) * std::pow(1 - t, -delta_exp));
  };
  res.J = build_J(c.rule, c.n, c.m, Kt, "J_eps");
  return res;
}

OperatorBundle build_bundle(const PathopsContext& c) {
  OperatorBundle b;
  b.U = build_U(c.n, c.m);
  b.S = build_S(c);
  b.S_inv = build_S_inv(c);
  b.S_adj = build_S_adj(c);
  b.S_inv_adj = build_S_inv_adj(c);
  b.S_inv_adj_f = build_S_inv_adj_f(c);
  b.T = build_T(c);
  b.I_plus_T = build_I_plus_T(c);
  const auto* fam = c.family;
  b.J0 = build_J(c.rule, c.n, c.m, [fam](double t) { return fam->Ktilde_at(t); }, "J0");
  return b;
}

namespace {

MatrixXd symmetrized_block(const DiscretizedOperator& A, const std::vector<int>& idx) {
  const MatrixXd B = restrict_to(A.mat, idx, idx);
  return 0.5 * (B + B.transpose());
}

}  // namespace

SpectralReport compute_e0(const OperatorBundle& ops) {
  const int n = ops.I_plus_T.n, m = ops.I_plus_T.m;
  SpectralReport rep;
  rep.m = m;
  const auto idx = mean_zero_indices(n, m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized_block(ops.I_plus_T, idx));
  if (es.info() != Eigen::Success) throw std::runtime_error("compute_e0: eigensolver did not converge");
  rep.e0 = es.eigenvalues()(0);
  for (int i = 0; i < std::min<int>(8, int(es.eigenvalues().size())); ++i) rep.spectrum.push_back(es.eigenvalues()(i));
  std::vector<int> tr;
  for (int a = 1; a < n; ++a)
    for (int k = 1; k < m; ++k) tr.push_back(a * m + k);
  Eigen::SelfAdjointEigenSolver<MatrixXd> et(symmetrized_block(ops.I_plus_T, tr), Eigen::EigenvaluesOnly);
  rep.e0_transverse = et.eigenvalues()(0);
  rep.op_norm_sinv_adj = ops.S_inv_adj.op_norm();
  rep.e0_dual = 1.0 / (rep.op_norm_sinv_adj * rep.op_norm_sinv_adj);
  rep.relative_gap = std::abs(rep.e0 - rep.e0_dual) / rep.e0;
  return rep;
}

ModalFunction bottom_eigenvector(const OperatorBundle& ops, double* eigenvalue) {
  const int n = ops.I_plus_T.n, m = ops.I_plus_T.m;
  const auto idx = mean_zero_indices(n, m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized_block(ops.I_plus_T, idx));
  if (es.info() != Eigen::Success) throw std::runtime_error("bottom_eigenvector: eigensolver did not converge");
  ModalFunction f = ModalFunction::zero(n, m);
  VectorXd v = es.eigenvectors().col(0);
  // deterministic sign: largest-magnitude coordinate positive
  Eigen::Index imax;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0) v = -v;
  for (std::size_t i = 0; i < idx.size(); ++i) f.coef(idx[i]) = v(Eigen::Index(i));
  if (eigenvalue) *eigenvalue = es.eigenvalues()(0);
  return f;
}

std::map<std::string, double> verify_identities(const OperatorBundle& ops, const SpectralReport& rep) {
  const int n = ops.S.n, m = ops.S.m, D = n * m;
  const auto z = mean_zero_indices(n, m);
  std::vector<int> all(D);
  for (int i = 0; i < D; ++i) all[i] = i;
  const MatrixXd I0 = MatrixXd::Identity(Eigen::Index(z.size()), Eigen::Index(z.size()));
  const MatrixXd S = restrict_to(ops.S.mat, all, z);            // L2_0 -> L2
  const MatrixXd Sinv = restrict_to(ops.S_inv.mat, z, all);     // L2 -> L2_0
  const MatrixXd Sadj = restrict_to(ops.S_adj.mat, z, all);     // L2 -> L2_0
  const MatrixXd SinvAdj = restrict_to(ops.S_inv_adj.mat, all, z);
  const MatrixXd IT = restrict_to(ops.I_plus_T.mat, z, z);

  std::map<std::string, double> r;
  r["sadj_s_minus_i_plus_t"] = op_norm(Sadj * S - IT);
  r["sinv_s_minus_i"] = op_norm(Sinv * S - I0);
  // S_h has rank dim - n (it starts on L2_0), so S S^{-1} = I can only hold on range(S_h)
  {
    Eigen::HouseholderQR<MatrixXd> qr(S);
    const MatrixXd Qr = qr.householderQ() * MatrixXd::Identity(D, Eigen::Index(z.size()));
    r["s_sinv_minus_i"] = op_norm((S * Sinv - MatrixXd::Identity(D, D)) * Qr);
    r["s_sinv_minus_i_full"] = op_norm(S * Sinv - MatrixXd::Identity(D, D));
  }
  r["sinv_adj_i_plus_t_minus_s"] = op_norm(SinvAdj * IT - S);
  {
    const MatrixXd ITinv = IT.partialPivLu().inverse();
    r["inv_i_plus_t_minus_product"] = op_norm(ITinv - Sinv * SinvAdj);
  }
  r["duality"] = std::abs(rep.e0 * rep.op_norm_sinv_adj * rep.op_norm_sinv_adj - 1);
  r["sinv_adj_routes"] = op_norm(ops.S_inv_adj.mat - ops.S_inv_adj_f.mat);
  r["sadj_minus_s_transpose"] = op_norm(Sadj - S.transpose());
  r["sinv_adj_minus_sinv_transpose"] = op_norm(SinvAdj - Sinv.transpose());
  {
    const MatrixXd ITs = restrict_to(ops.T.mat, z, z);
    r["t_asymmetry"] = op_norm(ITs - ITs.transpose());
  }
  {
    MatrixXd IJ = ops.J0.mat + MatrixXd::Identity(D, D);
    r["i_plus_j0_minus_sinv_adj"] = op_norm(IJ - ops.S_inv_adj.mat);
    r["j0_minus_sinv_adj"] = op_norm(ops.J0.mat - ops.S_inv_adj.mat);
    // the raw formula also annihilates constants
    double c = 0;
    for (int a = 0; a < n; ++a) c = std::max(c, IJ.col(a * m).norm());
    r["sinv_adj_on_constants"] = c;
  }
  return r;
}

SpectralReport spectral_report(const PathopsContext& c) {
  const OperatorBundle ops = build_bundle(c);
  SpectralReport rep = compute_e0(ops);
  rep.residuals = verify_identities(ops, rep);
  return rep;
}

double nodal_norm(const CompositeRule& r, const NodalField& F, int n) {
  const int Q = r.size();
  double s = 0;
  for (int a = 0; a < n; ++a) s += (r.w.array() * F.middleRows(a * Q, Q).col(0).array().square()).sum();
  return std::sqrt(s);
}

}  // namespace geospec
