#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geospec/pathops.hpp"

using namespace geospec;
using std::numbers::pi;

namespace {

// Keeps the coefficient family alive for the context that points into it.
struct Fixture {
  std::unique_ptr<CoefficientFamily<double>> family;
  PathopsContext ctx;
  OperatorBundle ops;

  Fixture(SpaceKind kind, double kappa, int m, double rho = 1.0, int n = 2) {
    const auto s = GeodesicSetupd::make(ModelSpaced::make(kind, kappa, n), rho, rho + 0.1);
    const auto sol = solve_jacobi(curvature_profile(s, 512), OdeGrid<double>(512));
    family = std::make_unique<CoefficientFamily<double>>(build_K_family(sol, 1e-3));
    ctx = PathopsContext::make(*family, m);
    ops = build_bundle(ctx);
  }
};

ModalFunction random_mean_zero(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  auto f = ModalFunction::zero(n, m);
  for (int a = 0; a < n; ++a)
    for (int k = 1; k < m; ++k) f(a, k) = g(rng) / k;
  return f;
}

double e0_of(SpaceKind kind, double kappa, int m, bool transverse = false) {
  Fixture fx(kind, kappa, m);
  const auto rep = compute_e0(fx.ops);
  return transverse ? rep.e0_transverse : rep.e0;
}

}  // namespace

TEST_CASE("U and its inverse round trip exactly; mean-zero input ends at zero") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_mean_zero(2, 12, rng);
    const auto h = apply_U(f);
    CHECK(h.m == 13);
    CHECK((apply_U_inv(h).coef - f.coef).norm() <= 1e-13 * (1 + f.norm()));
    CHECK(h.eval(1.0).norm() <= 1e-13);
  }
  auto c = ModalFunction::zero(1, 4);
  c(0, 0) = 2.5;  // the constant 2.5
  const auto h = apply_U(c);
  for (double t : {0.0, 0.3, 0.9}) CHECK(h.eval(t)(0) == doctest::Approx(2.5 * t));
  // cos(pi t) has U-image sin(pi t)/pi
  const auto r = make_rule(graded_breaks(8, 4, 4), 16);
  NodalField F(r.size(), 1);
  for (int k = 0; k < r.size(); ++k) F(k, 0) = std::cos(pi * r.t(k));
  ModalFunction cosf{1, 16, galerkin(r, F, 1, 16).col(0)};
  CHECK(apply_U(cosf).eval(1.0).norm() <= 1e-12);
  CHECK(apply_U(cosf).eval(0.5)(0) == doctest::Approx(1 / pi).epsilon(1e-10));
}

TEST_CASE("flat S on cos(2 pi t) matches its closed form") {
  Fixture fx(SpaceKind::flat, 0, 32);
  const auto& r = fx.ctx.rule;
  const int Q = r.size();
  NodalField F = NodalField::Zero(2 * Q, 1);
  for (int k = 0; k < Q; ++k) F(k, 0) = std::cos(2 * pi * r.t(k));
  const NodalField G = image_S(fx.ctx, F);
  double worst = 0;
  for (int k = 0; k < Q; ++k) {
    const double t = r.t(k);
    if (1 - t < 1e-6) continue;  // closed form cancels catastrophically here
    const double exact = std::cos(2 * pi * t) + std::sin(2 * pi * t) / (2 * pi * (1 - t));
    worst = std::max(worst, std::abs(G(k, 0) - exact));
    CHECK(std::abs(G(Q + k, 0)) <= 1e-14);
  }
  CHECK(worst <= 1e-8);
  // flat S is an isometry on mean-zero functions and T vanishes
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_mean_zero(2, 32, rng);
    CHECK(fx.ops.S.apply(f).norm() == doctest::Approx(f.norm()).epsilon(1e-8));
  }
  CHECK(fx.ops.T.op_norm() <= 1e-12);
}

TEST_CASE("S rejects arguments outside the mean-zero subspace") {
  Fixture fx(SpaceKind::sphere, 1, 16);
  auto c = ModalFunction::zero(2, 16);
  c(0, 0) = 1;
  CHECK_THROWS_AS(fx.ops.S.apply(c), DomainFlag);
  CHECK_NOTHROW(fx.ops.S_inv.apply(c));  // S^-1 is defined on all of L2
  CHECK_THROWS_AS(fx.ops.S.apply(ModalFunction::zero(2, 8)), std::invalid_argument);
  // the inverse adjoint kills constants
  CHECK(fx.ops.S_inv_adj.apply(c).norm() <= 1e-12);
  CHECK(fx.ops.S_inv_adj_f.apply(c).norm() <= 1e-12);
}

TEST_CASE("quadratic form identity on random mean-zero functions") {
  Fixture fx(SpaceKind::sphere, 1, 48);
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const auto f = random_mean_zero(2, 48, rng);
    const double lhs = fx.ops.S.apply(f).coef.squaredNorm();
    const double rhs = f.coef.dot(fx.ops.I_plus_T.apply(f).coef);
    worst = std::max(worst, std::abs(lhs - rhs) / f.coef.squaredNorm());
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("the two assemblies of the inverse adjoint agree and J0 offsets it by I") {
  Fixture fx(SpaceKind::sphere, 1, 32);
  CHECK(op_norm(fx.ops.S_inv_adj.mat - fx.ops.S_inv_adj_f.mat) <= 1e-6);
  const int D = 2 * 32;
  const auto idx = mean_zero_indices(2, 32);
  const MatrixXd IJ = MatrixXd::Identity(D, D) + fx.ops.J0.mat;
  CHECK(op_norm(restrict_to(IJ - fx.ops.S_inv_adj.mat, idx, idx)) <= 1e-6);
  // the literal reading J0 = (S^-1)^* is off by the identity
  CHECK(op_norm(restrict_to(fx.ops.J0.mat - fx.ops.S_inv_adj.mat, idx, idx)) == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("bottom of the spectrum follows the mode formula") {
  const double flat = e0_of(SpaceKind::flat, 0, 32);
  CHECK(flat == doctest::Approx(1).epsilon(1e-10));
  // oracle: 1 - kappa rho^2 / pi^2 in the limit, second order in m
  const double e64 = e0_of(SpaceKind::sphere, 1, 64), e128 = e0_of(SpaceKind::sphere, 1, 128);
  const double rich = (4 * e128 - e64) / 3;
  CHECK(rich == doctest::Approx(1 - 1 / (pi * pi)).epsilon(1e-4));
  CHECK(e128 < 1);
  // strictly decreasing in curvature on the transverse block; the radial block is the identity
  double prev = 1e9;
  for (double kappa : {-1.0, 0.0, 0.5, 1.0}) {
    const SpaceKind k = kappa < 0 ? SpaceKind::hyperbolic : kappa == 0 ? SpaceKind::flat : SpaceKind::sphere;
    const double e = e0_of(k, kappa, 48, true);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(e0_of(SpaceKind::hyperbolic, -1, 48) == doctest::Approx(1).epsilon(1e-12));
  CHECK(e0_of(SpaceKind::hyperbolic, -1, 48, true) > 1);
}

TEST_CASE("grid convergence sandwich and Hardy boundedness") {
  Fixture a(SpaceKind::sphere, 1, 32), b(SpaceKind::sphere, 1, 64), c(SpaceKind::sphere, 1, 128);
  const double e1 = compute_e0(a.ops).e0, e2 = compute_e0(b.ops).e0, e3 = compute_e0(c.ops).e0;
  CHECK(std::abs(e1 - e2) <= 4 * std::abs(e2 - e3) + 1e-12);
  const double n1 = a.ops.S.op_norm(), n3 = c.ops.S.op_norm();
  CHECK(std::abs(n1 / n3 - 1) <= 0.02);
}

TEST_CASE("spectral report residuals and duality on three geometries") {
  for (auto [kind, kappa] : {std::pair{SpaceKind::flat, 0.0}, {SpaceKind::sphere, 1.0}, {SpaceKind::hyperbolic, -1.0}}) {
    CAPTURE(to_string(kind));
    Fixture fx(kind, kappa, 64);
    const auto rep = spectral_report(fx.ctx);
    CHECK(rep.m == 64);
    CHECK(rep.residuals.at("duality") <= 1e-4);
    for (const char* key : {"sadj_s_minus_i_plus_t", "sinv_s_minus_i", "s_sinv_minus_i",
                            "sinv_adj_i_plus_t_minus_s", "inv_i_plus_t_minus_product"})
      CHECK(rep.residuals.at(key) <= 1e-3);
  }
}

TEST_CASE("bottom eigenvector is the transverse cosine mode on the sphere") {
  Fixture fx(SpaceKind::sphere, 1, 48);
  double lam = 0;
  const auto v = bottom_eigenvector(fx.ops, &lam);
  CHECK(v.norm() == doctest::Approx(1).epsilon(1e-12));
  CHECK(v.is_mean_zero(1e-10));
  // sqrt(2) cos(pi t) e_2 has Legendre coefficients computed on a fine rule
  const auto r = make_rule(graded_breaks(16, 4, 4), 20);
  NodalField F(r.size(), 1);
  for (int k = 0; k < r.size(); ++k) F(k, 0) = std::sqrt(2.0) * std::cos(pi * r.t(k));
  auto mode = ModalFunction::zero(2, 48);
  mode.coef.tail(48) = galerkin(r, F, 1, 48).col(0);
  CHECK(std::abs(mode.coef.dot(v.coef)) > 0.999);
}

TEST_CASE("perturbed J scales linearly in the perturbation size") {
  Fixture fx(SpaceKind::sphere, 1, 32);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  CurvatureProfile<double> base;
  for (int i = 0; i <= 64; ++i) {
    MatrixXd A(2, 2);
    A << g(rng), g(rng), 0, g(rng);
    A(1, 0) = A(0, 1);
    base.samples.push_back(A);
  }
  double sup = 0;
  for (const auto& s : base.samples) sup = std::max(sup, op_norm(s));
  for (auto& s : base.samples) s /= sup;
  auto scaled = [&](double eps) {
    CurvatureProfile<double> p = base;
    for (auto& s : p.samples) s *= eps;
    return p;
  };
  std::vector<double> ratio;
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    const auto res = build_J_eps(fx.ctx, scaled(eps), 0.6);
    CHECK(res.small_regime);
    ratio.push_back(op_norm(res.J.mat - fx.ops.J0.mat) / eps);
  }
  const double slope = std::log10(ratio[2] * 1e-1 / (ratio[0] * 1e-3)) / 2;
  CHECK(slope == doctest::Approx(1).epsilon(0.1));
  const auto big = build_J_eps(fx.ctx, scaled(0.5), 0.6);
  CHECK_FALSE(big.small_regime);
  CHECK(std::isfinite(big.J.op_norm()));
  CHECK_THROWS_AS(build_J_eps(fx.ctx, scaled(0.1), 1.0), std::domain_error);
  const auto zero = build_J_eps(fx.ctx, scaled(0.0), 0.6);
  CHECK(op_norm(zero.J.mat - fx.ops.J0.mat) <= 1e-12);
}
