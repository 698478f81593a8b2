#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geospec/geometry.hpp"

using namespace geospec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelSpaced space(SpaceKind k, double kappa, int n = 3) { return ModelSpaced::make(k, kappa, n); }

// Random point reached from the origin, and a random tangent vector there.
std::pair<VectorXd, VectorXd> random_pair(const ModelSpaced& M, std::mt19937_64& rng, double max_len) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  auto tangent = [&](const VectorXd& p, double len) {
    VectorXd v(M.ambient_dim());
    for (int i = 0; i < v.size(); ++i) v(i) = g(rng);
    v = M.project_tangent(p, v);
    return VectorXd(v * (len / M.norm(v)));
  };
  const VectorXd p = exp_map(M, M.origin(), tangent(M.origin(), u(rng) * max_len));
  return {p, tangent(p, u(rng) * max_len)};
}

// Closed-form distances used as independent oracles.
double oracle_distance(const ModelSpaced& M, const VectorXd& p, const VectorXd& q) {
  const double R = M.radius();
  switch (M.kind) {
    case SpaceKind::flat: return (p - q).norm();
    case SpaceKind::sphere: return R * std::acos(std::clamp(p.dot(q) / (R * R), -1.0, 1.0));
    case SpaceKind::hyperbolic: return R * std::acosh(std::max(1.0, -M.inner(p, q) / (R * R)));
  }
  return 0;
}

}  // namespace

TEST_CASE("model space construction validates kind, curvature sign and dimension") {
  CHECK_THROWS_AS(ModelSpaced::make(SpaceKind::flat, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpaced::make(SpaceKind::sphere, -1, 2), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpaced::make(SpaceKind::hyperbolic, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpaced::make(SpaceKind::flat, 0.5, 2), std::invalid_argument);
  CHECK_NOTHROW(ModelSpaced::make(SpaceKind::hyperbolic, -2, 4));
  CHECK(parse_space_kind("sphere") == SpaceKind::sphere);
  CHECK_THROWS(parse_space_kind("torus"));
}

TEST_CASE("exp map examples") {
  const auto F = space(SpaceKind::flat, 0, 2);
  VectorXd v(2);
  v << 1, 0;
  CHECK((exp_map(F, F.origin(), v) - v).norm() == doctest::Approx(0));

  const auto S = space(SpaceKind::sphere, 1, 2);
  const VectorXd q = exp_map(S, S.origin(), VectorXd(std::numbers::pi / 2 * S.origin_basis(0)));
  CHECK(std::abs(q(0)) < 1e-15);  // on the equator of the north-pole chart
  CHECK(q.norm() == doctest::Approx(1).epsilon(1e-15));

  const auto H = space(SpaceKind::hyperbolic, -1, 2);
  const VectorXd r = exp_map(H, H.origin(), VectorXd(H.origin_basis(1)));
  CHECK(std::acosh(-H.inner(H.origin(), r)) == doctest::Approx(1).epsilon(1e-14));

  CHECK_THROWS_AS(exp_map(S, S.origin(), VectorXd(3.2 * S.origin_basis(0))), DomainError);
}

TEST_CASE("log map examples") {
  const auto F = space(SpaceKind::flat, 0, 2);
  VectorXd q(2);
  q << 3, 4;
  CHECK((log_map(F, F.origin(), q) - q).norm() < 1e-15);
  for (auto M : {space(SpaceKind::sphere, 1), space(SpaceKind::hyperbolic, -0.5)})
    CHECK(log_map(M, M.origin(), M.origin()).norm() == 0);
  const auto S = space(SpaceKind::sphere, 1);
  CHECK_THROWS_AS(log_map(S, S.origin(), VectorXd(-S.origin())), DomainError);
}

TEST_CASE("exp/log round trip and distances on random inputs") {
  std::mt19937_64 rng(20240611);
  for (auto M : {space(SpaceKind::flat, 0), space(SpaceKind::sphere, 1), space(SpaceKind::sphere, 4),
                 space(SpaceKind::hyperbolic, -1), space(SpaceKind::hyperbolic, -0.25)}) {
    CAPTURE(to_string(M.kind));
    CAPTURE(M.kappa);
    const double max_len = M.kind == SpaceKind::sphere ? 0.9 * M.injectivity_radius() : 3.0;
    double worst_rt = 0, worst_d = 0, worst_manifold = 0;
    for (int i = 0; i < 1000; ++i) {
      auto [p, v] = random_pair(M, rng, max_len);
      const VectorXd q = exp_map(M, p, v);
      worst_rt = std::max(worst_rt, (log_map(M, p, q) - v).norm());
      worst_d = std::max(worst_d, std::abs(oracle_distance(M, p, q) - M.norm(v)));
      if (M.kind != SpaceKind::flat)
        worst_manifold = std::max(worst_manifold, std::abs(M.inner(q, q) - (M.kind == SpaceKind::sphere ? 1 : -1) *
                                                                              M.radius() * M.radius()));
    }
    CHECK(worst_rt <= 1e-9);
    CHECK(worst_d <= 1e-10);
    CHECK(worst_manifold <= 1e-10);
  }
}

TEST_CASE("parallel transport is an isometry and composes along subdivided geodesics") {
  std::mt19937_64 rng(7);
  for (auto M : {space(SpaceKind::flat, 0), space(SpaceKind::sphere, 1), space(SpaceKind::hyperbolic, -1)}) {
    CAPTURE(to_string(M.kind));
    double worst_norm = 0, worst_inner = 0, worst_comp = 0;
    for (int i = 0; i < 100; ++i) {
      auto [p, v] = random_pair(M, rng, M.kind == SpaceKind::sphere ? 2.5 : 2.0);
      auto [p2, w] = random_pair(M, rng, 1.0);
      w = M.project_tangent(p, w);
      const VectorXd d = log_map(M, p, exp_map(M, p, VectorXd(M.project_tangent(p, v))));
      const VectorXd q = exp_map(M, p, d);
      const VectorXd a = M.project_tangent(p, v), b = w;
      const VectorXd Ta = parallel_transport(M, p, q, a), Tb = parallel_transport(M, p, q, b);
      worst_norm = std::max(worst_norm, std::abs(M.norm(Ta) - M.norm(a)));
      worst_inner = std::max(worst_inner, std::abs(M.inner(Ta, Tb) - M.inner(a, b)));
      // five segments along the same geodesic
      VectorXd cur = a, pt = p;
      for (int k = 1; k <= 5; ++k) {
        const VectorXd nx = exp_map(M, p, VectorXd(d * (k / 5.0)));
        cur = parallel_transport(M, pt, nx, cur);
        pt = nx;
      }
      worst_comp = std::max(worst_comp, (cur - Ta).norm());
      (void)p2;
    }
    CHECK(worst_norm <= 1e-12);
    CHECK(worst_inner <= 1e-10);
    CHECK(worst_comp <= 1e-9);
  }
}

TEST_CASE("flat transport is the identity") {
  const auto F = space(SpaceKind::flat, 0);
  VectorXd p(3), q(3), v(3);
  p << 1, 2, 3;
  q << -1, 0, 5;
  v << 0.3, -0.2, 0.9;
  CHECK((parallel_transport(F, p, q, v) - v).norm() == 0);
}

TEST_CASE("holonomy around the octant triangle equals the enclosed area") {
  // unit sphere, vertices e0 (origin), e1, e2: three right angles, area pi/2
  const auto S = space(SpaceKind::sphere, 1);
  const VectorXd A = S.origin(), B = S.origin_basis(0), C = S.origin_basis(1);
  const VectorXd v = S.origin_basis(0);  // tangent at A
  VectorXd w = parallel_transport(S, A, B, v);
  w = parallel_transport(S, B, C, w);
  w = parallel_transport(S, C, A, w);
  CHECK(S.norm(w) == doctest::Approx(1).epsilon(1e-13));
  const double angle = std::acos(std::clamp(S.inner(v, w), -1.0, 1.0));
  CHECK(angle == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("distance Hessian eigenvalues") {
  const auto F = space(SpaceKind::flat, 0), S = space(SpaceKind::sphere, 1), H = space(SpaceKind::hyperbolic, -1);
  CHECK(dist_hessian_eigs(F, 2.7).first == 1);
  CHECK(dist_hessian_eigs(F, 2.7).second == 1);
  CHECK(dist_hessian_eigs(S, 1.1).second == doctest::Approx(1.1 / std::tan(1.1)).epsilon(1e-14));
  CHECK(dist_hessian_eigs(S, 1.1).second == doctest::Approx(0.5599).epsilon(1e-4));
  CHECK(dist_hessian_eigs(S, 1e-9).second == doctest::Approx(1).epsilon(1e-15));
  CHECK(dist_hessian_eigs(H, 0.7).second == doctest::Approx(0.7 / std::tanh(0.7)).epsilon(1e-14));
  const auto S4 = space(SpaceKind::sphere, 4);
  CHECK(dist_hessian_eigs(S4, 0.3).second == doctest::Approx(0.6 / std::tan(0.6)).epsilon(1e-14));
  // the small-argument branch joins the closed form continuously
  const double x = 1e-4;
  CHECK(dist_hessian_eigs(S, x * (1 - 1e-9)).second == doctest::Approx(x / std::tan(x)).epsilon(1e-13));
  CHECK(dist_hessian_eigs(S, x * (1 + 1e-9)).second == doctest::Approx(x / std::tan(x)).epsilon(1e-13));
  CHECK_THROWS_AS(dist_hessian_eigs(S, std::numbers::pi), DomainError);
  CHECK_THROWS_AS(dist_hessian_eigs(S, -0.1), DomainError);
}

TEST_CASE("curvature profile and Ricci operator for constant curvature") {
  for (double kappa : {1.0, -1.0, 0.25}) {
    const auto M = space(kappa > 0 ? SpaceKind::sphere : SpaceKind::hyperbolic, kappa, 3);
    const auto s = GeodesicSetupd::make(M, 0.8, 1.0);
    const auto prof = curvature_profile(s, 32);
    CHECK(prof.is_constant());
    for (const auto& R : prof.samples) {
      CHECK((R - R.transpose()).norm() <= 1e-12);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(R);
      std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + 3);
      std::sort(ev.begin(), ev.end());
      const double k = kappa * 0.64;
      std::vector<double> expect = {0, k, k};
      std::sort(expect.begin(), expect.end());
      for (int i = 0; i < 3; ++i) CHECK(ev[i] == doctest::Approx(expect[i]).epsilon(1e-14));
    }
    CHECK((ricci_operator(M) - kappa * 2 * MatrixXd::Identity(3, 3)).norm() <= 1e-15);
  }
  CHECK(ricci_operator(space(SpaceKind::flat, 0)).norm() == 0);
}

TEST_CASE("geodesic setup satisfies its invariants") {
  for (auto M : {space(SpaceKind::flat, 0), space(SpaceKind::sphere, 1), space(SpaceKind::hyperbolic, -1)}) {
    const auto s = GeodesicSetupd::make(M, 1.0, 1.1);
    CHECK((exp_map(M, s.x, s.xi) - s.y).norm() <= 1e-12);
    CHECK(M.distance(s.x, s.y) == doctest::Approx(1).epsilon(1e-12));
    CHECK(M.inner(s.frame.col(0), s.xi) == doctest::Approx(1));
    MatrixXd G(M.n, M.n);
    for (int a = 0; a < M.n; ++a)
      for (int b = 0; b < M.n; ++b) G(a, b) = M.inner(s.frame.col(a), s.frame.col(b));
    CHECK((G - MatrixXd::Identity(M.n, M.n)).norm() <= 1e-15);
    CHECK((s.geodesic(1) - s.y).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(GeodesicSetupd::make(space(SpaceKind::flat, 0), 1.0, 0.9), std::invalid_argument);
}

TEST_CASE("assumption checks") {
  // independent oracle: Newton on s cot s = 1/2
  double s = 1.2;
  for (int i = 0; i < 50; ++i) {
    const double g = s / std::tan(s) - 0.5;
    const double dg = 1 / std::tan(s) - s / (std::sin(s) * std::sin(s));
    s -= g / dg;
  }
  CHECK(half_hessian_root() == doctest::Approx(s).epsilon(1e-12));
  CHECK(s == doctest::Approx(1.1656).epsilon(1e-4));

  const auto S = space(SpaceKind::sphere, 1, 2);
  const auto ok = check_assumptions(GeodesicSetupd::make(S, 1.0, 1.1));
  CHECK(ok.pass());
  CHECK(ok.max_admissible_r_tube == doctest::Approx(s));
  CHECK(ok.inf_tangential == doctest::Approx(1.1 / std::tan(1.1)));
  const auto bad = check_assumptions(GeodesicSetupd::make(S, 1.0, 1.3));
  CHECK_FALSE(bad.pass());
  int failed = 0;
  for (const auto& c : bad.clauses)
    if (!c.pass) {
      ++failed;
      CHECK(c.name.find("(2)") != std::string::npos);
    }
  CHECK(failed == 1);
  CHECK(check_assumptions(GeodesicSetupd::make(space(SpaceKind::flat, 0, 2), 1.0, 50.0)).pass());
  CHECK(check_assumptions(GeodesicSetupd::make(space(SpaceKind::flat, 0, 2), 1.0, 50.0)).inf_tangential == 1);
  CHECK(check_assumptions(GeodesicSetupd::make(space(SpaceKind::hyperbolic, -1, 2), 1.0, 5.0)).pass());
  // beyond the cut distance on a small sphere
  const auto S9 = space(SpaceKind::sphere, 9, 2);
  const auto cut = check_assumptions(GeodesicSetupd::make(S9, 0.2, 1.2));
  CHECK_FALSE(cut.clauses[1].pass);
}

TEST_CASE("long double instantiation") {
  const auto M = ModelSpace<long double>::make(SpaceKind::sphere, 1.0L, 2);
  Vec<long double> v = 1.3L * M.origin_basis(0) + 0.4L * M.origin_basis(1);
  const auto q = exp_map(M, M.origin(), v);
  CHECK(double((log_map(M, M.origin(), q) - v).norm()) <= 1e-17);
  const auto s = GeodesicSetup<long double>::make(M, 1.0L, 1.1L);
  CHECK(check_assumptions(s).pass());
}
