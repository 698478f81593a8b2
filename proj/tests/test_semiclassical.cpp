#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "geospec/semiclassical.hpp"

using namespace geospec;

namespace {

struct Pipeline {
  GeodesicSetupd setup;
  std::unique_ptr<CoefficientFamily<double>> family;
  PathopsContext ctx;
  OperatorBundle ops;
  TrialFunction trial;

  Pipeline(SpaceKind kind, double kappa, int m = 64)
      : setup(GeodesicSetupd::make(ModelSpaced::make(kind, kappa, 2), 1.0, 1.1)) {
    const auto sol = solve_jacobi(curvature_profile(setup, 512), OdeGrid<double>(512));
    family = std::make_unique<CoefficientFamily<double>>(build_K_family(sol, 1e-3));
    ctx = PathopsContext::make(*family, m);
    ops = build_bundle(ctx);
    trial = build_trial(ctx, ops, 1e-3);
  }
};

McConfig mc(std::uint64_t seed, int m_path = 200) {
  McConfig c;
  c.seed = seed;
  c.m_path = m_path;
  c.threads = 1;
  return c;
}

BridgeConfig bridge(double lambda, std::uint64_t seed) {
  BridgeConfig c;
  c.lambda = lambda;
  c.seed = seed;
  c.m_steps = 200;
  return c;
}

}  // namespace

TEST_CASE("trial function invariants on the sphere") {
  Pipeline p(SpaceKind::sphere, 1);
  const auto& tr = p.trial;
  CHECK(tr.phi.norm() == doctest::Approx(1).epsilon(1e-10));
  CHECK(tr.phi.mean().norm() <= 1e-10);
  CHECK(tr.main_norm_sq == doctest::Approx(tr.e0 * tr.e0).epsilon(1e-8));
  CHECK(tr.s_norm_sq == doctest::Approx(tr.e0).epsilon(1e-8));
  CHECK(tr.eps_quality <= 1e-8);
  CHECK_FALSE(tr.shortfall);
  CHECK(build_trial(p.ctx, p.ops, 0.0).shortfall == (tr.eps_quality > 0));
  // U phi vanishes at both ends, so the pairing with l_xi is zero
  CHECK(tr.psi.eval(1.0).norm() <= 1e-12);
  CHECK(tr.psi.eval(0.0).norm() <= 1e-12);
  CHECK(tr.e0 == doctest::Approx(1 - 1 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-3));
}

TEST_CASE("cutoff profile") {
  CHECK(CutoffSpec::chi(0.3) == 1);
  CHECK(CutoffSpec::chi(1.0) == 1);
  CHECK(CutoffSpec::chi(2.0) == 0);
  CHECK(CutoffSpec::chi(5.0) == 0);
  CHECK(CutoffSpec::chi(1.5) == doctest::Approx(0.5));
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const double u = 0.9 + 1.2 * i / 1000.0, d = 1e-6;
    const double c = CutoffSpec::chi(u);
    CHECK(c >= 0);
    CHECK(c <= 1);
    worst = std::max(worst, std::abs(CutoffSpec::chi(u + d) - c) / d);
    CHECK(CutoffSpec::dchi(u) == doctest::Approx((CutoffSpec::chi(u + d) - CutoffSpec::chi(u - d)) / (2 * d)).epsilon(1e-5).scale(1));
  }
  CHECK(worst <= 1.5 + 1e-6);
  CHECK(CutoffSpec{0.25}.lipschitz() == 6);
}

TEST_CASE("F vanishes on the geodesic and D0 F reduces to the main term there") {
  Pipeline p(SpaceKind::sphere, 1);
  const auto g = geodesic_path(p.setup, 200);
  const auto tc = TrialCells::make(p.trial, 200, p.setup.xi_frame());
  CHECK(std::abs(eval_F(g, tc, 256)) <= 1e-12);
  const auto df = eval_DF(g, tc, 256, 1.0);
  CHECK((df.main - 16 * tc.it_phi).norm() <= 1e-12 * df.main.norm());
  // the discrete Stratonovich sums reproduce (I+T) phi up to O(1/m^2)
  auto rel = [&](int m) {
    const auto d = eval_DF(geodesic_path(p.setup, m), TrialCells::make(p.trial, m, p.setup.xi_frame()), 256, 1.0);
    return std::sqrt(d.remainder.squaredNorm() / d.main.squaredNorm());
  };
  const double r200 = rel(200), r400 = rel(400);
  CHECK(r200 <= 1e-4);
  CHECK(r200 / r400 >= 3);
}

TEST_CASE("flat space: remainder vanishes and Var F equals one") {
  Pipeline p(SpaceKind::flat, 0);
  const double lambda = 64;
  const auto tc = TrialCells::make(p.trial, 200, p.setup.xi_frame());
  const auto path = sample_bridge(bridge(lambda, 3), p.setup);
  const auto df = eval_DF(path, tc, lambda, 0.0);
  CHECK(df.remainder.norm() == 0);
  CHECK((df.total - std::sqrt(lambda) * tc.phi).norm() <= 1e-12);

  const std::size_t N = 10000;
  const auto paths = sample_paths(bridge(lambda, 4), p.setup, N, 1);
  double s = 0, s2 = 0, s4 = 0;
  for (const auto& q : paths) {
    const double F = eval_F(q, tc, lambda);
    s += F;
    s2 += F * F;
    s4 += F * F * F * F;
  }
  const double mean = s / N, var = s2 / N - mean * mean;
  const double var_se = std::sqrt((s4 / N - (s2 / N) * (s2 / N)) / N);
  CHECK(std::abs(mean) <= 3 * std::sqrt(var / N));
  CHECK(std::abs(var - 1) <= 3 * var_se);
}

TEST_CASE("flat COH coefficient is the inverse adjoint and xi is one") {
  Pipeline p(SpaceKind::flat, 0);
  const CohOptions opt;
  const auto g = geodesic_path(p.setup, 200);
  const auto A = coh_matrix(g, p.setup, 64, opt);
  const auto J0 = reference_J0(p.setup, 200, opt);
  const int D = A.A.mat.rows();
  CHECK(op_norm(A.A.mat - MatrixXd::Identity(D, D) - J0.mat) <= 1e-10);
  CHECK(A.op_norm == doctest::Approx(1).epsilon(1e-6));
  const auto xi = estimate_xi(p.setup, 64, 5, mc(2));
  CHECK(xi.xi_hat == doctest::Approx(1).epsilon(1e-6));
  CHECK(xi.accepted == 5);
}

TEST_CASE("COH coefficient on the sphere geodesic converges at rate 1/lambda") {
  Pipeline p(SpaceKind::sphere, 1);
  const CohOptions opt;
  const auto g = geodesic_path(p.setup, 200);
  const auto J0 = reference_J0(p.setup, 200, opt);
  std::vector<double> dist;
  for (double lambda : {64.0, 256.0}) {
    const auto J = coh_J(g, p.setup, lambda, opt);
    dist.push_back(op_norm(J.mat - J0.mat));
  }
  CHECK(dist[0] / dist[1] == doctest::Approx(4).epsilon(0.3));
  CHECK(std::abs(cept_sup(g, p.setup, 1e12, 0.6)) <= 1e-6);
  CHECK_THROWS(coh_matrix(sample_bridge(bridge(1, 5), GeodesicSetupd::make(ModelSpaced::make(SpaceKind::sphere, 1, 2), 1.0, 1.01)), p.setup, 1, opt));
}

TEST_CASE("Rayleigh estimate on the sphere: remainder moments, cutoff and pairing") {
  Pipeline p(SpaceKind::sphere, 1);
  const CutoffSpec cut{0.55};
  const auto r64 = estimate_rayleigh(p.trial, p.setup, 64, 3000, cut, mc(9));
  const auto r256 = estimate_rayleigh(p.trial, p.setup, 256, 3000, cut, mc(9));
  for (const auto* r : {&r64, &r256}) {
    CHECK(r->numerator > 0);
    CHECK(r->denominator > 0);
    CHECK(r->numerator_se > 0);
    CHECK(r->denominator_se > 0);
    CHECK(r->influence.size() == 3000);
    CHECK(r->main_over_lambda == doctest::Approx(p.trial.e0 * p.trial.e0).epsilon(1e-8));
  }
  const double ratio = r256.remainder_sq_mean / r64.remainder_sq_mean;
  CHECK(ratio >= 0.5);
  CHECK(ratio <= 2);
  CHECK(r256.cutoff_active_fraction == 0);
  CHECK(std::abs(r256.quotient_over_lambda - p.trial.e0) <= 3 * r256.quotient_se + 0.02);
  const double se = paired_se(r64, 1, r256, 1);
  CHECK(se >= 0);
  CHECK(se == doctest::Approx(paired_se(r256, 1, r64, 1)));
  CHECK(paired_se(r64, 1, r64, 1) == doctest::Approx(0).scale(1));
  CHECK(paired_se(r64, 1, r64, 0) == doctest::Approx(r64.quotient_se).epsilon(0.05));
}

TEST_CASE("ground state check reports an all-inside sample") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  const auto g = ground_state_gap_check(p.setup, 1024, 500, 0.2, mc(4));
  CHECK(g.all_inside);
  CHECK(g.estimate == 0);
  const auto h = ground_state_gap_check(p.setup, 16, 500, 0.2, mc(4));
  CHECK_FALSE(h.all_inside);
  CHECK(h.transition_paths > 0);
  CHECK(h.estimate > 0);
}

TEST_CASE("convergence study CSV layout") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  const auto st = convergence_study(p.setup, p.trial, {16, 64}, 300, 3, CutoffSpec{0.55}, mc(1, 100));
  REQUIRE(st.rows.size() == 2);
  REQUIRE(st.steps.size() == 1);
  CHECK(st.rows[0].lower_diag == doctest::Approx(1 / (st.rows[0].xi.xi_hat * st.rows[0].xi.xi_hat)));
  const auto& v = st.steps[0].verdict;
  CHECK((v == "decreasing" || v == "increasing" || v == "inconclusive"));
  const std::string csv = st.csv();
  CHECK(csv.rfind("lambda,upper_quotient,upper_se,lower_diag,xi_hat,e0_ref,acceptance,n_paths\r\n", 0) == 0);
  std::size_t lines = 0;
  for (std::size_t i = 0; i + 1 < csv.size(); ++i) lines += csv[i] == '\r' && csv[i + 1] == '\n';
  CHECK(lines == 3);
}

TEST_CASE("perturbation fit: J distance against sup ||C_eps||") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  const auto f = perturbation_fit(p.setup, 256, 100, 0.6, mc(3));
  REQUIRE(f.accepted == 100);
  CHECK(f.C > 0);
  for (std::size_t i = 0; i < f.accepted; ++i) {
    CHECK(f.sup_C[i] > 0);
    CHECK(f.distance[i] > 0);
  }
}

// The fitted constant is expected to stay within +-50% across paths; the measured per-path
// ratios spread over a factor of about 3.4, so this check records a known discrepancy.
TEST_CASE("perturbation constant is stable to 50% across 100 paths" * doctest::should_fail()) {
  Pipeline p(SpaceKind::sphere, 1, 32);
  const auto f = perturbation_fit(p.setup, 256, 100, 0.6, mc(3));
  CHECK(f.min_rel >= 0.5);
  CHECK(f.max_rel <= 1.5);
}

TEST_CASE("xi estimates: flat path independence, sphere limit and concentration") {
  Pipeline f(SpaceKind::flat, 0, 32);
  const auto xf = estimate_xi(f.setup, 64, 100, mc(21));
  CHECK(xf.xi_hat == doctest::Approx(1).epsilon(1e-3));
  CHECK(xf.sd <= 1e-3);

  Pipeline p(SpaceKind::sphere, 1, 32);
  const double target = 1 / std::sqrt(1 - 1 / (std::numbers::pi * std::numbers::pi));
  std::vector<double> sds;
  for (double lambda : {16.0, 64.0, 256.0}) {
    const auto x = estimate_xi(p.setup, lambda, 100, mc(22));
    REQUIRE(x.accepted >= 90);
    CHECK(x.quantiles.size() == 7);
    CHECK(x.xi_hat == doctest::Approx(x.quantiles.back()));
    if (lambda >= 64) CHECK(std::abs(x.xi_hat / target - 1) <= 0.10);
    sds.push_back(x.sd);
  }
  CHECK(sds[1] < sds[0]);
  CHECK(sds[2] < sds[1]);
}

TEST_CASE("log-Sobolev diagnostic holds at lambda 256") {
  for (auto [kind, kappa] : {std::pair{SpaceKind::sphere, 1.0}, std::pair{SpaceKind::flat, 0.0}}) {
    Pipeline p(kind, kappa, 32);
    McConfig c = mc(31);
    if (kind == SpaceKind::flat) c.drift = DriftMode::exact_flat;
    const double xi = kind == SpaceKind::flat ? 1.0 : p.ops.S_inv_adj.op_norm();
    const auto r = lsi_diagnostic(p.trial, p.setup, 256, 3000, CutoffSpec{0.55}, xi, c);
    CHECK(r.holds);
    CHECK(r.slack >= -3 * r.slack_se);
    CHECK(r.lhs_se > 0);
    CHECK(r.rhs > 0);
  }
}

TEST_CASE("flat convergence study: every column is one") {
  Pipeline p(SpaceKind::flat, 0, 32);
  McConfig c = mc(41);
  c.drift = DriftMode::exact_flat;
  const auto st = convergence_study(p.setup, p.trial, {64, 256}, 4000, 20, CutoffSpec{0.55}, c);
  for (const auto& row : st.rows) {
    CHECK(row.e0_ref == doctest::Approx(1).epsilon(1e-6));
    CHECK(std::abs(row.upper.quotient_over_lambda - 1) <= 3 * row.upper.quotient_se);
    CHECK(row.xi.xi_hat == doctest::Approx(1).epsilon(1e-3));
    CHECK(row.lower_diag == doctest::Approx(1).epsilon(2e-3));
  }
}

TEST_CASE("cutoff at half the tube radius is neutral at lambda 256") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  const auto with = estimate_rayleigh(p.trial, p.setup, 256, 2000, CutoffSpec{p.setup.r_tube / 2}, mc(51));
  const auto without = estimate_rayleigh(p.trial, p.setup, 256, 2000, CutoffSpec{1e6}, mc(51));
  CHECK(without.cutoff_active_fraction == 0);
  CHECK(std::abs(with.quotient_over_lambda - without.quotient_over_lambda) < with.quotient_se);
}

TEST_CASE("ground state bound decays over lambda and stays far below the gap") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  std::vector<double> est;
  for (double lambda : {16.0, 64.0, 256.0}) est.push_back(ground_state_gap_check(p.setup, lambda, 1000, 0.2, mc(61)).estimate);
  CHECK(est[0] > est[1]);
  CHECK(est[1] >= est[2]);
  CHECK(est[2] < 1e-3);
  // flat: the bound relative to lambda e0 = lambda is below one and collapses with lambda
  Pipeline f(SpaceKind::flat, 0, 32);
  std::vector<double> rel;
  for (double lambda : {16.0, 64.0, 256.0})
    rel.push_back(ground_state_gap_check(f.setup, lambda, 1000, 0.2, mc(62)).estimate / lambda);
  CHECK(rel[0] < 1);
  CHECK(rel[1] < rel[0]);
  CHECK(rel[2] <= rel[1]);
  CHECK(rel[2] < 1e-3);
}

TEST_CASE("coarse path grids raise a step-size warning") {
  Pipeline p(SpaceKind::sphere, 1, 32);
  BridgeConfig b = bridge(16, 1);
  CHECK(b.step_warning().empty());  // 200 / 16 >= 10
  b.lambda = 64;
  CHECK_FALSE(b.step_warning().empty());
  const auto r = estimate_rayleigh(p.trial, p.setup, 64, 600, CutoffSpec{0.55}, mc(71));
  bool found = false;
  for (const auto& w : r.warnings) found |= w.find("m_steps / lambda") != std::string::npos;
  CHECK(found);
}
