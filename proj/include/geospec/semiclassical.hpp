#pragma once

#include "geospec/bridge.hpp"
#include "geospec/pathops.hpp"

#include <string>
#include <vector>

namespace geospec {

struct TrialFunction {
  ModalFunction phi;     // mean-zero, unit norm
  ModalFunction psi;     // U phi
  ModalFunction it_phi;  // (I+T) phi
  double e0 = 0;
  double main_norm_sq = 0;  // ||(I+T) phi||^2
  double s_norm_sq = 0;     // ||S phi||^2, from the nodal image
  double eps_quality = 0;
  bool shortfall = false;
};

TrialFunction build_trial(const PathopsContext& ctx, const OperatorBundle& ops, double eps);

// chi = 1 below 1, 0 above 2, cubic smoothstep in between; |chi'| <= 3/2.
struct CutoffSpec {
  double kappa_cut = 0.5;
  static double chi(double u);
  static double dchi(double u);
  double value(double sup_dist) const { return chi(sup_dist / kappa_cut); }
  double lipschitz() const { return 1.5 / kappa_cut; }
};

// Per-path quantities on the path grid, cached for a fixed trial function.
struct TrialCells {
  int m = 0;
  MatrixXd phi, it_phi;  // m x n cell averages
  VectorXd phi_mean, xi;

  static TrialCells make(const TrialFunction& tr, int m, const VectorXd& xi_frame);
};

double eval_F(const BridgePath& path, const TrialCells& tc, double lambda);
double eval_F_cut(const BridgePath& path, const TrialCells& tc, double lambda, const CutoffSpec& cut);

struct DFResult {
  MatrixXd total;      // D0 F' on the path cells, m x n
  MatrixXd main;       // sqrt(lambda) (I+T) phi, cell averages
  MatrixXd remainder;  // total - main
};

// Needs constant curvature kappa: R(u,v)w = kappa (<v,w> u - <u,w> v).
DFResult eval_DF(const BridgePath& path, const TrialCells& tc, double lambda, double kappa);

struct CohOptions {
  int m_op = 32;
  int q = 8;
  int levels_left = 6;
  int levels_right = 40;
};

struct CohCoefficient {
  DiscretizedOperator A;
  double op_norm = 0;
  std::vector<MatrixXd> K;  // K(gamma)_{lambda, t_i}, i < m
};

// Path-grid K~(gamma): piecewise linear through (I - H_i)/(1 - t_i) - Ric/(2 lambda), with the
// geodesic limit 0 at t = 1.
std::vector<MatrixXd> path_Ktilde_nodes(const BridgePath& path, const GeodesicSetupd& s, double lambda);
CohCoefficient coh_matrix(const BridgePath& path, const GeodesicSetupd& s, double lambda,
                          const CohOptions& opt = {});
// J(gamma)_lambda, and J0 on the same rule for comparison
DiscretizedOperator coh_J(const BridgePath& path, const GeodesicSetupd& s, double lambda, const CohOptions& opt);
DiscretizedOperator reference_J0(const GeodesicSetupd& s, int m_path, const CohOptions& opt);
// sup_t ||C_eps(t)|| with K(gamma) = K + C_eps/(1-t)^delta
double cept_sup(const BridgePath& path, const GeodesicSetupd& s, double lambda, double delta);

struct XiEstimate {
  double lambda = 0;
  double xi_hat = 0;
  double mean = 0, sd = 0;
  std::vector<double> quantiles;  // 0, .1, .25, .5, .75, .9, 1
  std::vector<double> norms;
  std::size_t accepted = 0, sampled = 0;
};

struct McConfig {
  int m_path = 200;
  std::uint64_t seed = 1;
  int threads = 0;
  DriftMode drift = DriftMode::semiclassical;
};

XiEstimate estimate_xi(const GeodesicSetupd& s, double lambda, std::size_t n_paths, const McConfig& mc,
                       const CohOptions& opt = {});

// ||J(gamma)_lambda - J0|| against sup_t ||C_eps(t)|| over sampled tube paths.
struct PerturbationFit {
  double lambda = 0, delta = 0.6;
  std::vector<double> sup_C, distance, ratio;  // per accepted path
  double C = 0;                                 // least-squares slope through the origin
  double min_rel = 0, max_rel = 0;              // extreme ratio / C
  std::size_t accepted = 0, sampled = 0;
};

PerturbationFit perturbation_fit(const GeodesicSetupd& s, double lambda, std::size_t n_paths, double delta,
                                 const McConfig& mc, const CohOptions& opt = {});

struct RayleighEstimate {
  double lambda = 0;
  std::size_t n_paths = 0, accepted = 0;
  double acceptance = 0;
  double numerator = 0, numerator_se = 0;      // E[|D0 F~|^2]
  double denominator = 0, denominator_se = 0;  // Var(F~)
  double cutoff_term = 0;                      // product-rule bound from D0 chi, included in numerator
  double cutoff_active_fraction = 0;
  double quotient_over_lambda = 0, quotient_se = 0;
  double main_over_lambda = 0;       // ||(I+T) phi||^2
  double remainder_sq_mean = 0;      // E[|I(lambda)|^2]
  double mean_F = 0;
  std::vector<std::string> warnings;
  // per sampled path: contribution to (quotient - E quotient), zero off the tube; pairs estimates on shared seeds
  std::vector<double> influence;
};

// Standard error of w1 q1 - w2 q2 for two estimates driven by the same seed.
double paired_se(const RayleighEstimate& a, double wa, const RayleighEstimate& b, double wb);

RayleighEstimate estimate_rayleigh(const TrialFunction& tr, const GeodesicSetupd& s, double lambda,
                                   std::size_t n_paths, const CutoffSpec& cut, const McConfig& mc);

struct GroundStateResult {
  double lambda = 0;
  double estimate = 0, se = 0;
  std::size_t transition_paths = 0;
  bool all_inside = false;
};

GroundStateResult ground_state_gap_check(const GeodesicSetupd& s, double lambda, std::size_t n_paths,
                                         double delta, const McConfig& mc);

struct LsiReport {
  double lambda = 0;
  double lhs = 0, lhs_se = 0, rhs = 0, rhs_se = 0, slack = 0, slack_se = 0;
  double xi = 1;
  bool holds = true;
  std::string note;
};

LsiReport lsi_diagnostic(const TrialFunction& tr, const GeodesicSetupd& s, double lambda, std::size_t n_paths,
                         const CutoffSpec& cut, double xi_hat, const McConfig& mc);

struct ConvergenceRow {
  double lambda = 0;
  RayleighEstimate upper;
  XiEstimate xi;
  double lower_diag = 0;         // 1/xi^2  (lambda / xi^2 normalized by lambda)
  double lower_diag_linear = 0;  // 1/xi
  double e0_ref = 0;
};

// Change of |quotient/lambda - e0| between consecutive lambdas.
struct ConvergenceStep {
  double lambda_from = 0, lambda_to = 0;
  double gap_from = 0, gap_to = 0;
  double decrease = 0, se = 0;
  std::string verdict;  // "decreasing", "increasing" or "inconclusive"
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceStep> steps;
  double e0_ref = 0;
  std::string csv() const;
};

ConvergenceStudy convergence_study(const GeodesicSetupd& s, const TrialFunction& tr, const std::vector<double>& lambdas,
                                   std::size_t n_paths, std::size_t n_xi_paths, const CutoffSpec& cut,
                                   const McConfig& mc, const CohOptions& opt = {});

}  // namespace geospec
