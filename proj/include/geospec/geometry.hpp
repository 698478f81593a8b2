#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geospec {

template <typename Scalar> using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class SpaceKind { flat, sphere, hyperbolic };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::flat: return "flat";
    case SpaceKind::sphere: return "sphere";
    case SpaceKind::hyperbolic: return "hyperbolic";
  }
  return "?";
}

inline SpaceKind parse_space_kind(const std::string& s) {
  if (s == "flat") return SpaceKind::flat;
  if (s == "sphere") return SpaceKind::sphere;
  if (s == "hyperbolic") return SpaceKind::hyperbolic;
  throw std::invalid_argument("unknown space kind '" + s + "'");
}

// Constant-curvature model space in its standard embedding.
//   flat:       R^n
//   sphere:     |p| = R in R^{n+1}, R = 1/sqrt(kappa)
//   hyperbolic: <p,p>_L = -R^2, p_0 > 0 in Minkowski R^{1,n}
template <typename Scalar = double>
struct ModelSpace {
  SpaceKind kind = SpaceKind::flat;
  Scalar kappa = 0;
  int n = 2;

  static ModelSpace make(SpaceKind kind, Scalar kappa, int n) {
    if (n < 2) throw std::invalid_argument("model space dimension must be >= 2 (n = 1 has no transverse curvature block)");
    if (!std::isfinite(double(kappa))) throw std::invalid_argument("curvature must be finite");
    const bool ok = (kind == SpaceKind::flat && kappa == 0) || (kind == SpaceKind::sphere && kappa > 0) ||
                    (kind == SpaceKind::hyperbolic && kappa < 0);
    if (!ok) throw std::invalid_argument(std::string("curvature sign inconsistent with kind '") + to_string(kind) + "'");
    return ModelSpace{kind, kappa, n};
  }

  int ambient_dim() const { return kind == SpaceKind::flat ? n : n + 1; }

  Scalar radius() const {
    using std::sqrt;
    return kind == SpaceKind::flat ? std::numeric_limits<Scalar>::infinity() : Scalar(1) / sqrt(std::abs(kappa));
  }

  // Largest |v| for which exp_p is a diffeomorphism onto its image.
  Scalar injectivity_radius() const {
    return kind == SpaceKind::sphere ? std::numbers::pi_v<Scalar> * radius() : std::numeric_limits<Scalar>::infinity();
  }

  // Ambient inner product; restricted to tangent planes it is the metric.
  Scalar inner(const Vec<Scalar>& a, const Vec<Scalar>& b) const {
    if (kind == SpaceKind::hyperbolic) return -a(0) * b(0) + a.tail(n).dot(b.tail(n));
    return a.dot(b);
  }

  Scalar norm(const Vec<Scalar>& v) const {
    using std::sqrt;
    return sqrt(std::max(inner(v, v), Scalar(0)));
  }

  Vec<Scalar> origin() const {
    Vec<Scalar> p = Vec<Scalar>::Zero(ambient_dim());
    if (kind != SpaceKind::flat) p(0) = radius();
    return p;
  }

  // Ambient coordinate vector of the i-th tangent basis vector at the origin.
  Vec<Scalar> origin_basis(int i) const {
    Vec<Scalar> v = Vec<Scalar>::Zero(ambient_dim());
    v(kind == SpaceKind::flat ? i : i + 1) = 1;
    return v;
  }

  Vec<Scalar> project_tangent(const Vec<Scalar>& p, const Vec<Scalar>& v) const {
    if (kind == SpaceKind::flat) return v;
    const Scalar R2 = radius() * radius();
    // sphere: v - <v,p>p/R^2 ; hyperbolic: v + <v,p>_L p/R^2
    const Scalar c = inner(v, p) / R2;
    return kind == SpaceKind::sphere ? Vec<Scalar>(v - c * p) : Vec<Scalar>(v + c * p);
  }

  Vec<Scalar> project_point(const Vec<Scalar>& p) const {
    using std::sqrt;
    if (kind == SpaceKind::flat) return p;
    if (kind == SpaceKind::sphere) return p * (radius() / p.norm());
    Vec<Scalar> q = p;
    q(0) = sqrt(radius() * radius() + p.tail(n).squaredNorm());
    return q;
  }

  Scalar distance(const Vec<Scalar>& p, const Vec<Scalar>& q) const;
};

using ModelSpaced = ModelSpace<double>;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

// Unit direction e and angle theta = d/R of the geodesic p -> q (curved cases).
template <typename Scalar>
std::pair<Vec<Scalar>, Scalar> geodesic_direction(const ModelSpace<Scalar>& M, const Vec<Scalar>& p,
                                                   const Vec<Scalar>& q) {
  using std::atan2;
  using std::asinh;
  const Scalar R = M.radius(), R2 = R * R;
  const Scalar c = M.inner(p, q) / R2;
  Vec<Scalar> u = M.kind == SpaceKind::sphere ? Vec<Scalar>(q - c * p) : Vec<Scalar>(q + c * p);
  u = M.project_tangent(p, u);
  const Scalar un = M.norm(u);
  Scalar theta;
  if (M.kind == SpaceKind::sphere) {
    theta = atan2(un / R, c);
  } else {
    theta = asinh(un / R);
  }
  if (un == 0) {
    // q = p, or exactly antipodal on the sphere (direction undefined)
    const Scalar th0 = M.kind == SpaceKind::sphere && c < 0 ? std::numbers::pi_v<Scalar> : Scalar(0);
    return {Vec<Scalar>::Zero(p.size()), th0};
  }
  return {u / un, theta};
}

}  // namespace detail

template <typename Scalar>
Scalar ModelSpace<Scalar>::distance(const Vec<Scalar>& p, const Vec<Scalar>& q) const {
  if (kind == SpaceKind::flat) return (q - p).norm();
  return detail::geodesic_direction(*this, p, q).second * radius();
}

template <typename Scalar>
Vec<Scalar> exp_map(const ModelSpace<Scalar>& M, const Vec<Scalar>& p, const Vec<Scalar>& v_in) {
  using std::cos;
  using std::sin;
  using std::cosh;
  using std::sinh;
  if (M.kind == SpaceKind::flat) return p + v_in;
  const Vec<Scalar> v = M.project_tangent(p, v_in);
  const Scalar vn = M.norm(v);
  if (M.kind == SpaceKind::sphere && vn >= M.injectivity_radius())
    throw DomainError("exp_map: tangent vector longer than the injectivity radius");
  if (vn == 0) return p;
  const Scalar R = M.radius(), th = vn / R;
  Vec<Scalar> q = M.kind == SpaceKind::sphere ? Vec<Scalar>(cos(th) * p + (R * sin(th) / vn) * v)
                                              : Vec<Scalar>(cosh(th) * p + (R * sinh(th) / vn) * v);
  return M.project_point(q);
}

template <typename Scalar>
Vec<Scalar> log_map(const ModelSpace<Scalar>& M, const Vec<Scalar>& p, const Vec<Scalar>& q) {
  if (M.kind == SpaceKind::flat) return q - p;
  auto [e, th] = detail::geodesic_direction(M, p, q);
  if (th == 0) return Vec<Scalar>::Zero(p.size());
  if (M.kind == SpaceKind::sphere) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    if (pi - th < Scalar(1e-9)) throw DomainError("log_map: points are (nearly) antipodal");
  }
  return (th * M.radius()) * e;
}

// Transport of v in T_pM to T_qM along the minimal geodesic.
template <typename Scalar>
Vec<Scalar> parallel_transport(const ModelSpace<Scalar>& M, const Vec<Scalar>& p, const Vec<Scalar>& q,
                               const Vec<Scalar>& v_in) {
  using std::cos;
  using std::sin;
  using std::cosh;
  using std::sinh;
  if (M.kind == SpaceKind::flat) return v_in;
  auto [e, th] = detail::geodesic_direction(M, p, q);
  if (M.kind == SpaceKind::sphere && std::numbers::pi_v<Scalar> - th < Scalar(1e-9))
    throw DomainError("parallel_transport: points are (nearly) antipodal");
  const Vec<Scalar> v = M.project_tangent(p, v_in);
  if (th == 0) return v;
  const Scalar R = M.radius();
  const Vec<Scalar> e2 = M.kind == SpaceKind::sphere ? Vec<Scalar>(-sin(th) / R * p + cos(th) * e)
                                                     : Vec<Scalar>(sinh(th) / R * p + cosh(th) * e);
  return M.project_tangent(q, Vec<Scalar>(v + M.inner(v, e) * (e2 - e)));
}

template <typename Scalar>
Vec<Scalar> geodesic_point(const ModelSpace<Scalar>& M, const Vec<Scalar>& x, const Vec<Scalar>& xi, Scalar t) {
  return exp_map(M, x, Vec<Scalar>(t * xi));
}

// Eigenvalues of the Hessian of k = d(., y)^2 / 2 at distance s from y.
template <typename Scalar>
std::pair<Scalar, Scalar> dist_hessian_eigs(const ModelSpace<Scalar>& M, Scalar s) {
  using std::sqrt;
  using std::tan;
  using std::tanh;
  if (s < 0) throw DomainError("dist_hessian_eigs: negative distance");
  const Scalar c = sqrt(std::abs(M.kappa));
  const Scalar x = c * s;
  switch (M.kind) {
    case SpaceKind::flat: return {Scalar(1), Scalar(1)};
    case SpaceKind::sphere:
      if (x >= std::numbers::pi_v<Scalar>) throw DomainError("dist_hessian_eigs: at or beyond the conjugate distance");
      if (x < Scalar(1e-4)) return {Scalar(1), Scalar(1) - x * x / 3 - x * x * x * x / 45};
      return {Scalar(1), x / tan(x)};
    case SpaceKind::hyperbolic:
      if (x < Scalar(1e-4)) return {Scalar(1), Scalar(1) + x * x / 3 - x * x * x * x / 45};
      return {Scalar(1), x / tanh(x)};
  }
  return {Scalar(1), Scalar(1)};
}

// Endpoints, initial velocity and parallel frame of the minimal geodesic x -> y.
// The frame's first vector is xi/rho; coordinates below are always in this frame.
template <typename Scalar = double>
struct GeodesicSetup {
  ModelSpace<Scalar> space;
  Vec<Scalar> x, y, xi;
  Scalar rho = 1;
  Scalar r_tube = 1;
  Mat<Scalar> frame;  // ambient_dim x n, columns orthonormal tangent vectors at x

  static GeodesicSetup make(const ModelSpace<Scalar>& M, Scalar rho, Scalar r_tube) {
    if (!(rho > 0)) throw std::invalid_argument("rho must be positive");
    if (!(r_tube > rho)) throw std::invalid_argument("r_tube must exceed rho");
    if (M.kind == SpaceKind::sphere && rho >= M.injectivity_radius())
      throw std::invalid_argument("rho beyond the injectivity radius");
    GeodesicSetup s;
    s.space = M;
    s.rho = rho;
    s.r_tube = r_tube;
    s.x = M.origin();
    s.frame.resize(M.ambient_dim(), M.n);
    for (int i = 0; i < M.n; ++i) s.frame.col(i) = M.origin_basis(i);
    s.xi = rho * s.frame.col(0);
    s.y = exp_map(M, s.x, s.xi);
    return s;
  }

  Vec<Scalar> geodesic(Scalar t) const { return geodesic_point(space, x, xi, t); }

  // xi in frame coordinates.
  Vec<Scalar> xi_frame() const {
    Vec<Scalar> v = Vec<Scalar>::Zero(space.n);
    v(0) = rho;
    return v;
  }
};

using GeodesicSetupd = GeodesicSetup<double>;

// Samples of R(t) = R(., xi) xi in the parallel frame at t_i = i/m, linearly interpolated.
template <typename Scalar = double>
struct CurvatureProfile {
  std::vector<Mat<Scalar>> samples;

  int m() const { return int(samples.size()) - 1; }
  int n() const { return int(samples.front().rows()); }

  Mat<Scalar> at(Scalar t) const {
    const int M = m();
    if (M == 0) return samples.front();
    Scalar u = std::clamp(t, Scalar(0), Scalar(1)) * Scalar(M);
    int i = std::min(int(u), M - 1);
    const Scalar w = u - Scalar(i);
    return (1 - w) * samples[i] + w * samples[i + 1];
  }

  Mat<Scalar> reversed(Scalar t) const { return at(Scalar(1) - t); }

  // dR/dt on the last segment (used by series expansions at t = 1).
  Mat<Scalar> slope_at_end() const {
    const int M = m();
    if (M == 0) return Mat<Scalar>::Zero(n(), n());
    return (samples[M] - samples[M - 1]) * Scalar(M);
  }

  bool is_constant(Scalar tol = Scalar(0)) const {
    for (const auto& s : samples)
      if ((s - samples.front()).cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }
};

using CurvatureProfiled = CurvatureProfile<double>;

template <typename Scalar>
Mat<Scalar> constant_curvature_operator(const GeodesicSetup<Scalar>& s) {
  const int n = s.space.n;
  Mat<Scalar> R = s.space.kappa * s.rho * s.rho * Mat<Scalar>::Identity(n, n);
  R(0, 0) = 0;  // kappa (rho^2 I - xi xi^T) with xi = rho e_1
  return R;
}

template <typename Scalar>
CurvatureProfile<Scalar> curvature_profile(const GeodesicSetup<Scalar>& s, int m) {
  CurvatureProfile<Scalar> P;
  P.samples.assign(std::size_t(m) + 1, constant_curvature_operator(s));
  return P;
}

template <typename Scalar>
Mat<Scalar> ricci_operator(const ModelSpace<Scalar>& M) {
  return M.kappa * Scalar(M.n - 1) * Mat<Scalar>::Identity(M.n, M.n);
}

struct AssumptionClause {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionClause> clauses;
  double inf_tangential = 1;   // inf over s in [0, r_tube] of the tangential Hessian eigenvalue
  double max_admissible_r_tube = std::numeric_limits<double>::infinity();
  bool pass() const {
    for (const auto& c : clauses)
      if (!c.pass) return false;
    return true;
  }
};

// Root of s cot s = 1/2 on (0, pi/2), by bisection.
inline double half_hessian_root() {
  double lo = 0.5, hi = 1.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid / std::tan(mid) > 0.5) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

template <typename Scalar>
AssumptionReport check_assumptions(const GeodesicSetup<Scalar>& s) {
  AssumptionReport r;
  const auto& M = s.space;
  const double rt = double(s.r_tube);
  {
    AssumptionClause c{"geodesic", true, ""};
    const double err = double((exp_map(M, s.x, s.xi) - s.y).norm());
    c.pass = err <= 1e-12 && rt > double(s.rho);
    c.detail = "|exp_x(xi) - y| = " + std::to_string(err) + ", rho < r_tube: " + (rt > double(s.rho) ? "yes" : "no");
    r.clauses.push_back(c);
  }
  {
    AssumptionClause c{"(1) tube closure avoids Cut(y)", true, "no cut locus"};
    if (M.kind == SpaceKind::sphere) {
      const double inj = double(M.injectivity_radius());
      c.pass = rt < inj;
      c.detail = "r_tube = " + std::to_string(rt) + ", cut distance = " + std::to_string(inj);
    }
    r.clauses.push_back(c);
  }
  {
    AssumptionClause c{"(2) Hessian of k exceeds 1/2 on the tube", true, ""};
    if (M.kind == SpaceKind::sphere) {
      const double c0 = std::sqrt(double(M.kappa));
      r.max_admissible_r_tube = half_hessian_root() / c0;
      const double x = c0 * rt;
      r.inf_tangential = x < std::numbers::pi ? x / std::tan(x) : -std::numeric_limits<double>::infinity();
      c.pass = r.inf_tangential > 0.5;
    } else {
      r.inf_tangential = 1;
    }
    c.detail = "inf tangential eigenvalue = " + std::to_string(r.inf_tangential) +
               ", max admissible r_tube = " + std::to_string(r.max_admissible_r_tube);
    r.clauses.push_back(c);
  }
  return r;
}

}  // namespace geospec
