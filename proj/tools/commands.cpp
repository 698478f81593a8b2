#include "commands.hpp"

#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <boost/version.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "geospec/report.hpp"

namespace geospec::cli {

namespace fs = std::filesystem;

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha1: context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

OutputDir::OutputDir(const RunConfig& cfg, std::string command)
    : cfg_(cfg), command_(std::move(command)), root_(cfg.directory) {
  fs::create_directories(root_);
}

void OutputDir::write(const std::string& relative, const std::string& content) {
  const fs::path rel(relative);
  if (rel.is_absolute() || rel.empty()) throw std::invalid_argument("output: artifact path must be relative");
  for (const auto& part : rel)
    if (part == "..") throw std::invalid_argument("output: artifact path leaves the output directory");
  const fs::path full = fs::path(root_) / rel;
  fs::create_directories(full.parent_path());
  std::ofstream f(full, std::ios::binary);
  f << content;
  if (!f) throw std::runtime_error("output: cannot write " + full.string());
  artifacts_.emplace_back(rel.generic_string(), git_blob_sha1(content));
}

void OutputDir::finish() {
  Json m;
  m["schema_version"] = cfg_.schema_version;
  m["command"] = command_;
  m["config_ini"] = cfg_.to_ini(false);
  m["inputs_hash"] = git_blob_sha1(cfg_.to_ini(false));
  m["seeds"] = {{"root", cfg_.seed},
                {"rule", "path i of a batch uses seed_seq(seed, i); study row k uses derive_seed(root, k)"}};
  m["grids"] = {{"m_operator", cfg_.m_operator}, {"m_path", cfg_.m_path}, {"m_ode", cfg_.m_ode}};
  m["module_versions"] = {{"geospec", "1.0.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"boost", BOOST_LIB_VERSION},
                          {"openssl", OPENSSL_VERSION_TEXT}};
  auto sorted = artifacts_;
  std::sort(sorted.begin(), sorted.end());
  Json arts = Json::array();
  for (const auto& [p, h] : sorted) arts.push_back({{"path", p}, {"sha1", h}});
  m["artifacts"] = arts;
  m["timings"] = {{"file", "timings.log"}, {"hashed", false}};
  std::ofstream(fs::path(root_) / "manifest.json", std::ios::binary) << m.dump(2) << "\n";
  std::ofstream t(fs::path(root_) / "timings.log", std::ios::binary);
  for (const auto& [name, s] : timings_) t << name << " " << std::fixed << std::setprecision(3) << s << "\n";
}

namespace {

using Clock = std::chrono::steady_clock;

class Timer {
 public:
  Timer(OutputDir& out, std::string name) : out_(out), name_(std::move(name)), t0_(Clock::now()) {}
  ~Timer() { out_.stage(name_, std::chrono::duration<double>(Clock::now() - t0_).count()); }

 private:
  OutputDir& out_;
  std::string name_;
  Clock::time_point t0_;
};

GeodesicSetupd make_setup(const RunConfig& c) {
  try {
    return GeodesicSetupd::make(ModelSpace<double>::make(c.kind, c.kappa, c.n), c.rho, c.r_tube);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("setup: ") + e.what());
  }
}

void require_assumptions(const GeodesicSetupd& s) {
  const auto rep = check_assumptions(s);
  for (const auto& cl : rep.clauses)
    if (!cl.pass) throw ConfigError("Assumption " + cl.name + " violated: " + cl.detail);
}

struct Pipeline {
  GeodesicSetupd setup;
  CoefficientFamily<double> family;
  PathopsContext ctx;
  OperatorBundle ops;
};

Pipeline build_pipeline(const RunConfig& c, int m) {
  Pipeline p{make_setup(c), {}, {}, {}};
  const auto sol = solve_jacobi(curvature_profile(p.setup, c.m_ode), OdeGrid<double>(c.m_ode));
  p.family = build_K_family(sol, 1e-3);
  p.ctx = PathopsContext::make(p.family, m);
  p.ops = build_bundle(p.ctx);
  return p;
}

Json config_json(const RunConfig& c) {
  return {{"space", {{"kind", to_string(c.kind)}, {"kappa", c.kappa}, {"n", c.n}}},
          {"setup", {{"rho", c.rho}, {"r_tube", c.r_tube}}}};
}

McConfig mc_config(const RunConfig& c) {
  McConfig mc;
  mc.m_path = c.m_path;
  mc.seed = c.seed;
  mc.threads = c.threads;
  mc.drift = c.drift == "exact_flat" ? DriftMode::exact_flat : DriftMode::semiclassical;
  return mc;
}

const std::vector<std::string> kFactorization = {"sadj_s_minus_i_plus_t", "sinv_adj_i_plus_t_minus_s",
                                                 "s_sinv_minus_i", "inv_i_plus_t_minus_product"};
constexpr double kFactorTol = 1e-3, kDualityTol = 1e-4;

void emit_json(OutputDir& out, const RunConfig& c, const std::string& name, const Json& j) {
  if (c.wants("json")) out.write(name, j.dump(2) + "\n");
}

void emit_csv(OutputDir& out, const RunConfig& c, const std::string& name, const CsvTable& t) {
  if (c.wants("csv")) out.write(name, t.str());
}

// geometry-check
int cmd_geometry(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const auto s = make_setup(c);
  const auto rep = check_assumptions(s);
  Json j = config_json(c);
  j["assumptions"] = to_json(rep);
  j["injectivity_radius"] = number(s.space.injectivity_radius());
  j["half_hessian_root"] = number(half_hessian_root());
  emit_json(out, c, "geometry.json", j);
  int code = kExitOk;
  for (const auto& cl : rep.clauses) {
    log << (cl.pass ? "ok    " : "FAIL  ") << cl.name << ": " << cl.detail << "\n";
    if (!cl.pass) code = kExitInvalid;
  }
  if (code) log << "assumption violated: Assumption " << [&] {
    for (const auto& cl : rep.clauses)
      if (!cl.pass) return cl.name;
    return std::string();
  }() << "\n";
  return code;
}

// spectrum
int cmd_spectrum(const RunConfig& c, OutputDir& out, std::ostream& log) {
  SpectralReport rep;
  {
    Timer t(out, "spectrum");
    const Pipeline p = build_pipeline(c, c.m_operator);
    rep = compute_e0(p.ops);
    rep.m = c.m_operator;
    rep.residuals = verify_identities(p.ops, rep);
  }
  Json j = config_json(c);
  j["spectrum"] = to_json(rep);
  emit_json(out, c, "spectrum.json", j);
  CsvTable t({"index", "eigenvalue"});
  for (std::size_t i = 0; i < rep.spectrum.size(); ++i) t.add_row({std::to_string(i), format_number(rep.spectrum[i])});
  emit_csv(out, c, "spectrum.csv", t);
  CsvTable r({"identity", "residual"});
  for (const auto& [k, v] : rep.residuals) r.add_row({k, format_number(v)});
  emit_csv(out, c, "residuals.csv", r);
  log << "e0 = " << format_number(rep.e0) << "  ||(S^-1)*|| = " << format_number(rep.op_norm_sinv_adj) << "\n";
  int code = kExitOk;
  for (const auto& k : kFactorization)
    if (!(rep.residuals.at(k) <= kFactorTol)) {
      log << "residual " << k << " = " << format_number(rep.residuals.at(k)) << " above " << kFactorTol << "\n";
      code = kExitNumerical;
    }
  if (!(rep.residuals.at("duality") <= kDualityTol)) {
    log << "duality defect above " << kDualityTol << "\n";
    code = kExitNumerical;
  }
  return code;
}

// identities: residuals at m/2 and m, with the shrink ratio
int cmd_identities(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const int m1 = std::max(16, c.m_operator / 2), m2 = c.m_operator;
  std::map<std::string, double> r1, r2;
  {
    Timer t(out, "identities");
    const Pipeline a = build_pipeline(c, m1), b = build_pipeline(c, m2);
    r1 = verify_identities(a.ops, compute_e0(a.ops));
    r2 = verify_identities(b.ops, compute_e0(b.ops));
  }
  CsvTable t({"identity", "residual_m_half", "residual_m", "ratio", "tolerance", "status"});
  Json j = config_json(c);
  j["m"] = {m1, m2};
  Json rows = Json::array();
  int code = kExitOk;
  for (const auto& [k, v2] : r2) {
    const double v1 = r1.at(k);
    const bool checked = std::find(kFactorization.begin(), kFactorization.end(), k) != kFactorization.end();
    const double tol = checked ? kFactorTol : k == "duality" ? kDualityTol : NAN;
    std::string status = "info";
    if (std::isfinite(tol)) {
      const bool ok = v2 <= tol && (k == "duality" || v2 < v1);
      status = ok ? "pass" : "fail";
      if (!ok) code = kExitNumerical;
    }
    const double ratio = v2 > 0 ? v1 / v2 : NAN;
    t.add_row({k, format_number(v1), format_number(v2), format_number(ratio),
               std::isfinite(tol) ? format_number(tol) : "", status});
    rows.push_back({{"identity", k}, {"residual_m_half", number(v1)}, {"residual_m", number(v2)},
                    {"ratio", number(ratio)}, {"tolerance", number(tol)}, {"status", status}});
    log << std::left << std::setw(34) << k << format_number(v2) << "  " << status << "\n";
  }
  j["identities"] = rows;
  emit_json(out, c, "identities.json", j);
  emit_csv(out, c, "identities.csv", t);
  return code;
}

// bridge: tube statistics per lambda, plus a few path dumps
int cmd_bridge(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const auto s = make_setup(c);
  require_assumptions(s);
  const McConfig mc = mc_config(c);
  CsvTable t({"lambda", "n_paths", "accepted", "acceptance", "mean_sup_dist", "max_sup_dist", "max_retries",
              "max_frame_correction"});
  Json j = config_json(c);
  Json rows = Json::array();
  for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
    Timer tm(out, "bridge lambda=" + format_number(c.lambdas[k]));
    BridgeConfig bc;
    bc.lambda = c.lambdas[k];
    bc.m_steps = c.m_path;
    bc.seed = derive_seed(c.seed, k);
    bc.drift_mode = mc.drift;
    std::vector<double> sup(c.n_paths);
    std::vector<char> in(c.n_paths);
    std::vector<int> retries(c.n_paths);
    std::vector<double> corr(c.n_paths);
    std::vector<std::string> dumps(std::size_t(std::min<std::size_t>(c.n_paths, std::size_t(c.dump_paths))));
    for_each_path(bc, s, c.n_paths, c.threads, [&](std::size_t i, const BridgePath& p) {
      sup[i] = p.sup_dist_to_geodesic;
      in[i] = p.in_tube;
      retries[i] = p.retries;
      corr[i] = p.max_frame_correction;
      if (i < dumps.size()) dumps[i] = path_csv(p, s);
    });
    const TubeStatistics st = tube_statistics(sup, in);
    CompensatedSum mean;
    for (double d : sup) mean.add(d);
    const double msup = mean.value() / double(sup.size());
    const double xsup = *std::max_element(sup.begin(), sup.end());
    const int mret = *std::max_element(retries.begin(), retries.end());
    const double mcorr = *std::max_element(corr.begin(), corr.end());
    t.add_row({format_number(bc.lambda), std::to_string(c.n_paths), std::to_string(st.accepted.size()),
               format_number(st.acceptance), format_number(msup), format_number(xsup), std::to_string(mret),
               format_number(mcorr)});
    Json r = to_json(st);
    r["lambda"] = number(bc.lambda);
    r["seed"] = bc.seed;
    r["mean_sup_dist"] = number(msup);
    r["max_retries"] = mret;
    r["max_frame_correction"] = number(mcorr);
    r["warnings"] = Json::array();
    if (const std::string w = bc.step_warning(); !w.empty()) {
      r["warnings"].push_back(w);
      log << "warning: " << w << "\n";
    }
    rows.push_back(r);
    if (c.wants("csv"))
      for (std::size_t i = 0; i < dumps.size(); ++i)
        out.write("paths/lambda_" + format_number(bc.lambda) + "_path_" + std::to_string(i) + ".csv", dumps[i]);
    log << "lambda " << format_number(bc.lambda) << ": acceptance " << format_number(st.acceptance) << "\n";
  }
  j["bridge"] = rows;
  emit_json(out, c, "bridge.json", j);
  emit_csv(out, c, "bridge.csv", t);
  return kExitOk;
}

// semiclassical: convergence study, ground-state check, log-Sobolev diagnostic
int cmd_semiclassical(const RunConfig& c, OutputDir& out, std::ostream& log) {
  const Pipeline p = [&] {
    Timer t(out, "operators");
    return build_pipeline(c, c.m_operator);
  }();
  require_assumptions(p.setup);
  const TrialFunction tr = build_trial(p.ctx, p.ops, c.eps);
  if (tr.shortfall)
    log << "warning: trial quality " << format_number(tr.eps_quality) << " exceeds eps " << format_number(c.eps) << "\n";
  const McConfig mc = mc_config(c);
  const CutoffSpec cut{c.effective_kappa_cut()};
  ConvergenceStudy st;
  {
    Timer t(out, "convergence_study");
    st = convergence_study(p.setup, tr, c.lambdas, c.n_paths, c.n_xi_paths, cut, mc);
  }
  Json gs = Json::array();
  {
    Timer t(out, "ground_state");
    for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
      McConfig m = mc;
      m.seed = derive_seed(c.seed, 1000 + k);
      gs.push_back(to_json(ground_state_gap_check(p.setup, c.lambdas[k], c.n_paths, c.delta_ground, m)));
    }
  }
  Json lsi;
  {
    Timer t(out, "lsi");
    McConfig m = mc;
    m.seed = derive_seed(c.seed, 2000);
    lsi = to_json(lsi_diagnostic(tr, p.setup, c.lambdas.back(), c.n_paths, cut, st.rows.back().xi.xi_hat, m));
  }
  Json pert;
  {
    Timer t(out, "perturbation");
    McConfig m = mc;
    m.seed = derive_seed(c.seed, 3000);
    pert = to_json(perturbation_fit(p.setup, c.lambdas.back(), c.n_xi_paths, c.delta, m));
  }
  Json j = config_json(c);
  j["trial"] = {{"e0", number(tr.e0)},
                {"main_norm_sq", number(tr.main_norm_sq)},
                {"s_norm_sq", number(tr.s_norm_sq)},
                {"eps_quality", number(tr.eps_quality)},
                {"shortfall", tr.shortfall}};
  j["kappa_cut"] = number(cut.kappa_cut);
  j["study"] = to_json(st);
  j["ground_state"] = gs;
  j["lsi"] = lsi;
  j["perturbation"] = pert;
  emit_json(out, c, "convergence.json", j);
  if (c.wants("csv")) out.write("convergence.csv", st.csv());
  if (c.wants("svg"))
    out.write("convergence.svg", convergence_svg(st, std::string("quotient / lambda on ") + to_string(c.kind)));
  for (const auto& r : st.rows)
    log << "lambda " << format_number(r.lambda) << ": quotient/lambda " << format_number(r.upper.quotient_over_lambda)
        << " +- " << format_number(r.upper.quotient_se) << ", 1/xi^2 " << format_number(r.lower_diag) << "\n";
  for (const auto& s : st.steps)
    log << "step " << format_number(s.lambda_from) << " -> " << format_number(s.lambda_to) << ": " << s.verdict << "\n";
  return kExitOk;
}

// sweep: e0 across operator grids with Richardson extrapolation
int cmd_sweep(const RunConfig& c, OutputDir& out, std::ostream& log) {
  CsvTable t({"m", "e0", "e0_transverse", "op_norm_sinv_adj", "duality_defect", "max_factorization_residual"});
  Json rows = Json::array();
  std::vector<int> ms;
  std::vector<double> e0s;
  for (int m : c.m_sweep) {
    Timer tm(out, "sweep m=" + std::to_string(m));
    const Pipeline p = build_pipeline(c, m);
    SpectralReport rep = compute_e0(p.ops);
    rep.m = m;
    rep.residuals = verify_identities(p.ops, rep);
    double mx = 0;
    for (const auto& k : kFactorization) mx = std::max(mx, rep.residuals.at(k));
    t.add_row({std::to_string(m), format_number(rep.e0), format_number(rep.e0_transverse),
               format_number(rep.op_norm_sinv_adj), format_number(rep.residuals.at("duality")), format_number(mx)});
    rows.push_back(to_json(rep));
    ms.push_back(m);
    e0s.push_back(rep.e0);
    log << "m " << m << ": e0 " << format_number(rep.e0) << "\n";
  }
  Json j = config_json(c);
  j["sweep"] = rows;
  // second-order Richardson on consecutive doublings
  Json rich = Json::array();
  for (std::size_t i = 0; i + 1 < ms.size(); ++i)
    if (ms[i + 1] == 2 * ms[i]) rich.push_back({{"m", ms[i + 1]}, {"e0", number((4 * e0s[i + 1] - e0s[i]) / 3)}});
  j["richardson"] = rich;
  emit_json(out, c, "sweep.json", j);
  emit_csv(out, c, "sweep.csv", t);
  return kExitOk;
}

// selftest: small-size invariant suite
int cmd_selftest(const RunConfig& c, OutputDir& out, std::ostream& log) {
  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  auto add = [&](std::string name, bool pass, std::string detail) {
    log << (pass ? "pass  " : "FAIL  ") << name << "  " << detail << "\n";
    checks.push_back({std::move(name), pass, std::move(detail)});
  };
  auto run = [&](const std::string& name, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      add(name, false, std::string("exception: ") + e.what());
    }
  };
  RunConfig base = c;
  base.m_operator = 64;
  base.m_ode = 512;
  base.rho = 1;
  base.r_tube = 1.1;
  base.n = 2;
  const std::size_t N = 1000;
  McConfig mc = mc_config(base);
  mc.drift = DriftMode::semiclassical;

  auto with_space = [&](SpaceKind k, double kappa) {
    RunConfig r = base;
    r.kind = k;
    r.kappa = kappa;
    return r;
  };
  const double e0_sphere = 1 - 1 / (std::numbers::pi * std::numbers::pi);

  run("assumptions sphere r_tube 1.1 pass, 1.3 fail", [&] {
    RunConfig bad = with_space(SpaceKind::sphere, 1);
    bad.r_tube = 1.3;
    const bool ok = check_assumptions(make_setup(with_space(SpaceKind::sphere, 1))).pass() &&
                    !check_assumptions(make_setup(bad)).pass();
    add("assumptions sphere r_tube 1.1 pass, 1.3 fail", ok, "");
  });
  Pipeline sphere{}, flat{};
  run("operators", [&] {
    Timer t(out, "selftest operators");
    sphere = build_pipeline(with_space(SpaceKind::sphere, 1), 64);
    flat = build_pipeline(with_space(SpaceKind::flat, 0), 64);
  });
  run("spectra", [&] {
    const auto rf = compute_e0(flat.ops), rs = compute_e0(sphere.ops);
    add("flat e0 = 1", std::abs(rf.e0 - 1) <= 1e-10, "e0 = " + format_number(rf.e0));
    add("sphere e0 = 1 - 1/pi^2", std::abs(rs.e0 - e0_sphere) <= 5e-4, "e0 = " + format_number(rs.e0));
    const auto res = verify_identities(sphere.ops, rs);
    double mx = 0;
    for (const auto& k : kFactorization) mx = std::max(mx, res.at(k));
    add("factorization residuals", mx <= kFactorTol, "max = " + format_number(mx));
    add("spectral duality", res.at("duality") <= kDualityTol, "defect = " + format_number(res.at("duality")));
  });
  run("flat exact bridge quotient", [&] {
    const auto tr = build_trial(flat.ctx, flat.ops, 1e-3);
    McConfig m = mc;
    m.drift = DriftMode::exact_flat;
    const auto r = estimate_rayleigh(tr, flat.setup, 64, N, CutoffSpec{0.55}, m);
    add("flat exact bridge quotient", std::abs(r.quotient_over_lambda - 1) <= 3 * r.quotient_se,
        format_number(r.quotient_over_lambda) + " +- " + format_number(r.quotient_se));
  });
  run("sphere quotient at lambda 256", [&] {
    const auto tr = build_trial(sphere.ctx, sphere.ops, 1e-3);
    const auto r = estimate_rayleigh(tr, sphere.setup, 256, N, CutoffSpec{0.55}, mc);
    const auto r2 = estimate_rayleigh(tr, sphere.setup, 256, N, CutoffSpec{0.55}, mc);
    add("sphere quotient at lambda 256", std::abs(r.quotient_over_lambda - tr.e0) <= std::max(0.05, 3 * r.quotient_se),
        format_number(r.quotient_over_lambda) + " +- " + format_number(r.quotient_se));
    add("same seed, same estimate", r.quotient_over_lambda == r2.quotient_over_lambda &&
                                        r.numerator == r2.numerator && r.denominator == r2.denominator, "");
  });
  run("coefficient limit ratio", [&] {
    const auto geo = geodesic_path(sphere.setup, base.m_path);
    const auto J0 = reference_J0(sphere.setup, base.m_path, {});
    const MatrixXd I = MatrixXd::Identity(J0.mat.rows(), J0.mat.cols());
    const double d64 = op_norm(MatrixXd(coh_matrix(geo, sphere.setup, 64).A.mat - J0.mat - I));
    const double d256 = op_norm(MatrixXd(coh_matrix(geo, sphere.setup, 256).A.mat - J0.mat - I));
    add("coefficient limit ratio", std::abs(d64 / d256 - 4) <= 1.2, "ratio = " + format_number(d64 / d256));
  });
  run("invalid config rejected", [&] {
    bool rejected = false;
    try {
      parse_config("schema_version = 1\n[space]\nkind = torus\n");
    } catch (const ConfigError&) {
      rejected = true;
    }
    add("invalid config rejected", rejected, "");
  });

  Json arr = Json::array();
  CsvTable t({"check", "status", "detail"});
  bool all = true;
  for (const auto& ch : checks) {
    arr.push_back({{"check", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
    t.add_row({ch.name, ch.pass ? "pass" : "fail", ch.detail});
    all = all && ch.pass;
  }
  emit_json(out, c, "selftest.json", Json{{"all_pass", all}, {"checks", arr}});
  emit_csv(out, c, "selftest.csv", t);
  log << (all ? "selftest: all checks passed\n" : "selftest: FAILED\n");
  return all ? kExitOk : kExitNumerical;
}

using Handler = int (*)(const RunConfig&, OutputDir&, std::ostream&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"geometry-check", cmd_geometry}, {"spectrum", cmd_spectrum},           {"identities", cmd_identities},
      {"bridge", cmd_bridge},           {"semiclassical", cmd_semiclassical}, {"sweep", cmd_sweep},
      {"selftest", cmd_selftest}};
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
  const auto it = handlers().find(name);
  if (it == handlers().end()) throw ConfigError("unknown command '" + name + "'");
  OutputDir out(cfg, name);
  int code = kExitOk;
  try {
    code = it->second(cfg, out, log);
  } catch (...) {
    out.finish();
    throw;
  }
  out.finish();
  return code;
}

}  // namespace geospec::cli
