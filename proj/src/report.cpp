#include "geospec/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace geospec {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json to_json(const AssumptionReport& r) {
  Json j;
  j["pass"] = r.pass();
  Json cl = Json::array();
  for (const auto& c : r.clauses) cl.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["clauses"] = cl;
  j["inf_tangential_hessian"] = number(r.inf_tangential);
  j["max_admissible_r_tube"] = number(r.max_admissible_r_tube);
  return j;
}

Json to_json(const SpectralReport& r) {
  Json j;
  j["m"] = r.m;
  j["e0"] = number(r.e0);
  j["e0_transverse"] = number(r.e0_transverse);
  j["op_norm_sinv_adj"] = number(r.op_norm_sinv_adj);
  j["e0_dual"] = number(r.e0_dual);
  j["duality_defect"] = number(std::abs(r.e0 * r.op_norm_sinv_adj * r.op_norm_sinv_adj - 1));
  j["relative_gap"] = number(r.relative_gap);
  Json sp = Json::array();
  for (double v : r.spectrum) sp.push_back(number(v));
  j["spectrum"] = sp;
  Json res = Json::object();
  for (const auto& [k, v] : r.residuals) res[k] = number(v);
  j["residuals"] = res;
  return j;
}

Json to_json(const TubeStatistics& s) {
  Json j;
  j["total"] = s.total;
  j["accepted"] = s.accepted.size();
  j["acceptance"] = number(s.acceptance);
  Json e = Json::array(), c = Json::array();
  for (double v : s.histogram_edges) e.push_back(number(v));
  for (auto v : s.histogram_counts) c.push_back(v);
  j["sup_distance_histogram"] = {{"edges", e}, {"counts", c}};
  return j;
}

Json to_json(const RayleighEstimate& r) {
  Json j;
  j["lambda"] = number(r.lambda);
  j["n_paths"] = r.n_paths;
  j["accepted"] = r.accepted;
  j["acceptance"] = number(r.acceptance);
  j["numerator"] = number(r.numerator);
  j["numerator_se"] = number(r.numerator_se);
  j["denominator"] = number(r.denominator);
  j["denominator_se"] = number(r.denominator_se);
  j["cutoff_term"] = number(r.cutoff_term);
  j["cutoff_active_fraction"] = number(r.cutoff_active_fraction);
  j["quotient_over_lambda"] = number(r.quotient_over_lambda);
  j["quotient_se"] = number(r.quotient_se);
  j["main_over_lambda"] = number(r.main_over_lambda);
  j["remainder_sq_mean"] = number(r.remainder_sq_mean);
  j["mean_F"] = number(r.mean_F);
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const PerturbationFit& f) {
  Json j;
  j["lambda"] = number(f.lambda);
  j["delta"] = number(f.delta);
  j["C"] = number(f.C);
  j["min_ratio_over_C"] = number(f.min_rel);
  j["max_ratio_over_C"] = number(f.max_rel);
  j["accepted"] = f.accepted;
  j["sampled"] = f.sampled;
  Json rows = Json::array();
  for (std::size_t i = 0; i < f.ratio.size(); ++i)
    rows.push_back({{"sup_C_eps", number(f.sup_C[i])}, {"j_distance", number(f.distance[i])}});
  j["paths"] = rows;
  return j;
}

Json to_json(const XiEstimate& x, bool with_samples) {
  Json j;
  j["lambda"] = number(x.lambda);
  j["xi_hat"] = number(x.xi_hat);
  j["mean"] = number(x.mean);
  j["sd"] = number(x.sd);
  j["accepted"] = x.accepted;
  j["sampled"] = x.sampled;
  Json q = Json::object();
  const char* names[] = {"min", "q10", "q25", "median", "q75", "q90", "max"};
  for (std::size_t i = 0; i < x.quantiles.size() && i < 7; ++i) q[names[i]] = number(x.quantiles[i]);
  j["quantiles"] = q;
  if (with_samples) {
    Json s = Json::array();
    for (double v : x.norms) s.push_back(number(v));
    j["op_norms"] = s;
  }
  return j;
}

Json to_json(const GroundStateResult& g) {
  return {{"lambda", number(g.lambda)},
          {"estimate", number(g.estimate)},
          {"se", number(g.se)},
          {"transition_paths", g.transition_paths},
          {"derivative_support_unsampled", g.all_inside}};
}

Json to_json(const LsiReport& l) {
  return {{"lambda", number(l.lambda)}, {"xi", number(l.xi)},         {"lhs", number(l.lhs)},
          {"lhs_se", number(l.lhs_se)}, {"rhs", number(l.rhs)},       {"rhs_se", number(l.rhs_se)},
          {"slack", number(l.slack)},   {"slack_se", number(l.slack_se)}, {"holds", l.holds},
          {"note", l.note}};
}

Json to_json(const ConvergenceStudy& st) {
  Json j;
  j["e0_ref"] = number(st.e0_ref);
  Json rows = Json::array();
  for (const auto& r : st.rows) {
    Json o;
    o["lambda"] = number(r.lambda);
    o["upper"] = to_json(r.upper);
    o["xi"] = to_json(r.xi);
    o["lower_diag"] = number(r.lower_diag);
    o["lower_diag_linear"] = number(r.lower_diag_linear);
    o["e0_ref"] = number(r.e0_ref);
    rows.push_back(o);
  }
  j["rows"] = rows;
  Json steps = Json::array();
  for (const auto& s : st.steps)
    steps.push_back({{"lambda_from", number(s.lambda_from)},
                     {"lambda_to", number(s.lambda_to)},
                     {"gap_from", number(s.gap_from)},
                     {"gap_to", number(s.gap_to)},
                     {"decrease", number(s.decrease)},
                     {"se", number(s.se)},
                     {"verdict", s.verdict}});
  j["steps"] = steps;
  return j;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width does not match header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::escape(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += escape(r[i]);
    }
    out += "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << x;
  return os.str();
}

std::string tick(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace

std::string svg_plot(const PlotSpec& p) {
  const double L = 70, R = 150, T = 40, B = 55;
  const double W = p.width - L - R, H = p.height - T - B;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto tx = [&](double x) { return p.log_x ? std::log10(x) : x; };
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.err.empty() ? 0 : s.err[i];
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  for (const auto& h : p.hlines) {
    y0 = std::min(y0, h.second);
    y1 = std::max(y1, h.second);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  const double pad = y1 > y0 ? 0.08 * (y1 - y0) : 0.5;
  y0 -= pad;
  y1 += pad;
  auto X = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * W; };
  auto Y = [&](double y) { return T + (y1 - y) / (y1 - y0) * H; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << p.width << "\" height=\"" << p.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(L + W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(p.title)
     << "</text>\n";
  os << "<rect x=\"" << fmt(L) << "\" y=\"" << fmt(T) << "\" width=\"" << fmt(W) << "\" height=\"" << fmt(H)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << fmt(L - 6) << "\" y=\"" << fmt(Y(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  std::vector<double> xt;
  for (const auto& s : p.series) xt.insert(xt.end(), s.x.begin(), s.x.end());
  std::sort(xt.begin(), xt.end());
  xt.erase(std::unique(xt.begin(), xt.end()), xt.end());
  for (double xv : xt)
    os << "<text x=\"" << fmt(X(xv)) << "\" y=\"" << fmt(T + H + 18) << "\" text-anchor=\"middle\">" << tick(xv)
       << "</text>\n";
  os << "<text x=\"" << fmt(L + W / 2) << "\" y=\"" << fmt(p.height - 12.0) << "\" text-anchor=\"middle\">"
     << xml_escape(p.xlabel) << "</text>\n";
  os << "<text transform=\"translate(16," << fmt(T + H / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(p.ylabel) << "</text>\n";
  double ly = T + 10;
  for (const auto& h : p.hlines) {
    os << "<line x1=\"" << fmt(L) << "\" x2=\"" << fmt(L + W) << "\" y1=\"" << fmt(Y(h.second)) << "\" y2=\""
       << fmt(Y(h.second)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << fmt(L + W + 8) << "\" y=\"" << fmt(ly + 4) << "\" fill=\"gray\">" << xml_escape(h.first)
       << "</text>\n";
    ly += 18;
  }
  for (const auto& s : p.series) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts << (i ? " " : "") << fmt(X(s.x[i])) << ',' << fmt(Y(s.y[i]));
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << pts.str()
       << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.err.empty())
        os << "<line x1=\"" << fmt(X(s.x[i])) << "\" x2=\"" << fmt(X(s.x[i])) << "\" y1=\""
           << fmt(Y(s.y[i] - s.err[i])) << "\" y2=\"" << fmt(Y(s.y[i] + s.err[i])) << "\" stroke=\"" << s.color
           << "\"/>\n";
      os << "<circle cx=\"" << fmt(X(s.x[i])) << "\" cy=\"" << fmt(Y(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
         << "\"/>\n";
    }
    os << "<line x1=\"" << fmt(L + W + 8) << "\" x2=\"" << fmt(L + W + 24) << "\" y1=\"" << fmt(ly) << "\" y2=\""
       << fmt(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(L + W + 28) << "\" y=\"" << fmt(ly + 4) << "\">" << xml_escape(s.label) << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  return os.str();
}

std::string convergence_svg(const ConvergenceStudy& st, const std::string& title) {
  PlotSpec p;
  p.title = title;
  p.xlabel = "lambda";
  p.ylabel = "quotient / lambda";
  p.log_x = true;
  PlotSeries up{"upper (Rayleigh)", "#1f77b4", {}, {}, {}};
  PlotSeries lo{"1 / xi^2", "#d62728", {}, {}, {}};
  for (const auto& r : st.rows) {
    up.x.push_back(r.lambda);
    up.y.push_back(r.upper.quotient_over_lambda);
    up.err.push_back(r.upper.quotient_se);
    lo.x.push_back(r.lambda);
    lo.y.push_back(r.lower_diag);
  }
  p.series = {up, lo};
  p.hlines = {{"e0 = " + tick(st.e0_ref), st.e0_ref}};
  return svg_plot(p);
}

}  // namespace geospec
