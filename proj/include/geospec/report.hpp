#pragma once

#include <string>
#include <vector>

#include "geospec/semiclassical.hpp"
#include "json.hpp"

namespace geospec {

using Json = nlohmann::ordered_json;

// Non-finite values become null.
Json number(double x);

Json to_json(const AssumptionReport& r);
Json to_json(const SpectralReport& r);
Json to_json(const TubeStatistics& s);
Json to_json(const RayleighEstimate& r);
Json to_json(const XiEstimate& x, bool with_samples = false);
Json to_json(const GroundStateResult& g);
Json to_json(const PerturbationFit& f);
Json to_json(const LsiReport& l);
Json to_json(const ConvergenceStudy& st);

// Shortest round-trip decimal form.
std::string format_number(double x);

// RFC 4180: CRLF line ends, fields quoted only when needed.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> row);
  std::string str() const;
  static std::string escape(const std::string& field);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> x, y, err;  // err may be empty
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool log_x = false;
  std::vector<PlotSeries> series;
  std::vector<std::pair<std::string, double>> hlines;  // labelled reference levels
  int width = 640, height = 420;
};

std::string svg_plot(const PlotSpec& spec);
std::string convergence_svg(const ConvergenceStudy& st, const std::string& title);

}  // namespace geospec
