#include "config.hpp"

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace geospec::cli {

namespace pt = boost::property_tree;

namespace {

template <class T>
T parse_scalar(const std::string& key, const std::string& v) {
  try {
    return boost::lexical_cast<T>(boost::trim_copy(v));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config: cannot parse " + key + " = '" + v + "'");
  }
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::string> parts;
  boost::split(parts, v, boost::is_any_of(","));
  std::vector<T> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(parse_scalar<T>(key, p));
  }
  return out;
}

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_same_v<T, std::string>) s += v[i];
    else if constexpr (std::is_floating_point_v<T>) s += num(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      {"schema_version",
       {[](RunConfig& c, const std::string& v) { c.schema_version = parse_scalar<int>("schema_version", v); },
        [](const RunConfig& c) { return std::to_string(c.schema_version); }}},
      {"space.kind",
       {[](RunConfig& c, const std::string& v) {
          try {
            c.kind = parse_space_kind(boost::trim_copy(v));
          } catch (const std::exception&) {
            throw ConfigError("config: space.kind must be flat, sphere or hyperbolic (got '" + v + "')");
          }
        },
        [](const RunConfig& c) { return std::string(to_string(c.kind)); }}},
      {"space.kappa", {[](RunConfig& c, const std::string& v) { c.kappa = parse_scalar<double>("space.kappa", v); },
                       [](const RunConfig& c) { return num(c.kappa); }}},
      {"space.n", {[](RunConfig& c, const std::string& v) { c.n = parse_scalar<int>("space.n", v); },
                   [](const RunConfig& c) { return std::to_string(c.n); }}},
      {"setup.rho", {[](RunConfig& c, const std::string& v) { c.rho = parse_scalar<double>("setup.rho", v); },
                     [](const RunConfig& c) { return num(c.rho); }}},
      {"setup.r_tube",
       {[](RunConfig& c, const std::string& v) { c.r_tube = parse_scalar<double>("setup.r_tube", v); },
        [](const RunConfig& c) { return num(c.r_tube); }}},
      {"grids.m_operator",
       {[](RunConfig& c, const std::string& v) { c.m_operator = parse_scalar<int>("grids.m_operator", v); },
        [](const RunConfig& c) { return std::to_string(c.m_operator); }}},
      {"grids.m_path",
       {[](RunConfig& c, const std::string& v) { c.m_path = parse_scalar<int>("grids.m_path", v); },
        [](const RunConfig& c) { return std::to_string(c.m_path); }}},
      {"grids.m_ode", {[](RunConfig& c, const std::string& v) { c.m_ode = parse_scalar<int>("grids.m_ode", v); },
                       [](const RunConfig& c) { return std::to_string(c.m_ode); }}},
      {"grids.m_sweep",
       {[](RunConfig& c, const std::string& v) { c.m_sweep = parse_list<int>("grids.m_sweep", v); },
        [](const RunConfig& c) { return join(c.m_sweep); }}},
      {"mc.lambdas", {[](RunConfig& c, const std::string& v) { c.lambdas = parse_list<double>("mc.lambdas", v); },
                      [](const RunConfig& c) { return join(c.lambdas); }}},
      {"mc.n_paths",
       {[](RunConfig& c, const std::string& v) { c.n_paths = parse_scalar<std::size_t>("mc.n_paths", v); },
        [](const RunConfig& c) { return std::to_string(c.n_paths); }}},
      {"mc.n_xi_paths",
       {[](RunConfig& c, const std::string& v) { c.n_xi_paths = parse_scalar<std::size_t>("mc.n_xi_paths", v); },
        [](const RunConfig& c) { return std::to_string(c.n_xi_paths); }}},
      {"mc.seed", {[](RunConfig& c, const std::string& v) { c.seed = parse_scalar<std::uint64_t>("mc.seed", v); },
                   [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"mc.threads", {[](RunConfig& c, const std::string& v) { c.threads = parse_scalar<int>("mc.threads", v); },
                      [](const RunConfig& c) { return std::to_string(c.threads); }}},
      {"mc.drift", {[](RunConfig& c, const std::string& v) { c.drift = boost::trim_copy(v); },
                    [](const RunConfig& c) { return c.drift; }}},
      {"trial.eps", {[](RunConfig& c, const std::string& v) { c.eps = parse_scalar<double>("trial.eps", v); },
                     [](const RunConfig& c) { return num(c.eps); }}},
      {"trial.kappa_cut",
       {[](RunConfig& c, const std::string& v) { c.kappa_cut = parse_scalar<double>("trial.kappa_cut", v); },
        [](const RunConfig& c) { return num(c.kappa_cut); }}},
      {"trial.delta", {[](RunConfig& c, const std::string& v) { c.delta = parse_scalar<double>("trial.delta", v); },
                       [](const RunConfig& c) { return num(c.delta); }}},
      {"trial.delta_ground",
       {[](RunConfig& c, const std::string& v) { c.delta_ground = parse_scalar<double>("trial.delta_ground", v); },
        [](const RunConfig& c) { return num(c.delta_ground); }}},
      {"output.directory", {[](RunConfig& c, const std::string& v) { c.directory = boost::trim_copy(v); },
                            [](const RunConfig& c) { return c.directory; }}},
      {"output.formats",
       {[](RunConfig& c, const std::string& v) { c.formats = parse_list<std::string>("output.formats", v); },
        [](const RunConfig& c) { return join(c.formats); }}},
      {"output.dump_paths",
       {[](RunConfig& c, const std::string& v) { c.dump_paths = parse_scalar<int>("output.dump_paths", v); },
        [](const RunConfig& c) { return std::to_string(c.dump_paths); }}},
  };
  return f;
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(cfg, value);
}

}  // namespace

bool RunConfig::wants(const std::string& fmt) const {
  return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (schema_version != kSchemaVersion)
    fail("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
         std::to_string(kSchemaVersion) + ")");
  if (n < 2) fail("space.n must be >= 2");
  if (kind == SpaceKind::flat && kappa != 0) fail("space.kappa must be 0 for flat space");
  if (kind == SpaceKind::sphere && !(kappa > 0)) fail("space.kappa must be positive for the sphere");
  if (kind == SpaceKind::hyperbolic && !(kappa < 0)) fail("space.kappa must be negative for hyperbolic space");
  if (!(rho > 0)) fail("setup.rho must be positive");
  if (!(r_tube > 0)) fail("setup.r_tube must be positive");
  if (m_operator < 16) fail("grids.m_operator must be >= 16");
  if (m_path < 50) fail("grids.m_path must be >= 50");
  if (m_ode < 16) fail("grids.m_ode must be >= 16");
  if (m_sweep.empty()) fail("grids.m_sweep must not be empty");
  for (int m : m_sweep)
    if (m < 16) fail("grids.m_sweep entries must be >= 16");
  if (lambdas.empty()) fail("mc.lambdas must not be empty");
  for (double l : lambdas)
    if (!(l > 0)) fail("mc.lambdas entries must be positive");
  if (n_paths < 2) fail("mc.n_paths must be >= 2");
  if (n_xi_paths < 1) fail("mc.n_xi_paths must be >= 1");
  if (threads < 0) fail("mc.threads must be >= 0");
  if (drift != "semiclassical" && drift != "exact_flat") fail("mc.drift must be semiclassical or exact_flat");
  if (drift == "exact_flat" && kind != SpaceKind::flat) fail("mc.drift = exact_flat needs flat space");
  if (!(eps > 0)) fail("trial.eps must be positive");
  if (kappa_cut < 0) fail("trial.kappa_cut must be >= 0");
  if (!(delta > 0 && delta < 1)) fail("trial.delta must lie in (0, 1)");
  if (!(delta_ground > 0)) fail("trial.delta_ground must be positive");
  if (directory.empty()) fail("output.directory must not be empty");
  for (const auto& f : formats)
    if (f != "csv" && f != "json" && f != "svg") fail("output.formats entries must be csv, json or svg");
  if (dump_paths < 0) fail("output.dump_paths must be >= 0");
}

std::string RunConfig::to_ini(bool with_directory) const {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string top;
  for (const auto& [key, f] : fields()) {
    if (!with_directory && key == "output.directory") continue;
    const auto dot = key.find('.');
    if (dot == std::string::npos) top += key + " = " + f.get(*this) + "\n";
    else sections[key.substr(0, dot)][key.substr(dot + 1)] = f.get(*this);
  }
  std::string out = top;
  for (const auto& [sec, kv] : sections) {
    out += "\n[" + sec + "]\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  bool has_version = false;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      set_field(cfg, name, node.data());
      if (name == "schema_version") has_version = true;
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("config: nested value under " + name + "." + key);
      set_field(cfg, name + "." + key, leaf.data());
    }
  }
  if (!has_version) throw ConfigError("config: missing schema_version");
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("config: schema_version " + std::to_string(cfg.schema_version) + " is not supported");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& a) {
  const auto eq = a.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects section.key=value (got '" + a + "')");
  set_field(cfg, boost::trim_copy(a.substr(0, eq)), a.substr(eq + 1));
}

RunConfig resolve_config(const std::optional<std::string>& path, const Overrides& ov, const char* env_seed) {
  RunConfig cfg = path ? load_config(*path) : RunConfig{};
  if (env_seed && *env_seed) cfg.seed = parse_scalar<std::uint64_t>("GEOSPEC_SEED", env_seed);
  for (const auto& s : ov.sets) apply_override(cfg, s);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.out) cfg.directory = *ov.out;
  cfg.validate();
  return cfg;
}

}  // namespace geospec::cli
