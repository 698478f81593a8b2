#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace geospec::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("geospec_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config parsing, schema and validation") {
  const auto c = parse_config("schema_version = 1\n[space]\nkind = hyperbolic\nkappa = -0.5\nn = 3\n"
                              "[mc]\nlambdas = 8, 32\nseed = 42\n");
  CHECK(c.kind == geospec::SpaceKind::hyperbolic);
  CHECK(c.kappa == -0.5);
  CHECK(c.n == 3);
  CHECK(c.lambdas == std::vector<double>{8, 32});
  CHECK(c.seed == 42);
  CHECK(c.m_path == 200);  // untouched keys keep their defaults
  CHECK_THROWS_AS(parse_config("[space]\nkind = sphere\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[space]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[nonsense]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[space]\nkind = torus\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[space]\nn = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[space]\nn = 1\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("schema_version = 1\n[space]\nkind = flat\n").validate(), ConfigError);
  CHECK(RunConfig{}.effective_kappa_cut() == doctest::Approx(0.55));
}

TEST_CASE("canonical INI round trips") {
  RunConfig c;
  apply_override(c, "mc.seed=77");
  apply_override(c, "grids.m_sweep=32,64");
  apply_override(c, "output.formats=json");
  const auto d = parse_config(c.to_ini());
  CHECK(d.to_ini() == c.to_ini());
  CHECK(d.seed == 77);
  CHECK(d.wants("json"));
  CHECK_FALSE(d.wants("svg"));
  CHECK(c.to_ini(false).find("directory") == std::string::npos);
  CHECK_THROWS_AS(apply_override(c, "mc.seed"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "mc.nothing=1"), ConfigError);
}

TEST_CASE("flags override the environment, which overrides the file") {
  const fs::path dir = scratch_dir("precedence");
  fs::create_directories(dir);
  const fs::path file = dir / "run.ini";
  std::ofstream(file) << "schema_version = 1\n[mc]\nseed = 5\nthreads = 2\n";
  Overrides none;
  CHECK(resolve_config(file.string(), none, nullptr).seed == 5);
  CHECK(resolve_config(file.string(), none, "9").seed == 9);
  Overrides flag;
  flag.seed = 11;
  flag.threads = 1;
  flag.out = "elsewhere";
  flag.sets = {"space.kappa=0.5"};
  const auto c = resolve_config(file.string(), flag, "9");
  CHECK(c.seed == 11);
  CHECK(c.threads == 1);
  CHECK(c.directory == "elsewhere");
  CHECK(c.kappa == 0.5);
  CHECK(resolve_config(std::nullopt, none, nullptr).seed == 1);
  CHECK_THROWS_AS(resolve_config(std::nullopt, none, "abc"), ConfigError);
  CHECK_THROWS_AS(resolve_config((dir / "missing.ini").string(), none, nullptr), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("git blob hashes") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello world\n") == "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
}

TEST_CASE("output directory confines artifacts and writes a manifest") {
  const fs::path dir = scratch_dir("outdir");
  RunConfig c;
  c.directory = dir.string();
  OutputDir out(c, "test");
  CHECK_THROWS_AS(out.write("/etc/passwd", "x"), std::invalid_argument);
  CHECK_THROWS_AS(out.write("../escape.txt", "x"), std::invalid_argument);
  out.write("b.txt", "hello world\n");
  out.write("sub/a.txt", "");
  out.stage("stage", 0.5);
  out.finish();
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["command"] == "test");
  CHECK(m["schema_version"] == 1);
  REQUIRE(m["artifacts"].size() == 2);
  CHECK(m["artifacts"][0]["path"] == "b.txt");
  CHECK(m["artifacts"][0]["sha1"] == "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
  CHECK(m["artifacts"][1]["path"] == "sub/a.txt");
  CHECK(fs::exists(dir / "timings.log"));
  fs::remove_all(dir);
}

TEST_CASE("geometry-check exit codes") {
  const fs::path dir = scratch_dir("geometry");
  RunConfig c;
  c.directory = dir.string();
  std::ostringstream log;
  CHECK(run_command("geometry-check", c, log) == kExitOk);
  CHECK(fs::exists(dir / "geometry.json"));
  c.r_tube = 1.3;
  CHECK(run_command("geometry-check", c, log) == kExitInvalid);
  CHECK(log.str().find("Assumption (2)") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("selftest passes and reruns reproduce the manifest") {
  const fs::path dir = scratch_dir("selftest");
  RunConfig c;
  c.directory = dir.string();
  c.threads = 1;
  std::ostringstream log;
  REQUIRE(run_command("selftest", c, log) == kExitOk);
  const std::string first = slurp(dir / "manifest.json");
  fs::remove_all(dir);
  REQUIRE(run_command("selftest", c, log) == kExitOk);
  CHECK(slurp(dir / "manifest.json") == first);
  fs::remove_all(dir);
}

TEST_CASE("bridge command warns on coarse path grids") {
  const fs::path dir = scratch_dir("bridge_warn");
  RunConfig c;
  c.directory = dir.string();
  c.threads = 1;
  c.n_paths = 50;
  c.lambdas = {16, 64};
  std::ostringstream log;
  REQUIRE(run_command("bridge", c, log) == kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "bridge.json"));
  CHECK(j["bridge"][0]["warnings"].empty());
  CHECK(j["bridge"][1]["warnings"].size() == 1);
  CHECK(log.str().find("warning: bridge: m_steps / lambda") != std::string::npos);
  fs::remove_all(dir);
}
