#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "geospec/geometry.hpp"

using namespace geospec::cli;

int main(int argc, char** argv) {
  CLI::App app{"Path-space spectral gap toolkit: geometry, operators, bridges and semiclassical estimates"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;

  const char* descriptions[][2] = {
      {"geometry-check", "check the tube assumptions for the configured setup"},
      {"spectrum", "e0, operator spectrum and identity residuals at grids.m_operator"},
      {"identities", "factorization residuals at m/2 and m"},
      {"bridge", "sample bridges and report tube acceptance"},
      {"semiclassical", "convergence study of quotient/lambda toward e0"},
      {"sweep", "e0 across grids.m_sweep with Richardson extrapolation"},
      {"selftest", "small-size invariant suite"}};
  for (const auto& d : descriptions) {
    CLI::App* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--set", ov.sets, "override, section.key=value (repeatable)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--threads", threads, "worker threads (0: machine parallelism)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--threads")) ov.threads = threads;
  if (sub->count("--out")) ov.out = out;

  try {
    const RunConfig cfg = resolve_config(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path),
                                         ov, std::getenv("GEOSPEC_SEED"));
    return run_command(sub->get_name(), cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
