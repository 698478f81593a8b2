#pragma once

#include <chrono>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace geospec::cli {

// Residuals or estimates outside their tolerance; exit code 1.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0, kExitNumerical = 1, kExitInvalid = 2;

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::string& content);

// Collects artifacts under one directory and writes manifest.json plus timings.log.
class OutputDir {
 public:
  OutputDir(const RunConfig& cfg, std::string command);
  void write(const std::string& relative, const std::string& content);
  void stage(const std::string& name, double seconds) { timings_.emplace_back(name, seconds); }
  void finish();

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::string root_;
  std::vector<std::pair<std::string, std::string>> artifacts_;  // path, hash
  std::vector<std::pair<std::string, double>> timings_;
};

// Runs one subcommand; returns the process exit code. Errors are mapped by the caller.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out);

const std::vector<std::string>& command_names();

}  // namespace geospec::cli
